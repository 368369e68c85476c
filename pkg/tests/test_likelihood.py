# tests/test_likelihood.py
import numpy as np
import pytest

from conftest import make_table
from dataset.response import normalize_response
from distributions.builtin import get_distribution
from errors import DataError, LikelihoodError
from model.likelihood import (
    build_context, loglik_terms, param_at, score_contributions, total_loglik,
)
from model.spec import ModelSpec

EXP = ModelSpec(get_distribution("exp"))


def exp_context(table, **kwargs):
    return build_context(EXP, normalize_response(table, "time", censorcol="delta", **kwargs))


def test_exponential_closed_form(exp_table):
    ctx = exp_context(exp_table)
    t = np.array(exp_table.column("time"))
    d = np.array(exp_table.column("delta"))
    beta = 0.4
    expected = np.sum(d * (-beta) - t * np.exp(-beta))
    assert total_loglik(np.array([beta]), ctx) == pytest.approx(expected, rel=1e-12)


def test_censoring_kinds_use_matching_terms():
    table = make_table(t1=[1.0, 2.0, None, 1.0], t2=[1.0, None, 2.0, 3.0])
    obs = normalize_response(table, "t1", t2col="t2")
    ctx = build_context(ModelSpec(get_distribution("weibull")), obs)
    theta = np.array([0.2, np.log(0.7)])
    dist = get_distribution("weibull")
    params = {"beta": 0.2, "sigma": 0.7}
    s = lambda t: np.exp(dist.log_survival(params, t))
    expected = [
        dist.log_density(params, 1.0),
        np.log(s(2.0)),
        np.log(1.0 - s(2.0)),
        np.log(s(1.0) - s(3.0)),
    ]
    assert np.allclose(loglik_terms(theta, ctx), expected, atol=1e-12)
    assert param_at(theta, ctx, 0) == pytest.approx(params)


def test_weights_multiply_terms(exp_table):
    n = len(exp_table)
    weighted = make_table(
        time=exp_table.column("time"), delta=exp_table.column("delta"), w=[2.0] * n,
    )
    plain = exp_context(exp_table)
    doubled = exp_context(weighted, weightcol="w")
    theta = np.array([0.1])
    assert total_loglik(theta, doubled) == pytest.approx(2.0 * total_loglik(theta, plain))


def test_vanishing_contribution_reports_index():
    table = make_table(time=[1.0, 1000.0], delta=[1.0, 0.0])
    ctx = exp_context(table)
    with pytest.raises(LikelihoodError) as info:
        loglik_terms(np.array([0.0]), ctx)
    assert info.value.index == 1


def test_empty_data_is_an_error():
    table = make_table(time=[None], delta=[1.0])
    ctx = exp_context(table)
    with pytest.raises(DataError):
        total_loglik(np.array([0.0]), ctx)


def test_score_contributions_match_analytic(exp_table):
    ctx = exp_context(exp_table)
    t = np.array(exp_table.column("time"))
    d = np.array(exp_table.column("delta"))
    beta = 0.3
    scores = score_contributions(np.array([beta]), ctx)
    assert scores.shape == (20, 1)
    assert np.allclose(scores[:, 0], -d + t * np.exp(-beta), atol=1e-7)


def test_missing_covariates_are_dropped_before_fitting():
    table = make_table(time=[1.0, 2.0, 3.0], delta=[1.0, 1.0, 0.0], age=[40.0, None, 50.0])
    obs = normalize_response(table, "time", censorcol="delta")
    ctx = build_context(ModelSpec(get_distribution("exp"), covars=("age",)), obs)
    assert ctx.n == 2
    assert ctx.observations.deletion_log == {"missing covariate": 1}
    assert ctx.designs["beta"].values.tolist() == [[1.0, 40.0], [1.0, 50.0]]


@pytest.mark.parametrize("t1", [0.4, 1.0, 2.5])
def test_narrow_interval_approaches_density(t1):
    width = 1e-6
    table = make_table(t1=[t1], t2=[t1 + width])
    ctx = build_context(ModelSpec(get_distribution("weibull")), normalize_response(table, "t1", t2col="t2"))
    theta = np.array([0.2, np.log(0.7)])
    density = np.exp(get_distribution("weibull").log_density({"beta": 0.2, "sigma": 0.7}, t1))
    (term,) = loglik_terms(theta, ctx)
    assert np.exp(term) / (density * width) == pytest.approx(1.0, abs=1e-3)


def test_duplicated_row_equals_weight_two():
    time, delta, x = [1.2, 0.7, 3.1], [1.0, 0.0, 1.0], [0.5, -1.0, 0.2]
    duplicated = make_table(time=time + time[:1], delta=delta + delta[:1], x=x + x[:1])
    weighted = make_table(time=time, delta=delta, x=x, w=[2.0, 1.0, 1.0])
    spec = ModelSpec(get_distribution("weibull"), covars=("x",))
    ctx_dup = build_context(spec, normalize_response(duplicated, "time", censorcol="delta"))
    ctx_w = build_context(spec, normalize_response(weighted, "time", censorcol="delta", weightcol="w"))
    theta = np.array([0.3, -0.4, np.log(0.9)])
    assert total_loglik(theta, ctx_w) == pytest.approx(total_loglik(theta, ctx_dup), rel=1e-12)
    dup_scores = score_contributions(theta, ctx_dup).sum(axis=0)
    w_scores = (ctx_w.weights[:, None] * score_contributions(theta, ctx_w)).sum(axis=0)
    assert np.allclose(w_scores, dup_scores, atol=1e-8)
