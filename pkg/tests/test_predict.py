# tests/test_predict.py
import numpy as np
import pytest

from config import DATA_DIR
from conftest import make_table, simulate_weibull
from dataset.loader import load_table
from dataset.response import normalize_response
from distributions.builtin import get_distribution
from errors import DataError, DesignError
from model.fit import fit_model
from model.likelihood import build_context
from model.optimizer import FitOptions
from model.predict import (
    CURVE_COLUMNS, PredictionRow, curve_records, predict_at, rows_from_table, tick_grid,
    trajectories, unique_rows,
)
from model.spec import ModelSpec


def fit_exp(table, **spec):
    obs = normalize_response(table, "time", censorcol="delta", stratacols=spec.pop("strata", None))
    ctx = build_context(ModelSpec(get_distribution(spec.pop("dist", "exp")), **spec), obs)
    return fit_model(ctx, FitOptions())


def test_exponential_prediction_closed_form(exp_table):
    fit = fit_exp(exp_table)
    beta, se_beta = fit.rows[0].estimate, fit.rows[0].se
    rows = [PredictionRow(1.0, ()), PredictionRow(2.5, ())]
    records = predict_at(fit, rows)
    for record, t in zip(records, (1.0, 2.5)):
        s = np.exp(-t * np.exp(-beta))
        assert record.survival == pytest.approx(s, rel=1e-10)
        assert record.hazard == pytest.approx(np.exp(-beta), rel=1e-10)
        assert record.survival_se == pytest.approx(t * np.exp(-beta) * s * se_beta, rel=1e-5)
        assert record.hazard_se == pytest.approx(np.exp(-beta) * se_beta, rel=1e-5)
        assert record.survival_lower == pytest.approx(record.survival - 1.959964 * record.survival_se, rel=1e-5)
        assert record.group == ""
        assert record.stratum is None


def test_trajectory_grid_and_constant_hazard(exp_table):
    fit = fit_exp(exp_table)
    (curve,) = trajectories(fit, [PredictionRow(1.0, ())], 5.0)
    assert curve.times.size == 100
    assert curve.times[0] == pytest.approx(0.05)
    assert curve.times[-1] == pytest.approx(5.0)
    assert np.allclose(curve.hazard, curve.hazard[0])
    assert np.all(np.diff(curve.survival) < 0)
    assert curve.has_bands
    assert np.all(curve.survival_lower <= curve.survival)
    assert np.all(curve.survival_upper <= 1.0)


def test_robust_changes_only_bands(weibull_table):
    regular = fit_exp(weibull_table, dist="weibull", covars=("x",))
    robust = fit_exp(weibull_table, dist="weibull", covars=("x",), robust=True)
    row = [PredictionRow(1.5, (("x", 0.3),))]
    (a,), (b,) = predict_at(regular, row), predict_at(robust, row)
    assert a.survival == pytest.approx(b.survival, rel=1e-8)
    assert a.hazard == pytest.approx(b.hazard, rel=1e-8)
    assert a.survival_se != pytest.approx(b.survival_se, rel=1e-3)


def test_bands_are_clamped():
    table = make_table(time=[1.0, 2.0, 3.0, 4.0, 5.0], delta=[1.0, 1.0, 1.0, 0.0, 0.0])
    fit = fit_exp(table)
    (record,) = predict_at(fit, [PredictionRow(0.01, ())])
    assert record.clamped
    assert record.survival_upper == 1.0
    assert record.survival_lower >= 0.0
    (curve,) = trajectories(fit, [PredictionRow(1.0, ())], 0.5)
    assert curve.clamped


def test_prediction_ordering_follows_coefficient_sign(example_table):
    fit = fit_exp(example_table, covars=("age", "sex"), refgrp=("male",))
    labels = [r.label for r in fit.rows]
    assert labels == ["Intercept", "age", "sex_female"]
    coef = fit.rows[2].estimate

    rows = rows_from_table(load_table(DATA_DIR / "pred.csv"), ["age", "sex"])
    female, male = predict_at(fit, rows)
    assert female.group == "sex=female, age=0"
    assert (female.survival > male.survival) == (coef > 0)
    assert female.to_dict()["covariates"] == {"sex": "female", "age": 0.0}


def test_stratified_prediction_orders_by_row_then_stratum(rng):
    first = simulate_weibull(rng, 60, 0.5, -0.7, 0.8)
    second = simulate_weibull(rng, 60, 1.0, -0.7, 0.8)
    table = make_table(
        time=first.column("time") + second.column("time"),
        delta=first.column("delta") + second.column("delta"),
        grp=["a"] * 60 + ["b"] * 60,
    )
    fit = fit_exp(table, strata=["grp"])
    records = predict_at(fit, [PredictionRow(1.0, ()), PredictionRow(2.0, ())])
    assert [(r.time, r.stratum) for r in records] == [(1.0, "a"), (1.0, "b"), (2.0, "a"), (2.0, "b")]
    assert records[0].group == "stratum=a"
    curves = trajectories(fit, [PredictionRow(1.0, ())], 3.0, bands=False)
    assert [c.group for c in curves] == ["stratum=a", "stratum=b"]


def test_rows_from_table_errors():
    with pytest.raises(DataError):
        rows_from_table(make_table(age=[1.0]), [])
    with pytest.raises(DesignError):
        rows_from_table(make_table(time=[1.0]), ["age"])
    with pytest.raises(DataError):
        rows_from_table(make_table(time=["soon"]), [])
    with pytest.raises(DataError):
        PredictionRow(0.0, ())


def test_unique_rows_ignore_time():
    rows = [
        PredictionRow(1.0, (("sex", "male"),)),
        PredictionRow(2.0, (("sex", "male"),)),
        PredictionRow(1.0, (("sex", "female"),)),
    ]
    assert [r.group for r in unique_rows(rows)] == ["sex=male", "sex=female"]


def test_tick_grid():
    assert tick_grid(2.0, 4).tolist() == [0.5, 1.0, 1.5, 2.0]
    with pytest.raises(DataError):
        tick_grid(0.0)


def test_curve_records_without_bands(exp_table):
    fit = fit_exp(exp_table)
    curves = trajectories(fit, [PredictionRow(1.0, ())], 1.0, bands=False, n_ticks=3)
    records = list(curve_records(curves))
    assert len(records) == 3
    assert tuple(records[0]) == CURVE_COLUMNS
    assert records[0]["surv_lo"] is None and records[0]["haz_hi"] is None
