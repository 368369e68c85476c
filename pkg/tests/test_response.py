# tests/test_response.py
import pytest

from conftest import make_table
from dataset.response import (
    CensorKind, Observation, ResponseBounds, format_value, normalize_response, observed_time,
)
from errors import DataError


def test_format2_example(example_obs):
    kinds = [obs.kind for obs in example_obs]
    assert kinds.count(CensorKind.EVENT) == 5
    assert kinds.count(CensorKind.RIGHT) == 5
    assert example_obs.n_input == 10
    assert example_obs.n_deleted == 0
    assert example_obs.covariate_names == ("age", "sex")
    assert example_obs[1].bounds == ResponseBounds(2.92097, None)


def test_format1_kinds_and_deletions():
    table = make_table(
        t1=[1.0, 1.0, None, 1.0, 0.0, 2.0, None, -1.0, 0.0],
        t2=[1.0, None, 2.0, 2.0, 2.0, 1.0, None, 2.0, None],
    )
    obs = normalize_response(table, "t1", t2col="t2")
    assert [o.kind for o in obs] == [
        CensorKind.EVENT, CensorKind.RIGHT, CensorKind.LEFT, CensorKind.INTERVAL, CensorKind.LEFT,
    ]
    assert obs[4].bounds == ResponseBounds(None, 2.0)
    assert obs.deletion_log == {
        "t1 greater than t2": 1,
        "both bounds missing": 1,
        "negative time": 1,
        "zero right-censoring time": 1,
    }
    assert obs.n_input == 9


def test_format2_deletions_and_censval():
    table = make_table(
        time=[1.0, None, "abc", 0.0, 3.0, 4.0],
        status=[2.0, 1.0, 1.0, 1.0, None, 1.0],
    )
    obs = normalize_response(table, "time", censorcol="status", censval="2")
    assert [o.kind for o in obs] == [CensorKind.RIGHT, CensorKind.EVENT]
    assert obs.deletion_log == {
        "missing time": 1,
        "non-numeric time": 1,
        "zero time": 1,
        "missing censor status": 1,
    }


def test_text_censor_value():
    table = make_table(time=[1.0, 2.0], status=["censored", "dead"])
    obs = normalize_response(table, "time", censorcol="status", censval="censored")
    assert [o.kind for o in obs] == [CensorKind.RIGHT, CensorKind.EVENT]


def test_exactly_one_of_t2_and_censor(example_table):
    with pytest.raises(DataError):
        normalize_response(example_table, "time")
    with pytest.raises(DataError):
        normalize_response(example_table, "time", t2col="age", censorcol="delta")


def test_weights_and_strata():
    table = make_table(
        time=[1.0, 2.0, 3.0, 4.0],
        delta=[1.0, 0.0, 1.0, 1.0],
        w=[1.0, 2.0, None, 0.5],
        grp=["a", "b", "a", None],
    )
    obs = normalize_response(table, "time", censorcol="delta", weightcol="w", stratacols=["grp"])
    assert list(obs.weights) == [1.0, 2.0]
    assert obs.strata() == ["a", "b"]
    assert obs.deletion_log == {"missing weight": 1, "missing stratum": 1}
    assert len(obs.subset("a")) == 1
    assert obs.covariate_names == ()


def test_nonpositive_weight_is_an_error():
    table = make_table(time=[1.0], delta=[1.0], w=[0.0])
    with pytest.raises(DataError):
        normalize_response(table, "time", censorcol="delta", weightcol="w")


def test_complete_cases_logs_missing_covariates():
    table = make_table(time=[1.0, 2.0, 3.0], delta=[1.0, 1.0, 0.0], age=[1.0, None, 3.0])
    obs = normalize_response(table, "time", censorcol="delta").complete_cases(["AGE"])
    assert len(obs) == 2
    assert obs.deletion_log == {"missing covariate": 1}


def test_observed_time():
    assert observed_time(Observation(ResponseBounds(2.0, 2.0))) == 2.0
    assert observed_time(Observation(ResponseBounds(2.0, None))) == 2.0
    assert observed_time(Observation(ResponseBounds(None, 3.0))) == 3.0
    assert observed_time(Observation(ResponseBounds(1.0, 3.0))) == 2.0


def test_format_value():
    assert format_value(1.0) == "1"
    assert format_value(0.5) == "0.5"
    assert format_value("male") == "male"
    assert format_value(None) == "."
