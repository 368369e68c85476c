# tests/conftest.py
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from config import DATA_DIR  # noqa: E402
from dataset.loader import RawTable, load_table  # noqa: E402
from dataset.response import normalize_response  # noqa: E402


def make_table(**columns) -> RawTable:
    """RawTable из столбцов: make_table(time=[...], delta=[...])"""
    names = list(columns)
    n = len(columns[names[0]])
    rows = [[columns[name][i] for name in names] for i in range(n)]
    return RawTable(columns=names, rows=rows)


def simulate_weibull(rng, n, beta0, beta1, sigma, censor_rate=0.2):
    """Времена Вейбулла (AFT) с одной ковариатой и экспоненциальным цензурированием"""
    x = rng.normal(size=n)
    w = np.log(rng.exponential(size=n))
    t = np.exp(beta0 + beta1 * x + sigma * w)
    c = rng.exponential(1.0 / censor_rate, size=n) * np.exp(beta0)
    time = np.minimum(t, c)
    delta = (t <= c).astype(float)
    return make_table(time=list(time), delta=list(delta), x=list(x))


@pytest.fixture
def rng():
    return np.random.default_rng(20240117)


@pytest.fixture
def example_table() -> RawTable:
    """Первые 10 наблюдений примера: time, delta, age, sex"""
    return load_table(DATA_DIR / "example.csv")


@pytest.fixture
def example_obs(example_table):
    return normalize_response(example_table, "time", censorcol="delta")


@pytest.fixture
def exp_table(rng) -> RawTable:
    """20 наблюдений экспоненциального распределения с цензурированием справа"""
    t = rng.exponential(2.0, size=20)
    c = rng.exponential(4.0, size=20)
    time = np.minimum(t, c)
    delta = (t <= c).astype(float)
    delta[0] = 1.0
    return make_table(time=list(time), delta=list(delta))


@pytest.fixture
def weibull_table(rng) -> RawTable:
    return simulate_weibull(rng, 200, 0.5, -0.7, 0.8)


@pytest.fixture
def outdir(tmp_path):
    return tmp_path / "out"
