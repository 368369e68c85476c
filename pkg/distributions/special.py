# distributions/special.py
"""
Регуляризованные неполные гамма- и бета-функции.

Ряд и цепная дробь (метод Лентца) по "Numerical Recipes in C", гл. 6;
для формы > TEMME_MIN_SHAPE - равномерное асимптотическое разложение Темме
(главный член и первая поправка). Целевая абсолютная погрешность 1e-12.
Все функции векторизованы по numpy-массивам и возвращают пару логарифмов
(log P, log Q), чтобы хвосты не терялись при вычитании из единицы.
"""
from typing import Tuple

import numpy as np
from scipy.special import betaln, gammaln
from scipy.stats import norm

from errors import DistributionError

EPS = 1e-15
FPMIN = 1e-300
MAX_ITER = 20000
TEMME_MIN_SHAPE = 1e5


def log1mexp(x):
    """log(1 - exp(x)) для x <= 0 без потери точности"""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > -np.log(2.0), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def _gamma_series(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """log P(a, x) рядом; применять при x < a + 1"""
    ap = a.copy()
    term = 1.0 / a
    total = term.copy()
    active = np.arange(a.size)
    for _ in range(MAX_ITER):
        if active.size == 0:
            break
        ap[active] += 1.0
        term[active] *= x[active] / ap[active]
        total[active] += term[active]
        done = np.abs(term[active]) < np.abs(total[active]) * EPS
        active = active[~done]
    else:
        raise DistributionError("Ряд неполной гамма-функции не сошелся")
    return np.log(total) + a * np.log(x) - x - gammaln(a)


def _gamma_cfrac(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """log Q(a, x) цепной дробью; применять при x >= a + 1"""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / FPMIN)
    d = 1.0 / b
    h = d.copy()
    active = np.arange(a.size)
    for i in range(1, MAX_ITER + 1):
        if active.size == 0:
            break
        ia = active
        an = -i * (i - a[ia])
        b[ia] += 2.0
        dd = an * d[ia] + b[ia]
        dd = np.where(np.abs(dd) < FPMIN, FPMIN, dd)
        cc = b[ia] + an / c[ia]
        cc = np.where(np.abs(cc) < FPMIN, FPMIN, cc)
        dd = 1.0 / dd
        delta = dd * cc
        d[ia], c[ia] = dd, cc
        h[ia] *= delta
        active = ia[np.abs(delta - 1.0) >= EPS]
    else:
        raise DistributionError("Цепная дробь неполной гамма-функции не сошлась")
    return np.log(h) + a * np.log(x) - x - gammaln(a)


def _gamma_temme(a: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(P, Q) равномерным асимптотическим разложением для большой формы"""
    lam = x / a
    mu = lam - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.sign(mu) * np.sqrt(2.0 * (mu - np.log1p(mu)))
        c0 = np.where(np.abs(mu) < 1e-3, -1.0 / 3.0 + mu / 12.0, 1.0 / mu - 1.0 / eta)
    q = norm.sf(eta * np.sqrt(a)) + np.exp(-0.5 * a * eta ** 2) / np.sqrt(2 * np.pi * a) * c0
    q = np.clip(q, 0.0, 1.0)
    return 1.0 - q, q


def log_gamma_pq(shape, x) -> Tuple[np.ndarray, np.ndarray]:
    """
    (log P(a, x), log Q(a, x)) регуляризованной неполной гамма-функции
    """
    out_shape = np.broadcast(np.asarray(shape), np.asarray(x)).shape
    a, x = np.broadcast_arrays(np.asarray(shape, dtype=float), np.asarray(x, dtype=float))
    a = a.astype(float).ravel().copy()
    x = x.astype(float).ravel().copy()
    if np.any(~(a > 0)) or np.any(~(x >= 0)):
        raise DistributionError("Неполная гамма-функция: нужны shape > 0 и x >= 0")

    logp = np.empty_like(x)
    logq = np.empty_like(x)

    zero = x == 0
    logp[zero], logq[zero] = -np.inf, 0.0
    infinite = np.isinf(x)
    logp[infinite], logq[infinite] = 0.0, -np.inf

    regular = ~zero & ~infinite
    big = regular & (a > TEMME_MIN_SHAPE)
    series = regular & ~big & (x < a + 1.0)
    cfrac = regular & ~big & ~series

    if np.any(series):
        lp = _gamma_series(a[series], x[series])
        logp[series] = np.minimum(lp, 0.0)
        logq[series] = log1mexp(logp[series])
    if np.any(cfrac):
        lq = _gamma_cfrac(a[cfrac], x[cfrac])
        logq[cfrac] = np.minimum(lq, 0.0)
        logp[cfrac] = log1mexp(logq[cfrac])
    if np.any(big):
        p, q = _gamma_temme(a[big], x[big])
        with np.errstate(divide="ignore"):
            logp[big], logq[big] = np.log(p), np.log(q)

    return logp.reshape(out_shape), logq.reshape(out_shape)


def reg_lower_inc_gamma(shape, x):
    """P(a, x) - регуляризованная нижняя неполная гамма-функция"""
    out_shape = np.broadcast(np.asarray(shape), np.asarray(x)).shape
    logp, _ = log_gamma_pq(shape, x)
    result = np.exp(logp).reshape(out_shape)
    return float(result) if result.ndim == 0 else result


def reg_upper_inc_gamma(shape, x):
    """Q(a, x) = 1 - P(a, x)"""
    out_shape = np.broadcast(np.asarray(shape), np.asarray(x)).shape
    _, logq = log_gamma_pq(shape, x)
    result = np.exp(logq).reshape(out_shape)
    return float(result) if result.ndim == 0 else result


def _beta_cfrac(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Цепная дробь betacf (Лентц)"""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < FPMIN, FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    active = np.arange(x.size)
    for m in range(1, MAX_ITER + 1):
        if active.size == 0:
            break
        ia = active
        m2 = 2 * m
        aa = m * (b[ia] - m) * x[ia] / ((qam[ia] + m2) * (a[ia] + m2))
        dd = 1.0 + aa * d[ia]
        dd = np.where(np.abs(dd) < FPMIN, FPMIN, dd)
        cc = 1.0 + aa / c[ia]
        cc = np.where(np.abs(cc) < FPMIN, FPMIN, cc)
        dd = 1.0 / dd
        hh = h[ia] * dd * cc
        aa = -(a[ia] + m) * (qab[ia] + m) * x[ia] / ((a[ia] + m2) * (qap[ia] + m2))
        dd = 1.0 + aa * dd
        dd = np.where(np.abs(dd) < FPMIN, FPMIN, dd)
        cc = 1.0 + aa / cc
        cc = np.where(np.abs(cc) < FPMIN, FPMIN, cc)
        dd = 1.0 / dd
        delta = dd * cc
        hh *= delta
        d[ia], c[ia], h[ia] = dd, cc, hh
        active = ia[np.abs(delta - 1.0) >= EPS]
    else:
        raise DistributionError("Цепная дробь неполной бета-функции не сошлась")
    return h


def log_beta_pq(log_x, log_1mx, a, b) -> Tuple[np.ndarray, np.ndarray]:
    """
    (log I_x(a, b), log(1 - I_x(a, b))) по log x и log(1 - x)
    """
    out_shape = np.broadcast(np.asarray(log_x), np.asarray(log_1mx), np.asarray(a), np.asarray(b)).shape
    lx, l1x, a, b = np.broadcast_arrays(
        np.asarray(log_x, dtype=float), np.asarray(log_1mx, dtype=float),
        np.asarray(a, dtype=float), np.asarray(b, dtype=float),
    )
    lx, l1x = lx.ravel().copy(), l1x.ravel().copy()
    a, b = a.ravel().copy(), b.ravel().copy()
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DistributionError("Неполная бета-функция: нужны a > 0 и b > 0")

    logi = np.empty_like(lx)
    logj = np.empty_like(lx)
    lo = lx == -np.inf
    hi = l1x == -np.inf
    logi[lo], logj[lo] = -np.inf, 0.0
    logi[hi], logj[hi] = 0.0, -np.inf

    regular = ~lo & ~hi
    x = np.exp(lx)
    with np.errstate(invalid="ignore"):
        front = a * lx + b * l1x - betaln(a, b)
    direct = regular & (x < (a + 1.0) / (a + b + 2.0))
    swapped = regular & ~direct

    if np.any(direct):
        cf = _beta_cfrac(a[direct], b[direct], x[direct])
        logi[direct] = np.minimum(front[direct] + np.log(cf) - np.log(a[direct]), 0.0)
        logj[direct] = log1mexp(logi[direct])
    if np.any(swapped):
        y = np.exp(l1x[swapped])
        cf = _beta_cfrac(b[swapped], a[swapped], y)
        logj[swapped] = np.minimum(front[swapped] + np.log(cf) - np.log(b[swapped]), 0.0)
        logi[swapped] = log1mexp(logj[swapped])
    return logi.reshape(out_shape), logj.reshape(out_shape)


def reg_inc_beta(x, a, b):
    """I_x(a, b) - регуляризованная неполная бета-функция"""
    x = np.asarray(x, dtype=float)
    if np.any(~((x >= 0) & (x <= 1))):
        raise DistributionError("Неполная бета-функция: нужен x из [0, 1]")
    out_shape = np.broadcast(x, np.asarray(a), np.asarray(b)).shape
    with np.errstate(divide="ignore"):
        logi, _ = log_beta_pq(np.log(x), np.log1p(-x), a, b)
    result = np.exp(logi).reshape(out_shape)
    return float(result) if result.ndim == 0 else result


__all__ = [
    "log1mexp", "log_gamma_pq", "reg_lower_inc_gamma", "reg_upper_inc_gamma",
    "log_beta_pq", "reg_inc_beta",
]
