# model/inference.py
from dataclasses import asdict, dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from config import INFERENCE_CONFIG
from errors import InferenceError
from .likelihood import LikelihoodContext, total_loglik
from .numdiff import fd_hessian
from .spec import ParameterLayout

# выше этого числа обусловленности матрица информации считается вырожденной
MAX_CONDITION = 1e13


class CovarianceKind(str, Enum):
    REGULAR = "regular"
    SANDWICH = "sandwich"


@dataclass(frozen=True)
class CovarianceEstimate:
    matrix: np.ndarray
    kind: CovarianceKind

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if not np.all(np.isfinite(m)):
            raise InferenceError("Ковариационная матрица содержит нечисловые значения")
        if np.any(np.diag(m) < 0):
            raise InferenceError("Отрицательная дисперсия в ковариационной матрице")
        object.__setattr__(self, "matrix", (m + m.T) / 2.0)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.matrix))


@dataclass(frozen=True)
class EstimateRow:
    """Строка таблицы Parameter Estimates"""
    label: str
    estimate: float
    se: float
    lower: float
    upper: float
    t: float
    p: float

    def to_dict(self):
        return asdict(self)


def observed_information(ctx: LikelihoodContext, theta: np.ndarray) -> np.ndarray:
    """A = -d2 log L / d theta2 конечными разностями"""
    info = -fd_hessian(lambda th: total_loglik(th, ctx), np.asarray(theta, dtype=float))
    if not np.all(np.isfinite(info)):
        raise InferenceError("Матрица информации содержит нечисловые значения")
    return (info + info.T) / 2.0


def _inverse(info: np.ndarray) -> np.ndarray:
    info = np.asarray(info, dtype=float)
    condition = float(np.linalg.cond(info))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise InferenceError("Матрица информации вырождена", condition)
    return np.linalg.inv(info)


def regular_covariance(info: np.ndarray) -> CovarianceEstimate:
    """V = A^-1"""
    return CovarianceEstimate(_inverse(info), CovarianceKind.REGULAR)


def sandwich(info: np.ndarray, scores: np.ndarray, weights: np.ndarray) -> CovarianceEstimate:
    """V = A^-1 B A^-1, B = sum w_i U_i U_i' w_i"""
    a_inv = _inverse(info)
    weighted = np.asarray(scores, dtype=float) * np.asarray(weights, dtype=float)[:, None]
    meat = weighted.T @ weighted
    return CovarianceEstimate(a_inv @ meat @ a_inv, CovarianceKind.SANDWICH)


def z_value(alpha: float) -> float:
    return float(norm.ppf(1.0 - alpha / 2.0))


def summarize(
    estimates: Sequence[float],
    ses: Sequence[float],
    alpha: float = INFERENCE_CONFIG["alpha"],
    labels: Optional[Sequence[str]] = None,
) -> List[EstimateRow]:
    """Нормальные интервалы, t = оценка / SE и двусторонние p-значения"""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha должна лежать в (0, 1), получено {alpha}")
    z = z_value(alpha)
    estimates = np.asarray(estimates, dtype=float)
    ses = np.asarray(ses, dtype=float)
    labels = list(labels) if labels is not None else [str(i) for i in range(estimates.size)]
    rows = []
    for label, est, se in zip(labels, estimates, ses):
        if se > 0:
            t = est / se
            p = float(2.0 * norm.sf(abs(t)))
        else:
            t = p = float("nan")
        rows.append(EstimateRow(label, float(est), float(se), float(est - z * se), float(est + z * se), float(t), p))
    return rows


@dataclass(frozen=True)
class BackTransformed:
    """Оценки на исходной шкале"""
    estimates: np.ndarray
    ses: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    covariance: np.ndarray
    jacobian: np.ndarray


def back_transform(
    theta: np.ndarray,
    cov: np.ndarray,
    layout: ParameterLayout,
    alpha: float = INFERENCE_CONFIG["alpha"],
) -> BackTransformed:
    """
    Для слотов с log-связью без ковариат: оценка exp(theta), SE по дельта-методу,
    интервал - экспонента интервала на лог-шкале. Остальные слоты не меняются.
    """
    theta = np.asarray(theta, dtype=float)
    cov = np.asarray(cov, dtype=float)
    mask = layout.back_transform_mask
    z = z_value(alpha)
    se_opt = np.sqrt(np.diag(cov))

    estimates = np.where(mask, np.exp(theta), theta)
    jac = np.diag(np.where(mask, estimates, 1.0))
    ses = np.where(mask, estimates * se_opt, se_opt)
    lower = np.where(mask, np.exp(theta - z * se_opt), theta - z * se_opt)
    upper = np.where(mask, np.exp(theta + z * se_opt), theta + z * se_opt)
    return BackTransformed(estimates, ses, lower, upper, jac @ cov @ jac.T, jac)


def estimate_table(
    theta: np.ndarray,
    cov: np.ndarray,
    layout: ParameterLayout,
    alpha: float = INFERENCE_CONFIG["alpha"],
) -> List[EstimateRow]:
    """Таблица оценок на исходной шкале; t и p - по оценке и SE исходной шкалы"""
    bt = back_transform(theta, cov, layout, alpha)
    rows = summarize(bt.estimates, bt.ses, alpha, layout.labels)
    return [
        EstimateRow(row.label, row.estimate, row.se, float(lo), float(hi), row.t, row.p)
        if transformed else row
        for row, transformed, lo, hi in zip(rows, layout.back_transform_mask, bt.lower, bt.upper)
    ]


def log_scale_table(
    theta: np.ndarray,
    cov: np.ndarray,
    layout: ParameterLayout,
    alpha: float = INFERENCE_CONFIG["alpha"],
) -> List[EstimateRow]:
    """Таблица на шкале оптимизации (log_result)"""
    labels = [
        f"log({slot.label})" if slot.back_transform else slot.label for slot in layout.slots
    ]
    return summarize(theta, np.sqrt(np.diag(cov)), alpha, labels)


def information_criteria(loglik: float, k: int, n: int) -> Tuple[float, float]:
    """AIC = -2 log L + 2k, BIC = -2 log L + k log n"""
    if n < 1:
        raise ValueError("n должно быть не меньше 1")
    return -2.0 * loglik + 2.0 * k, -2.0 * loglik + np.log(n) * k


@dataclass(frozen=True)
class StratumEstimate:
    """Оценки одной страты на исходной шкале"""
    label: str
    n: int
    estimates: np.ndarray
    covariance: np.ndarray
    loglik: float
    k: int
    signature: Tuple[Tuple[str, str], ...] = ()


@dataclass(frozen=True)
class PooledEstimate:
    estimates: np.ndarray
    covariance: np.ndarray
    loglik: float
    aic: float
    bic: float
    n: int
    k: int
    weights: Tuple[float, ...]


def pool_strata(
    strata: Sequence[StratumEstimate],
    sizes: Optional[Sequence[int]] = None,
) -> PooledEstimate:
    """
    theta = sum (n_s/n) theta_s, V = sum (n_s/n)^2 V_s.
    log L - сумма по стратам; AIC/BIC по сумме с k одной страты и общим n.
    """
    if not strata:
        raise InferenceError("Нет страт для объединения")
    signature = strata[0].signature
    for stratum in strata[1:]:
        if stratum.signature != signature or stratum.estimates.shape != strata[0].estimates.shape:
            raise InferenceError(f"Раскладка параметров страты {stratum.label} отличается")
    sizes = np.array([s.n for s in strata] if sizes is None else sizes, dtype=float)
    n = int(sizes.sum())
    omega = sizes / sizes.sum()

    estimates = sum(w * s.estimates for w, s in zip(omega, strata))
    covariance = sum(w ** 2 * s.covariance for w, s in zip(omega, strata))
    loglik = float(sum(s.loglik for s in strata))
    k = strata[0].k
    aic, bic = information_criteria(loglik, k, n)
    return PooledEstimate(
        estimates=np.asarray(estimates, dtype=float),
        covariance=np.asarray(covariance, dtype=float),
        loglik=loglik, aic=aic, bic=bic, n=n, k=k,
        weights=tuple(float(w) for w in omega),
    )


@dataclass(frozen=True)
class ComparisonRow:
    distribution: str
    loglik: float
    aic: float
    bic: float
    k: int
    converged: bool

    def to_dict(self):
        return asdict(self)


def compare_models(fits: Sequence) -> List[ComparisonRow]:
    """Сводка log L / AIC / BIC нескольких подгонок на одних данных"""
    return [
        ComparisonRow(fit.label, fit.loglik, fit.aic, fit.bic, fit.k, fit.converged)
        for fit in fits
    ]


__all__ = [
    "CovarianceKind", "CovarianceEstimate", "EstimateRow", "observed_information",
    "regular_covariance", "sandwich", "summarize", "BackTransformed", "back_transform",
    "estimate_table", "log_scale_table", "information_criteria", "StratumEstimate",
    "PooledEstimate", "pool_strata", "ComparisonRow", "compare_models",
]
