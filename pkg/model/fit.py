# model/fit.py
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
from tqdm import tqdm

from config import FIT_CONFIG
from dataset.response import observed_time
from distributions.builtin import Constraint
from errors import ConfigError, EvaluationError, FitError, InferenceError
from .inference import (
    CovarianceEstimate, EstimateRow, StratumEstimate, back_transform, estimate_table,
    information_criteria, log_scale_table, observed_information, pool_strata,
    regular_covariance, sandwich, summarize,
)
from .likelihood import LikelihoodContext, build_context, score_contributions, total_loglik
from .optimizer import ConvergenceRecord, ConvergenceStatus, FitOptions, maximize
from .spec import Link, ParameterLayout


def to_optim_scale(values: np.ndarray, layout: ParameterLayout) -> np.ndarray:
    """Исходная шкала -> шкала оптимизации (log для параметров с log-связью без ковариат)"""
    values = np.asarray(values, dtype=float)
    mask = layout.back_transform_mask
    if np.any(values[mask] <= 0):
        bad = [slot.label for slot, v in zip(layout.slots, values) if slot.back_transform and v <= 0]
        raise ConfigError(f"Значение должно быть положительным: {', '.join(bad)}")
    theta = values.copy()
    theta[mask] = np.log(values[mask])
    return theta


def from_optim_scale(theta: np.ndarray, layout: ParameterLayout) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.where(layout.back_transform_mask, np.exp(theta), theta)


def _link_value(link: Link, value: float, name: str) -> float:
    if link is Link.LOG:
        if not value > 0:
            raise ConfigError(f"Значение параметра {name} с log-связью должно быть положительным: {value}")
        return float(np.log(value))
    return float(value)


def _sigma_init(log_tau: np.ndarray) -> float:
    if len(log_tau) < 2:
        warnings.warn("Одно наблюдение: стандартное отклонение не определено, sigma = 1")
        return 1.0
    sd = float(np.std(log_tau, ddof=1))
    if not sd > 0:
        warnings.warn("Все наблюдаемые времена совпадают, sigma = 1")
        return 1.0
    return sd


def initialize(ctx: LikelihoodContext, user_init: Optional[Mapping[str, float]] = None) -> np.ndarray:
    """
    Начальные значения на шкале оптимизации: beta по среднему log(tau), sigma по
    стандартному отклонению log(tau), ненулевые параметры 0.5, положительные 1,
    коэффициенты ковариат 0. user_init: "param" - свободный член на исходной
    шкале, "param:covariate" - коэффициент.
    """
    if ctx.n == 0:
        raise FitError("Нет наблюдений для инициализации")
    layout = ctx.layout
    dist = ctx.distribution
    spec = ctx.spec
    taus = np.array([observed_time(obs) for obs in ctx.observations], dtype=float)
    if np.any(taus <= 0):
        raise FitError("Наблюдаемые времена должны быть положительными")
    log_tau = np.log(taus)

    theta = np.zeros(layout.k)
    for param in layout.parameters:
        link = layout.link_of(param)
        if param == spec.location:
            value = float(np.mean(log_tau))
        elif spec.is_custom:
            constraint = dist.constraint_of(param)
            value = FIT_CONFIG["positive_init"] if constraint is Constraint.POSITIVE else 0.0
        elif dist.gg_family and param == "sigma":
            value = _sigma_init(log_tau)
        else:
            constraint = dist.constraint_of(param)
            if constraint is Constraint.NONZERO or param == "q":
                value = FIT_CONFIG["nonzero_init"]
            elif constraint is Constraint.POSITIVE:
                value = FIT_CONFIG["positive_init"]
            else:
                value = 0.0
        if link is Link.LOG and not value > 0:
            value = FIT_CONFIG["positive_init"]
        theta[layout.intercept_index(param)] = _link_value(link, value, param)

    for key, value in (user_init or {}).items():
        if ":" in key:
            param, column = (part.strip() for part in key.split(":", 1))
            try:
                theta[layout.index(param, column)] = float(value)
            except KeyError:
                raise ConfigError(f"init: нет коэффициента {key}") from None
        else:
            if key not in layout.parameters:
                raise ConfigError(f"init: неизвестный параметр {key}")
            theta[layout.intercept_index(key)] = _link_value(layout.link_of(key), value, key)
    return theta


def bound_vectors(ctx: LikelihoodContext) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """Границы свободных членов на шкале оптимизации"""
    spec, layout = ctx.spec, ctx.layout
    if not spec.lower and not spec.upper:
        return None, None
    lower = np.full(layout.k, -np.inf)
    upper = np.full(layout.k, np.inf)
    for param, value in spec.lower.items():
        i = layout.intercept_index(param)
        if layout.link_of(param) is Link.LOG:
            lower[i] = np.log(value) if value > 0 else -np.inf
        else:
            lower[i] = value
    for param, value in spec.upper.items():
        i = layout.intercept_index(param)
        if layout.link_of(param) is Link.LOG:
            if not value > 0:
                raise ConfigError(f"Верхняя граница параметра {param} с log-связью должна быть положительной")
            upper[i] = np.log(value)
        else:
            upper[i] = value
    return lower, upper


@dataclass
class FitResult:
    """Результат подгонки одной модели (или объединение по стратам)"""
    distribution: str
    label: str
    layout: ParameterLayout
    rows: List[EstimateRow]
    estimates: np.ndarray
    covariance_original: Optional[np.ndarray]
    loglik: float
    aic: float
    bic: float
    n: int
    k: int
    convergence: ConvergenceRecord
    alpha: float
    robust: bool
    theta: Optional[np.ndarray] = None
    covariance: Optional[CovarianceEstimate] = None
    log_rows: List[EstimateRow] = field(default_factory=list)
    context: Optional[LikelihoodContext] = None
    stratum: Optional[str] = None
    strata: List["FitResult"] = field(default_factory=list)
    weights: Tuple[float, ...] = ()
    inference_error: Optional[str] = None

    @property
    def converged(self) -> bool:
        return self.convergence.converged

    @property
    def stratified(self) -> bool:
        return bool(self.strata)

    @property
    def pooled_log_labels(self) -> List[str]:
        """Параметры с log-связью, чьи объединенные интервалы нормальные на исходной шкале"""
        if not self.strata:
            return []
        return [slot.label for slot in self.layout.slots if slot.back_transform]

    def to_dict(self) -> Dict[str, Any]:
        def matrix(m):
            return None if m is None else np.asarray(m, dtype=float).tolist()

        return {
            "distribution": self.distribution,
            "label": self.label,
            "stratum": self.stratum,
            "n": self.n,
            "k": self.k,
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "alpha": self.alpha,
            "robust": self.robust,
            "convergence": self.convergence.to_dict(),
            "parameters": [
                {"parameter": s.parameter, "column": s.column, "link": s.link.value, "label": s.label}
                for s in self.layout.slots
            ],
            "estimates": [row.to_dict() for row in self.rows],
            "log_scale_estimates": [row.to_dict() for row in self.log_rows],
            "theta": matrix(self.theta),
            "covariance": matrix(self.covariance.matrix) if self.covariance is not None else None,
            "covariance_kind": self.covariance.kind.value if self.covariance is not None else None,
            "covariance_original": matrix(self.covariance_original),
            "inference_error": self.inference_error,
            "weights": list(self.weights),
            "strata": [s.to_dict() for s in self.strata],
        }


def _covariance(ctx: LikelihoodContext, theta: np.ndarray, robust: bool) -> CovarianceEstimate:
    try:
        info = observed_information(ctx, theta)
        if robust:
            return sandwich(info, score_contributions(theta, ctx), ctx.weights)
        return regular_covariance(info)
    except EvaluationError as e:
        raise InferenceError(f"Производные правдоподобия не определены в оценке: {e}") from e


def fit_single(
    ctx: LikelihoodContext,
    options: Optional[FitOptions] = None,
    printer: Callable[[str], None] = print,
) -> FitResult:
    """Подгонка без стратификации: максимизация и вывод"""
    options = options or FitOptions()
    spec, layout = ctx.spec, ctx.layout
    if ctx.n < layout.k:
        raise FitError(f"Наблюдений ({ctx.n}) меньше, чем параметров ({layout.k})")
    theta0 = initialize(ctx, spec.init)
    lower, upper = bound_vectors(ctx)
    theta, record = maximize(lambda th: total_loglik(th, ctx), theta0, options, lower, upper, printer)
    aic, bic = information_criteria(record.loglik, layout.k, ctx.n)

    covariance = None
    inference_error = None
    try:
        covariance = _covariance(ctx, theta, spec.robust)
        rows = estimate_table(theta, covariance.matrix, layout, spec.alpha)
        log_rows = log_scale_table(theta, covariance.matrix, layout, spec.alpha) if spec.log_result else []
        original = back_transform(theta, covariance.matrix, layout, spec.alpha).covariance
    except InferenceError as e:
        inference_error = str(e)
        nan = np.full(layout.k, np.nan)
        rows = summarize(from_optim_scale(theta, layout), nan, spec.alpha, layout.labels)
        log_rows = []
        original = None

    return FitResult(
        distribution=spec.distribution.id,
        label=spec.distribution.label,
        layout=layout,
        rows=rows,
        estimates=from_optim_scale(theta, layout),
        covariance_original=original,
        loglik=record.loglik,
        aic=aic,
        bic=bic,
        n=ctx.n,
        k=layout.k,
        convergence=record,
        alpha=spec.alpha,
        robust=spec.robust,
        theta=theta,
        covariance=covariance,
        log_rows=log_rows,
        context=ctx,
        inference_error=inference_error,
    )


def _combined_record(results: List[FitResult], options: FitOptions) -> ConvergenceRecord:
    failed = [r.stratum for r in results if not r.converged]
    return ConvergenceRecord(
        algorithm=options.algorithm.value,
        status=ConvergenceStatus.NOT_CONVERGED if failed else ConvergenceStatus.CONVERGED,
        iterations=max(r.convergence.iterations for r in results),
        grad_norm=max(r.convergence.grad_norm for r in results),
        loglik=float(sum(r.loglik for r in results)),
        initial_loglik=float(sum(r.convergence.initial_loglik for r in results)),
        gtol=options.gtol,
        message=f"Нет сходимости в стратах: {', '.join(failed)}" if failed else "",
    )


def fit_model(
    ctx: LikelihoodContext,
    options: Optional[FitOptions] = None,
    printer: Callable[[str], None] = print,
) -> FitResult:
    """
    Без страт - одна подгонка. Со стратами - подгонка в каждой страте с общей
    схемой ковариат и объединение оценок с весами n_s / n.
    """
    options = options or FitOptions()
    labels = ctx.observations.strata()
    if not labels:
        return fit_single(ctx, options, printer)

    spec, layout = ctx.spec, ctx.layout
    results: List[FitResult] = []
    for label in tqdm(labels, desc="Страты", disable=options.verbosity < 1):
        sub = build_context(spec, ctx.observations.subset(label), schema=ctx.schema)
        if sub.n < sub.layout.k:
            raise FitError(f"В страте {label} наблюдений ({sub.n}) меньше, чем параметров ({sub.layout.k})")
        results.append(replace(fit_single(sub, options, printer), stratum=label))

    failed = [r.stratum for r in results if r.covariance_original is None]
    record = _combined_record(results, options)
    if failed:
        estimates = sum(r.n / ctx.n * r.estimates for r in results)
        rows = summarize(estimates, np.full(layout.k, np.nan), spec.alpha, layout.labels)
        loglik = record.loglik
        aic, bic = information_criteria(loglik, layout.k, ctx.n)
        return FitResult(
            distribution=spec.distribution.id, label=spec.distribution.label, layout=layout,
            rows=rows, estimates=np.asarray(estimates), covariance_original=None,
            loglik=loglik, aic=aic, bic=bic, n=ctx.n, k=layout.k, convergence=record,
            alpha=spec.alpha, robust=spec.robust, context=ctx, strata=results,
            weights=tuple(r.n / ctx.n for r in results),
            inference_error=f"Вывод не выполнен в стратах: {', '.join(failed)}",
        )

    pooled = pool_strata([
        StratumEstimate(r.stratum, r.n, r.estimates, r.covariance_original, r.loglik, r.k, r.layout.signature())
        for r in results
    ])
    rows = summarize(pooled.estimates, np.sqrt(np.diag(pooled.covariance)), spec.alpha, layout.labels)
    return FitResult(
        distribution=spec.distribution.id,
        label=spec.distribution.label,
        layout=layout,
        rows=rows,
        estimates=pooled.estimates,
        covariance_original=pooled.covariance,
        loglik=pooled.loglik,
        aic=pooled.aic,
        bic=pooled.bic,
        n=pooled.n,
        k=pooled.k,
        convergence=record,
        alpha=spec.alpha,
        robust=spec.robust,
        context=ctx,
        strata=results,
        weights=pooled.weights,
    )


__all__ = [
    "FitOptions", "FitResult", "to_optim_scale", "from_optim_scale", "initialize",
    "bound_vectors", "fit_single", "fit_model",
]
