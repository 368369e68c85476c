# model/likelihood.py
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from dataset.response import CensorKind, ObservationSet
from distributions.special import log1mexp
from errors import DataError, DistributionError, LikelihoodError
from .design import CovariateSchema, DesignMatrix, build_design, infer_schema
from .numdiff import fd_jacobian
from .spec import ModelSpec, ParameterLayout, build_layout

# слагаемые ниже log(1e-300) считаются нулевым правдоподобием
LOG_FLOOR = np.log(1e-300)


@dataclass(frozen=True)
class LikelihoodContext:
    """Модель и данные, подготовленные для вычисления правдоподобия"""
    spec: ModelSpec
    layout: ParameterLayout
    schema: Sequence[CovariateSchema]
    designs: Mapping[str, DesignMatrix]
    observations: ObservationSet
    t1: np.ndarray
    t2: np.ndarray
    kinds: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.observations)

    @property
    def distribution(self):
        return self.spec.distribution


def build_context(
    spec: ModelSpec,
    observations: ObservationSet,
    schema: Optional[Sequence[CovariateSchema]] = None,
) -> LikelihoodContext:
    """
    Удаляет строки с пропусками в ковариатах модели, кодирует ковариаты и
    строит раскладку параметров. schema передается при подгонке по стратам,
    чтобы у всех страт была одна раскладка.
    """
    covariates = spec.all_covariates
    observations = observations.complete_cases(covariates)
    if schema is None:
        schema = infer_schema(observations, covariates, spec.class_cov, spec.refgrp)
    designs = build_design(observations, schema, spec.param_covars, spec.parameters)
    layout = build_layout(spec, designs)

    t1 = np.array([np.nan if o.bounds.t1 is None else o.bounds.t1 for o in observations], dtype=float)
    t2 = np.array([np.nan if o.bounds.t2 is None else o.bounds.t2 for o in observations], dtype=float)
    kinds = np.array([o.kind.value for o in observations], dtype=object)
    return LikelihoodContext(
        spec=spec,
        layout=layout,
        schema=tuple(schema),
        designs=designs,
        observations=observations,
        t1=t1,
        t2=t2,
        kinds=kinds,
        weights=observations.weights,
    )


def linear_predictors(theta: np.ndarray, ctx: LikelihoodContext) -> Dict[str, np.ndarray]:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ctx.layout.k,):
        raise ValueError(f"Длина theta {theta.shape} не совпадает с числом параметров {ctx.layout.k}")
    return {
        param: ctx.designs[param].values @ theta[ctx.layout.slice_of(param)]
        for param in ctx.layout.parameters
    }


def param_values(theta: np.ndarray, ctx: LikelihoodContext) -> Dict[str, np.ndarray]:
    """Параметры распределения каждого наблюдения (обратная связь к линейному предиктору)"""
    values = {}
    with np.errstate(over="ignore"):
        for param, eta in linear_predictors(theta, ctx).items():
            value = ctx.layout.link_of(param).inverse(eta)
            if not np.all(np.isfinite(value)):
                raise DistributionError(f"Параметр {param} не конечен при текущих коэффициентах")
            values[param] = value
    return values


def param_at(theta: np.ndarray, ctx: LikelihoodContext, index: int) -> Dict[str, float]:
    """Параметры распределения наблюдения index"""
    return {name: float(value[index]) for name, value in param_values(theta, ctx).items()}


def loglik_terms(theta: np.ndarray, ctx: LikelihoodContext) -> np.ndarray:
    """Невзвешенные логарифмы индивидуальных правдоподобий в порядке данных"""
    params = param_values(theta, ctx)
    dist = ctx.distribution
    dist.validate(params)

    terms = np.empty(ctx.n)
    with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
        for kind in CensorKind:
            mask = ctx.kinds == kind.value
            if not np.any(mask):
                continue
            sub = {name: value[mask] for name, value in params.items()}
            if kind is CensorKind.EVENT:
                terms[mask] = dist.log_density(sub, ctx.t1[mask])
            elif kind is CensorKind.RIGHT:
                terms[mask] = dist.log_survival(sub, ctx.t1[mask])
            elif kind is CensorKind.LEFT:
                terms[mask] = dist.log_cdf(sub, ctx.t2[mask])
            else:
                log_s1 = dist.log_survival(sub, ctx.t1[mask])
                log_s2 = dist.log_survival(sub, ctx.t2[mask])
                terms[mask] = log_s1 + log1mexp(log_s2 - log_s1)

    bad = ~(terms >= LOG_FLOOR)
    if np.any(bad):
        index = int(np.flatnonzero(bad)[0])
        raise LikelihoodError(
            f"Неположительный вклад в правдоподобие ({ctx.kinds[index]}, log L = {terms[index]:.4g})",
            index,
        )
    return terms


def individual_loglik(theta: np.ndarray, ctx: LikelihoodContext, index: int) -> float:
    return float(loglik_terms(theta, ctx)[index])


def total_loglik(theta: np.ndarray, ctx: LikelihoodContext) -> float:
    """Сумма w_i * log L_i в порядке данных"""
    if ctx.n == 0:
        raise DataError("Нет корректных наблюдений")
    return float(np.sum(ctx.weights * loglik_terms(theta, ctx)))


def score_contributions(theta: np.ndarray, ctx: LikelihoodContext) -> np.ndarray:
    """Матрица n x k невзвешенных вкладов в функцию счета"""
    scores = fd_jacobian(lambda th: loglik_terms(th, ctx), np.asarray(theta, dtype=float))
    if not np.all(np.isfinite(scores)):
        raise LikelihoodError("Конечные разности функции счета не конечны")
    return scores.reshape(ctx.n, ctx.layout.k)


__all__ = [
    "LOG_FLOOR", "LikelihoodContext", "build_context", "linear_predictors",
    "param_values", "param_at", "loglik_terms", "individual_loglik",
    "total_loglik", "score_contributions",
]
