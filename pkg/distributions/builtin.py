# distributions/builtin.py
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Tuple, Union

import numpy as np
from scipy.special import betaln, gammaln
from scipy.stats import norm

from errors import DistributionError
from .special import log1mexp, log_beta_pq, log_gamma_pq

ArrayLike = Union[float, np.ndarray]
SQRT2 = np.sqrt(2.0)


class Constraint(str, Enum):
    """Класс ограничения параметра"""
    FREE = "free"
    POSITIVE = "positive"
    NONZERO = "nonzero"


@dataclass(frozen=True)
class ParamConstraint:
    name: str
    constraint: Constraint = Constraint.FREE

    def check(self, value) -> bool:
        value = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(value)):
            return False
        if self.constraint is Constraint.POSITIVE:
            return bool(np.all(value > 0))
        if self.constraint is Constraint.NONZERO:
            return bool(np.all(value != 0))
        return True


class Distribution:
    """
    Ядро распределения: log S, log f, log F на numpy-массивах.
    Параметры передаются словарем имя -> число или массив той же формы, что t.
    """
    id: str = ""
    label: str = ""
    parameters: Tuple[ParamConstraint, ...] = ()
    location: str = "beta"
    # семейства ОГ/ОF инициализируются по mean/sd log(tau)
    gg_family: bool = True

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.parameters]

    def constraint_of(self, name: str) -> Constraint:
        for p in self.parameters:
            if p.name == name:
                return p.constraint
        raise DistributionError(f"У распределения {self.id} нет параметра {name}")

    def validate(self, params: Mapping[str, ArrayLike]):
        for p in self.parameters:
            if p.name not in params:
                raise DistributionError(f"{self.id}: не задан параметр {p.name}")
            if not p.check(params[p.name]):
                raise DistributionError(
                    f"{self.id}: параметр {p.name} нарушает ограничение {p.constraint.value}"
                )

    def log_survival(self, params: Mapping[str, ArrayLike], t: ArrayLike) -> np.ndarray:
        raise NotImplementedError

    def log_density(self, params: Mapping[str, ArrayLike], t: ArrayLike) -> np.ndarray:
        raise NotImplementedError

    def log_cdf(self, params: Mapping[str, ArrayLike], t: ArrayLike) -> np.ndarray:
        return log1mexp(self.log_survival(params, t))

    def log_hazard(self, params: Mapping[str, ArrayLike], t: ArrayLike) -> np.ndarray:
        log_s = self.log_survival(params, t)
        if np.any(np.isneginf(log_s)):
            raise DistributionError(f"{self.id}: S(t) обратилась в 0, риск не определен")
        return self.log_density(params, t) - log_s


class Exponential(Distribution):
    id, label = "exp", "Exponential"
    parameters = (ParamConstraint("beta"),)

    def log_survival(self, params, t):
        return -np.exp(-params["beta"]) * t

    def log_density(self, params, t):
        return -params["beta"] - np.exp(-params["beta"]) * t


class Weibull(Distribution):
    id, label = "weibull", "Weibull"
    parameters = (ParamConstraint("beta"), ParamConstraint("sigma", Constraint.POSITIVE))

    def log_survival(self, params, t):
        w = (np.log(t) - params["beta"]) / params["sigma"]
        return -np.exp(w)

    def log_density(self, params, t):
        w = (np.log(t) - params["beta"]) / params["sigma"]
        return -np.log(params["sigma"]) - np.log(t) + w - np.exp(w)


def _gengamma_parts(beta, sigma, lam, t):
    w = (np.log(t) - beta) / sigma
    shape = 1.0 / lam ** 2
    log_x = lam * w - 2.0 * np.log(np.abs(lam))
    return shape, log_x


def _gengamma_log_surv_cdf(beta, sigma, lam, t):
    shape, log_x = _gengamma_parts(beta, sigma, lam, t)
    logp, logq = log_gamma_pq(shape, np.exp(log_x))
    lam = np.broadcast_to(lam, np.shape(logp))
    # при lambda < 0 t^(lambda/sigma) убывает по t, и роли P и Q меняются
    return np.where(lam > 0, logq, logp), np.where(lam > 0, logp, logq)


def _gengamma_log_density(beta, sigma, lam, t):
    shape, log_x = _gengamma_parts(beta, sigma, lam, t)
    return (np.log(np.abs(lam)) - np.log(sigma) - np.log(t)
            + shape * log_x - np.exp(log_x) - gammaln(shape))


class GenGamma(Distribution):
    """Обобщенное гамма (параметризация Прентиса), lambda != 0"""
    id, label = "gengamma", "Generalized Gamma"
    parameters = (
        ParamConstraint("beta"),
        ParamConstraint("sigma", Constraint.POSITIVE),
        ParamConstraint("lambda", Constraint.NONZERO),
    )

    def log_survival(self, params, t):
        return _gengamma_log_surv_cdf(params["beta"], params["sigma"], params["lambda"], t)[0]

    def log_cdf(self, params, t):
        return _gengamma_log_surv_cdf(params["beta"], params["sigma"], params["lambda"], t)[1]

    def log_density(self, params, t):
        return _gengamma_log_density(params["beta"], params["sigma"], params["lambda"], t)


class Gamma(Distribution):
    """Гамма: частный случай обобщенного гамма при sigma = lambda"""
    id, label = "gamma", "Gamma"
    parameters = (ParamConstraint("beta"), ParamConstraint("sigma", Constraint.POSITIVE))

    def log_survival(self, params, t):
        return _gengamma_log_surv_cdf(params["beta"], params["sigma"], params["sigma"], t)[0]

    def log_cdf(self, params, t):
        return _gengamma_log_surv_cdf(params["beta"], params["sigma"], params["sigma"], t)[1]

    def log_density(self, params, t):
        return _gengamma_log_density(params["beta"], params["sigma"], params["sigma"], t)


class LogNormal(Distribution):
    id, label = "lnorm", "Log-Normal"
    parameters = (ParamConstraint("beta"), ParamConstraint("sigma", Constraint.POSITIVE))

    def log_survival(self, params, t):
        return norm.logsf((np.log(t) - params["beta"]) / params["sigma"])

    def log_cdf(self, params, t):
        return norm.logcdf((np.log(t) - params["beta"]) / params["sigma"])

    def log_density(self, params, t):
        w = (np.log(t) - params["beta"]) / params["sigma"]
        return norm.logpdf(w) - np.log(params["sigma"]) - np.log(t)


class Gompertz(Distribution):
    id, label = "gompertz", "Gompertz"
    parameters = (ParamConstraint("beta"), ParamConstraint("nu", Constraint.NONZERO))
    gg_family = False

    def log_survival(self, params, t):
        nu = params["nu"]
        return -np.exp(-params["beta"]) * np.expm1(nu * t) / nu

    def log_density(self, params, t):
        return -params["beta"] + params["nu"] * t + self.log_survival(params, t)


class LogLogistic(Distribution):
    """Лог-логистическое с показателем sqrt(2)/sigma (совпадает с GenF при q=0, p=1)"""
    id, label = "llogis", "Log-logistic"
    parameters = (ParamConstraint("beta"), ParamConstraint("sigma", Constraint.POSITIVE))

    def log_survival(self, params, t):
        u = SQRT2 * (np.log(t) - params["beta"]) / params["sigma"]
        return -np.logaddexp(0.0, u)

    def log_cdf(self, params, t):
        u = SQRT2 * (np.log(t) - params["beta"]) / params["sigma"]
        return -np.logaddexp(0.0, -u)

    def log_density(self, params, t):
        u = SQRT2 * (np.log(t) - params["beta"]) / params["sigma"]
        kappa = SQRT2 / params["sigma"]
        return np.log(kappa) - np.log(t) + u - 2.0 * np.logaddexp(0.0, u)


def prentice_to_m(q, p):
    """(q, p) -> (m1, m2, delta) без вычитания близких чисел"""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    delta = np.sqrt(q ** 2 + 2.0 * p)
    with np.errstate(divide="ignore", invalid="ignore"):
        m1 = np.where(q >= 0, 2.0 / (delta * (delta + q)), (delta - q) / (p * delta))
        m2 = np.where(q <= 0, 2.0 / (delta * (delta - q)), (delta + q) / (p * delta))
    return m1, m2, delta


def m_to_prentice(m1, m2):
    """(m1, m2) -> (q, p)"""
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    q = (1.0 / m1 - 1.0 / m2) / np.sqrt(1.0 / m1 + 1.0 / m2)
    p = 2.0 / (m1 + m2)
    return q, p


def _genf_log_terms(beta, sigma, m1, m2, delta, t):
    w = delta * (np.log(t) - beta) / sigma
    # x = m2 / (m2 + m1 e^w), 1 - x = m1 e^w / (m2 + m1 e^w)
    log_den = np.logaddexp(np.log(m2), np.log(m1) + w)
    log_x = np.log(m2) - log_den
    log_1mx = np.log(m1) + w - log_den
    return w, log_x, log_1mx


def _genf_log_surv_cdf(beta, sigma, m1, m2, delta, t):
    _, log_x, log_1mx = _genf_log_terms(beta, sigma, m1, m2, delta, t)
    return log_beta_pq(log_x, log_1mx, m2, m1)


def _genf_log_density(beta, sigma, m1, m2, delta, t):
    w, _, _ = _genf_log_terms(beta, sigma, m1, m2, delta, t)
    log_ratio = np.log(m1) - np.log(m2)
    return (np.log(delta) - np.log(sigma) - np.log(t) + m1 * w + m1 * log_ratio
            - betaln(m1, m2) - (m1 + m2) * np.logaddexp(0.0, log_ratio + w))


class GenF(Distribution):
    """Обобщенное F в параметризации Прентиса (q, p)"""
    id, label = "genf", "Generalized F"
    parameters = (
        ParamConstraint("beta"),
        ParamConstraint("sigma", Constraint.POSITIVE),
        ParamConstraint("q"),
        ParamConstraint("p", Constraint.POSITIVE),
    )

    def _args(self, params):
        m1, m2, delta = prentice_to_m(params["q"], params["p"])
        return params["beta"], params["sigma"], m1, m2, delta

    def log_survival(self, params, t):
        return _genf_log_surv_cdf(*self._args(params), t)[0]

    def log_cdf(self, params, t):
        return _genf_log_surv_cdf(*self._args(params), t)[1]

    def log_density(self, params, t):
        return _genf_log_density(*self._args(params), t)


class GenFOrig(Distribution):
    """Обобщенное F в исходной параметризации (m1, m2)"""
    id, label = "genf_orig", "Generalized F (original)"
    parameters = (
        ParamConstraint("beta"),
        ParamConstraint("sigma", Constraint.POSITIVE),
        ParamConstraint("m1", Constraint.POSITIVE),
        ParamConstraint("m2", Constraint.POSITIVE),
    )

    def _args(self, params):
        m1 = np.asarray(params["m1"], dtype=float)
        m2 = np.asarray(params["m2"], dtype=float)
        delta = np.sqrt(1.0 / m1 + 1.0 / m2)
        return params["beta"], params["sigma"], m1, m2, delta

    def log_survival(self, params, t):
        return _genf_log_surv_cdf(*self._args(params), t)[0]

    def log_cdf(self, params, t):
        return _genf_log_surv_cdf(*self._args(params), t)[1]

    def log_density(self, params, t):
        return _genf_log_density(*self._args(params), t)


# Встроенные распределения
DISTRIBUTIONS: Dict[str, Distribution] = {
    d.id: d for d in (
        Exponential(), Weibull(), Gamma(), LogNormal(), Gompertz(),
        LogLogistic(), GenGamma(), GenF(), GenFOrig(),
    )
}

ALIASES = {
    "exponential": "exp",
    "lognormal": "lnorm",
    "loglogistic": "llogis",
    "generalized_gamma": "gengamma",
    "generalized_f": "genf",
}


def get_distribution(name: str) -> Distribution:
    """Получает встроенное распределение по имени (без учета регистра)"""
    key = name.strip().lower()
    key = ALIASES.get(key, key)
    if key not in DISTRIBUTIONS:
        raise DistributionError(
            f"Неизвестное распределение: {name}. Доступны: {', '.join(DISTRIBUTIONS)}"
        )
    return DISTRIBUTIONS[key]


def list_distributions() -> List[Dict[str, object]]:
    """Сводка встроенных распределений для --list-dists"""
    return [
        {
            "id": d.id,
            "label": d.label,
            "parameters": [(p.name, p.constraint.value) for p in d.parameters],
        }
        for d in DISTRIBUTIONS.values()
    ]


def _prepare(dist_id: str, params: Mapping[str, ArrayLike], t: ArrayLike):
    dist = get_distribution(dist_id) if isinstance(dist_id, str) else dist_id
    dist.validate(params)
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DistributionError("Время должно быть положительным")
    return dist, {k: np.asarray(v, dtype=float) for k, v in params.items()}, t


def _as_output(values: np.ndarray):
    values = np.asarray(values)
    return float(values) if values.ndim == 0 else values


def survival(dist_id, params: Mapping[str, ArrayLike], t: ArrayLike):
    """S(t)"""
    dist, params, t = _prepare(dist_id, params, t)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        return _as_output(np.exp(dist.log_survival(params, t)))


def density(dist_id, params: Mapping[str, ArrayLike], t: ArrayLike):
    """f(t)"""
    dist, params, t = _prepare(dist_id, params, t)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        return _as_output(np.exp(dist.log_density(params, t)))


def hazard(dist_id, params: Mapping[str, ArrayLike], t: ArrayLike):
    """h(t) = f(t) / S(t)"""
    dist, params, t = _prepare(dist_id, params, t)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        return _as_output(np.exp(dist.log_hazard(params, t)))


__all__ = [
    "Constraint", "ParamConstraint", "Distribution", "DISTRIBUTIONS",
    "get_distribution", "list_distributions", "prentice_to_m", "m_to_prentice",
    "survival", "density", "hazard",
]
