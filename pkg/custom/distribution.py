# custom/distribution.py
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from distributions.builtin import Constraint, Distribution, ParamConstraint
from errors import ConfigError, DistributionError
from .expr import TIME, Node, PrepProgram, evaluate, free_names, parse, parse_prep

ROLES = ("density", "hazard", "survival")
# допуск на log S > 0 при выводе S = f / h
LOG_SURV_TOL = 1e-12


@dataclass(frozen=True)
class CustomDistribution:
    """
    Пользовательское распределение: два из трех выражений (плотность, риск,
    выживаемость), каждое в линейной или логарифмической форме
    """
    density: Optional[str] = None
    hazard: Optional[str] = None
    survival: Optional[str] = None
    log_density: Optional[str] = None
    log_hazard: Optional[str] = None
    log_survival: Optional[str] = None
    prep: str = ""
    param_anc: Tuple[str, ...] = ()
    location: str = "beta"
    log_transf_param: Tuple[str, ...] = ()
    # параметры с нижней границей 0 тоже считаются положительными
    lower: Tuple[Tuple[str, float], ...] = field(default=())

    def provided(self) -> Dict[str, Tuple[str, bool]]:
        """роль -> (текст, логарифмическая форма)"""
        roles = {}
        for role in ROLES:
            linear = getattr(self, role)
            logged = getattr(self, f"log_{role}")
            if linear is not None and logged is not None:
                raise ConfigError(f"Роль {role} задана одновременно в обычной и логарифмической форме")
            if linear is not None:
                roles[role] = (linear, False)
            elif logged is not None:
                roles[role] = (logged, True)
        return roles

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return (self.location, *self.param_anc)


class CustomKernel(Distribution):
    """Ядро, собранное из выражений; недостающая роль выводится через h = f / S"""
    id = "custom"
    label = "Custom"
    gg_family = False

    def __init__(self, spec: CustomDistribution, roles: Dict[str, Tuple[Node, bool]],
                 prep: PrepProgram, parameters: Tuple[ParamConstraint, ...]):
        self.spec = spec
        self.roles = roles
        self.prep = prep
        self.parameters = parameters
        self.location = spec.location

    def _env(self, params: Mapping, t) -> Dict[str, np.ndarray]:
        env = {name: np.asarray(params[name], dtype=float) for name in self.names}
        env[TIME] = np.asarray(t, dtype=float)
        return self.prep.run(env)

    def _log_role(self, role: str, env, t) -> np.ndarray:
        node, logged = self.roles[role]
        value = np.asarray(evaluate(node, env), dtype=float)
        value = np.broadcast_to(value, np.broadcast(value, np.asarray(t)).shape)
        if logged:
            return value
        if np.any(value < 0):
            bad = np.ravel(np.broadcast_to(np.asarray(t, dtype=float), value.shape)[value < 0])[0]
            raise DistributionError(f"Функция {role} отрицательна при time={bad:g}")
        with np.errstate(divide="ignore"):
            return np.log(value)

    def _log_all(self, params, t) -> Dict[str, np.ndarray]:
        env = self._env(params, t)
        logs = {role: self._log_role(role, env, t) for role in self.roles}
        if "survival" not in logs:
            log_s = logs["density"] - logs["hazard"]
            above = log_s > LOG_SURV_TOL
            if np.any(above) or np.any(np.isnan(log_s)):
                bad = np.ravel(np.broadcast_to(np.asarray(t, dtype=float), log_s.shape)[above | np.isnan(log_s)])[0]
                raise DistributionError(
                    f"Выведенная выживаемость S = f/h вне [0, 1] при time={bad:g}"
                )
            logs["survival"] = np.minimum(log_s, 0.0)
        if "density" not in logs:
            logs["density"] = logs["hazard"] + logs["survival"]
        if "hazard" not in logs:
            logs["hazard"] = logs["density"] - logs["survival"]
        return logs

    def log_survival(self, params, t):
        return self._log_all(params, t)["survival"]

    def log_density(self, params, t):
        return self._log_all(params, t)["density"]

    def log_hazard(self, params, t):
        return self._log_all(params, t)["hazard"]


def lower_names(custom: CustomDistribution) -> Tuple[str, ...]:
    return tuple(name for name, _ in custom.lower)


def assemble(custom: CustomDistribution) -> CustomKernel:
    """
    Проверяет пользовательское распределение и собирает из него ядро
    """
    provided = custom.provided()
    if len(provided) != 2:
        raise ConfigError(
            "Нужно задать ровно две функции из density, hazard, survival "
            f"(задано: {', '.join(provided) or 'ни одной'})"
        )

    params = custom.parameter_names
    if len(set(params)) != len(params):
        raise ConfigError(f"Повторяющиеся имена параметров: {', '.join(params)}")
    if TIME in params:
        raise ConfigError("Имя time зарезервировано для времени события")

    prep = parse_prep(custom.prep)
    known = {TIME, *params}
    for name, node in prep.assignments:
        unknown = free_names(node) - known
        if unknown:
            raise ConfigError(f"В custom_prep ({name}) не определены: {', '.join(sorted(unknown))}")
        if name in params or name == TIME:
            raise ConfigError(f"custom_prep не может переопределять {name}")
        known.add(name)

    roles: Dict[str, Tuple[Node, bool]] = {}
    for role, (text, logged) in provided.items():
        node = parse(text)
        unknown = free_names(node) - known
        if unknown:
            raise ConfigError(f"В выражении {role} не определены: {', '.join(sorted(unknown))}")
        roles[role] = (node, logged)

    for name in (*custom.log_transf_param, *lower_names(custom)):
        if name not in params:
            raise ConfigError(f"Параметр {name} не объявлен в location или param_anc")

    lower = dict(custom.lower)
    constraints = tuple(
        ParamConstraint(
            name,
            Constraint.POSITIVE
            if name in custom.log_transf_param or lower.get(name) == 0
            else Constraint.FREE,
        )
        for name in params
    )
    return CustomKernel(custom, roles, prep, constraints)


__all__ = ["ROLES", "CustomDistribution", "CustomKernel", "assemble"]
