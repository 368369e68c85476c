# model/spec.py
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import INFERENCE_CONFIG
from distributions.builtin import Constraint, Distribution
from errors import ConfigError
from .design import INTERCEPT, DesignMatrix

_ANC_RE = re.compile(r"(\w+)\s*\(([^)]*)\)")
_ASSIGN_RE = re.compile(r"([\w:]+)\s*=\s*([^\s,;]+)")


class Link(str, Enum):
    IDENTITY = "identity"
    LOG = "log"

    def inverse(self, eta):
        return np.exp(eta) if self is Link.LOG else eta


def parse_anc(text: Optional[str]) -> List[Tuple[str, List[str]]]:
    """ "sigma(age sex), lambda(sex)" -> [("sigma", ["age", "sex"]), ("lambda", ["sex"])] """
    if not text or not text.strip():
        return []
    groups = [(m.group(1), m.group(2).split()) for m in _ANC_RE.finditer(text)]
    rest = _ANC_RE.sub("", text).replace(",", "").strip()
    if rest or not groups:
        raise ConfigError(f"Не удалось разобрать anc: {text!r}; ожидается 'param(cov1 cov2), ...'")
    return groups


def parse_assignments(text: Optional[str]) -> Dict[str, float]:
    """ "sigma=1 beta:age=0.5" -> {"sigma": 1.0, "beta:age": 0.5} """
    if not text or not text.strip():
        return {}
    values: Dict[str, float] = {}
    for key, raw in _ASSIGN_RE.findall(text):
        try:
            values[key] = float(raw)
        except ValueError:
            raise ConfigError(f"Некорректное значение {key}={raw}") from None
    rest = _ASSIGN_RE.sub("", text).replace(",", "").replace(";", "").strip()
    if rest:
        raise ConfigError(f"Не удалось разобрать {text!r}; ожидается 'name=value ...'")
    return values


@dataclass(frozen=True)
class ModelSpec:
    """Модель: распределение, ковариаты параметров, начальные значения и границы"""
    distribution: Distribution
    covars: Tuple[str, ...] = ()
    anc: Tuple[Tuple[str, Tuple[str, ...]], ...] = ()
    class_cov: Tuple[str, ...] = ()
    refgrp: Tuple[str, ...] = ()
    log_transf_param: Tuple[str, ...] = ()
    init: Mapping[str, float] = field(default_factory=dict)
    lower: Mapping[str, float] = field(default_factory=dict)
    upper: Mapping[str, float] = field(default_factory=dict)
    alpha: float = INFERENCE_CONFIG["alpha"]
    robust: bool = INFERENCE_CONFIG["robust"]
    log_result: bool = INFERENCE_CONFIG["log_result"]

    def __post_init__(self):
        names = self.distribution.names
        if self.location not in names:
            raise ConfigError(f"Параметр положения {self.location} отсутствует в распределении")
        seen = set()
        for param, _ in self.anc:
            if param not in names:
                raise ConfigError(
                    f"anc: у распределения {self.distribution.id} нет параметра {param} "
                    f"(параметры: {', '.join(names)})"
                )
            if param == self.location:
                raise ConfigError(f"Ковариаты параметра положения задаются через covars, не anc")
            if param in seen:
                raise ConfigError(f"anc: параметр {param} указан дважды")
            seen.add(param)
        for bound in (self.lower, self.upper):
            for param in bound:
                if param not in names:
                    raise ConfigError(f"Граница задана для неизвестного параметра {param}")
        for param in self.lower:
            if param in self.upper and self.lower[param] >= self.upper[param]:
                raise ConfigError(f"{param}: нижняя граница не меньше верхней")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha должна лежать в (0, 1), получено {self.alpha}")

    @property
    def location(self) -> str:
        return self.distribution.location

    @property
    def parameters(self) -> List[str]:
        """Параметр положения, затем вспомогательные в порядке распределения"""
        names = self.distribution.names
        return [self.location] + [n for n in names if n != self.location]

    @property
    def ancillary(self) -> List[str]:
        return self.parameters[1:]

    @property
    def is_custom(self) -> bool:
        return self.distribution.id == "custom"

    @property
    def param_covars(self) -> Dict[str, List[str]]:
        covars = {name: [] for name in self.parameters}
        covars[self.location] = list(self.covars)
        for param, names in self.anc:
            covars[param] = list(names)
        return covars

    @property
    def all_covariates(self) -> List[str]:
        """Все используемые ковариаты в порядке появления (covars, затем anc)"""
        ordered: List[str] = []
        for names in self.param_covars.values():
            for name in names:
                if name.lower() not in (n.lower() for n in ordered):
                    ordered.append(name)
        return ordered


def default_links(spec: ModelSpec) -> Dict[str, Link]:
    """Положительные параметры - log-связь, остальные - тождественная"""
    links = {}
    for name in spec.parameters:
        if spec.is_custom:
            log = name in spec.log_transf_param
        else:
            log = spec.distribution.constraint_of(name) is Constraint.POSITIVE
        links[name] = Link.LOG if log else Link.IDENTITY
    return links


@dataclass(frozen=True)
class ParamSlot:
    parameter: str
    column: str
    link: Link
    label: str
    is_intercept: bool
    # параметр без ковариат с log-связью: в отчете exp(оценки)
    back_transform: bool = False

    @property
    def log_link(self) -> bool:
        return self.link is Link.LOG


@dataclass(frozen=True)
class ParameterLayout:
    """Плоский вектор коэффициентов модели"""
    slots: Tuple[ParamSlot, ...]
    ranges: Tuple[Tuple[str, int, int], ...]
    links: Tuple[Tuple[str, Link], ...]

    @property
    def k(self) -> int:
        return len(self.slots)

    @property
    def labels(self) -> List[str]:
        return [slot.label for slot in self.slots]

    @property
    def parameters(self) -> List[str]:
        return [name for name, _, _ in self.ranges]

    def slice_of(self, parameter: str) -> slice:
        for name, start, stop in self.ranges:
            if name == parameter:
                return slice(start, stop)
        raise KeyError(parameter)

    def link_of(self, parameter: str) -> Link:
        return dict(self.links)[parameter]

    def intercept_index(self, parameter: str) -> int:
        return self.slice_of(parameter).start

    def index(self, parameter: str, column: str) -> int:
        for i, slot in enumerate(self.slots):
            if slot.parameter == parameter and slot.column.lower() == column.lower():
                return i
        raise KeyError(f"{parameter}:{column}")

    @property
    def log_mask(self) -> np.ndarray:
        return np.array([slot.log_link for slot in self.slots], dtype=bool)

    @property
    def back_transform_mask(self) -> np.ndarray:
        return np.array([slot.back_transform for slot in self.slots], dtype=bool)

    def signature(self) -> Tuple[Tuple[str, str], ...]:
        return tuple((slot.parameter, slot.column) for slot in self.slots)


def build_layout(spec: ModelSpec, designs: Mapping[str, DesignMatrix]) -> ParameterLayout:
    """
    Порядок: параметр положения, затем вспомогательные; внутри параметра -
    свободный член, затем ковариаты
    """
    links = default_links(spec)
    for name in designs:
        if name not in links:
            raise ConfigError(f"Ковариаты назначены неизвестному параметру: {name}")

    expanded = any(designs[name].n_columns > 1 for name in spec.ancillary if name in designs)
    slots: List[ParamSlot] = []
    ranges = []
    for param in spec.parameters:
        design = designs.get(param)
        columns = design.columns if design is not None else (INTERCEPT,)
        intercept_only = len(columns) == 1
        if not intercept_only and (param in spec.lower or param in spec.upper):
            raise ConfigError(f"Границы поддерживаются только для параметров без ковариат: {param}")
        start = len(slots)
        for j, column in enumerate(columns):
            is_intercept = j == 0
            if expanded:
                label = f"{param}: {'intercept' if is_intercept else column}"
            elif param == spec.location:
                label = column
            else:
                label = param.upper()
            slots.append(ParamSlot(
                parameter=param,
                column=column,
                link=links[param],
                label=label,
                is_intercept=is_intercept,
                back_transform=links[param] is Link.LOG and intercept_only,
            ))
        ranges.append((param, start, len(slots)))
    return ParameterLayout(tuple(slots), tuple(ranges), tuple(links.items()))


__all__ = [
    "Link", "ModelSpec", "ParamSlot", "ParameterLayout",
    "parse_anc", "parse_assignments", "default_links", "build_layout",
]
