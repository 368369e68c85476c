# model/design.py
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from dataset.loader import Cell
from dataset.response import ObservationSet, format_value
from errors import DesignError

INTERCEPT = "Intercept"


class CovariateKind(str, Enum):
    CONTINUOUS = "continuous"
    CLASSIFICATION = "classification"


@dataclass(frozen=True)
class CovariateSchema:
    """Описание ковариаты; для категориальной - уровни и референсная группа"""
    name: str
    kind: CovariateKind = CovariateKind.CONTINUOUS
    levels: Tuple[str, ...] = ()
    reference: Optional[str] = None

    def __post_init__(self):
        if self.kind is CovariateKind.CLASSIFICATION:
            if len(set(self.levels)) != len(self.levels):
                raise DesignError(f"{self.name}: уровни не уникальны")
            if self.reference not in self.levels:
                raise DesignError(f"{self.name}: референсная группа {self.reference!r} не найдена среди уровней")

    @property
    def columns(self) -> List[str]:
        """Имена закодированных столбцов"""
        if self.kind is CovariateKind.CONTINUOUS:
            return [self.name]
        return [f"{self.name}_{level}" for level in self.levels if level != self.reference]

    def encode(self, value: Cell) -> List[float]:
        if value is None:
            raise DesignError(f"{self.name}: пропущенное значение")
        if self.kind is CovariateKind.CONTINUOUS:
            if isinstance(value, str):
                raise DesignError(f"{self.name}: ожидалось число, получено {value!r}")
            return [float(value)]
        label = format_value(value)
        if label not in self.levels:
            raise DesignError(f"{self.name}: уровень {label!r} не встречался при подгонке модели")
        return [1.0 if label == level else 0.0 for level in self.levels if level != self.reference]


@dataclass(frozen=True)
class DesignMatrix:
    """Матрица плана одного параметра распределения; первый столбец - свободный член"""
    parameter: str
    columns: Tuple[str, ...]
    values: np.ndarray

    @property
    def n_columns(self) -> int:
        return len(self.columns)


def parse_refgrp(text: Optional[str]) -> List[str]:
    """ "placebo,high risk" -> ["placebo", "high risk"] """
    if not text or not text.strip():
        return []
    return [label.strip() for label in text.split(",")]


def _resolve(names: Iterable[str], available: Sequence[str]) -> List[str]:
    lookup = {name.lower(): name for name in available}
    resolved = []
    for name in names:
        if name.lower() not in lookup:
            raise DesignError(f"Ковариата отсутствует в данных: {name}")
        if lookup[name.lower()] not in resolved:
            resolved.append(lookup[name.lower()])
    return resolved


def _sorted_levels(values: Iterable[Cell]) -> List[str]:
    present = {v for v in values if v is not None}
    if all(isinstance(v, float) for v in present):
        return [format_value(v) for v in sorted(present)]
    return sorted({format_value(v) for v in present})


def infer_schema(
    observations: ObservationSet,
    covars: Sequence[str],
    class_cov: Sequence[str] = (),
    refgrp: Sequence[str] = (),
) -> List[CovariateSchema]:
    """
    Определяет тип каждой ковариаты, уровни и референсные группы.
    Текстовые столбцы всегда категориальные; числовые - если указаны в class_cov.
    """
    names = _resolve(covars, observations.covariate_names)
    forced = set(_resolve(class_cov, observations.covariate_names))

    kinds: Dict[str, CovariateKind] = {}
    for name in names:
        values = [obs.covariate(name) for obs in observations]
        textual = any(isinstance(v, str) for v in values)
        kinds[name] = (
            CovariateKind.CLASSIFICATION if textual or name in forced else CovariateKind.CONTINUOUS
        )

    classification = [name for name in names if kinds[name] is CovariateKind.CLASSIFICATION]
    refgrp = list(refgrp)
    if refgrp and len(refgrp) != len(classification):
        raise DesignError(
            f"refgrp содержит {len(refgrp)} групп(ы) при {len(classification)} категориальных ковариатах"
        )

    schema: List[CovariateSchema] = []
    for name in names:
        if kinds[name] is CovariateKind.CONTINUOUS:
            schema.append(CovariateSchema(name))
            continue
        levels = _sorted_levels(obs.covariate(name) for obs in observations)
        if not levels:
            raise DesignError(f"{name}: нет наблюдаемых уровней")
        reference = refgrp[classification.index(name)] if refgrp else levels[0]
        if reference not in levels:
            raise DesignError(
                f"{name}: референсная группа {reference!r} не найдена (уровни: {', '.join(levels)})"
            )
        schema.append(CovariateSchema(name, CovariateKind.CLASSIFICATION, tuple(levels), reference))
    return schema


def schema_lookup(schema: Sequence[CovariateSchema]) -> Dict[str, CovariateSchema]:
    return {item.name.lower(): item for item in schema}


def design_columns(schema: Sequence[CovariateSchema], covars: Sequence[str]) -> List[str]:
    lookup = schema_lookup(schema)
    columns = [INTERCEPT]
    for name in covars:
        if name.lower() not in lookup:
            raise DesignError(f"Ковариата не описана в схеме: {name}")
        columns.extend(lookup[name.lower()].columns)
    return columns


def encode_rows(
    rows: Sequence[Mapping[str, Cell]],
    schema: Sequence[CovariateSchema],
    covars: Sequence[str],
) -> np.ndarray:
    """Кодирует строки (имя -> значение) в матрицу со свободным членом"""
    lookup = schema_lookup(schema)
    for name in covars:
        if name.lower() not in lookup:
            raise DesignError(f"Ковариата не описана в схеме: {name}")
    matrix = []
    for row in rows:
        values = {key.lower(): value for key, value in row.items()}
        encoded = [1.0]
        for name in covars:
            item = lookup[name.lower()]
            if item.name.lower() not in values:
                raise DesignError(f"В строке нет ковариаты {item.name}")
            encoded.extend(item.encode(values[item.name.lower()]))
        matrix.append(encoded)
    width = len(design_columns(schema, covars))
    return np.array(matrix, dtype=float).reshape(len(rows), width)


def build_design(
    observations: ObservationSet,
    schema: Sequence[CovariateSchema],
    param_covars: Mapping[str, Sequence[str]],
    parameters: Optional[Sequence[str]] = None,
) -> Dict[str, DesignMatrix]:
    """
    Матрицы плана для каждого параметра; параметры без ковариат получают
    единственный столбец из единиц
    """
    parameters = list(parameters) if parameters is not None else list(param_covars)
    for name in param_covars:
        if name not in parameters:
            raise DesignError(f"Ковариаты назначены неизвестному параметру: {name}")
    rows = [obs.covariate_map for obs in observations]
    designs: Dict[str, DesignMatrix] = {}
    for param in parameters:
        covars = list(param_covars.get(param, ()))
        designs[param] = DesignMatrix(
            parameter=param,
            columns=tuple(design_columns(schema, covars)),
            values=encode_rows(rows, schema, covars),
        )
    return designs


__all__ = [
    "INTERCEPT", "CovariateKind", "CovariateSchema", "DesignMatrix",
    "parse_refgrp", "infer_schema", "design_columns", "encode_rows", "build_design",
]
