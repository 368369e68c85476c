# dataset/response.py
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config import DATA_CONFIG
from errors import DataError
from .loader import Cell, RawTable


class CensorKind(str, Enum):
    """Тип наблюдения (Format 1 таблицы ответов)"""
    EVENT = "event"
    RIGHT = "right"
    LEFT = "left"
    INTERVAL = "interval"


@dataclass(frozen=True)
class ResponseBounds:
    """Границы интервала события; None - пропуск"""
    t1: Optional[float]
    t2: Optional[float]

    @property
    def kind(self) -> CensorKind:
        t1, t2 = self.t1, self.t2
        if t1 is not None and t2 is not None:
            if t1 == t2 and t1 > 0:
                return CensorKind.EVENT
            if 0 < t1 < t2:
                return CensorKind.INTERVAL
        elif t1 is not None and t1 > 0:
            return CensorKind.RIGHT
        elif t2 is not None and t2 > 0:
            return CensorKind.LEFT
        raise DataError(f"Неканонические границы: t1={t1}, t2={t2}")


@dataclass(frozen=True)
class Observation:
    """Одно наблюдение: интервал, вес, страта и исходные ковариаты"""
    bounds: ResponseBounds
    weight: float = 1.0
    stratum: Optional[str] = None
    covariates: Tuple[Tuple[str, Cell], ...] = ()

    def __post_init__(self):
        if not self.weight > 0:
            raise DataError(f"Вес должен быть положительным: {self.weight}")

    @property
    def kind(self) -> CensorKind:
        return self.bounds.kind

    @property
    def covariate_map(self) -> Dict[str, Cell]:
        return dict(self.covariates)

    def covariate(self, name: str) -> Cell:
        for key, value in self.covariates:
            if key == name:
                return value
        raise DataError(f"Нет ковариаты {name}")


@dataclass(frozen=True)
class ObservationSet:
    """Проверенный набор наблюдений и журнал удалений"""
    observations: Tuple[Observation, ...]
    deletions: Tuple[Tuple[str, int], ...] = ()
    n_input: int = 0
    covariate_names: Tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self.observations)

    def __getitem__(self, i: int) -> Observation:
        return self.observations[i]

    @property
    def n_deleted(self) -> int:
        return sum(count for _, count in self.deletions)

    @property
    def deletion_log(self) -> Dict[str, int]:
        return dict(self.deletions)

    @property
    def weights(self) -> np.ndarray:
        return np.array([obs.weight for obs in self.observations], dtype=float)

    def strata(self) -> List[str]:
        """Метки страт в порядке первого появления"""
        labels: List[str] = []
        for obs in self.observations:
            if obs.stratum is not None and obs.stratum not in labels:
                labels.append(obs.stratum)
        return labels

    def subset(self, stratum: str) -> "ObservationSet":
        kept = tuple(obs for obs in self.observations if obs.stratum == stratum)
        return replace(self, observations=kept, deletions=(), n_input=len(kept))

    def resolve(self, name: str) -> str:
        """Имя ковариаты в написании из заголовка таблицы"""
        for column in self.covariate_names:
            if column.lower() == name.lower():
                return column
        raise DataError(f"Ковариата отсутствует в данных: {name}")

    def complete_cases(self, names: Sequence[str]) -> "ObservationSet":
        """Удаляет строки с пропусками в используемых ковариатах"""
        names = [self.resolve(name) for name in names]
        kept = tuple(
            obs for obs in self.observations
            if all(obs.covariate(name) is not None for name in names)
        )
        dropped = len(self.observations) - len(kept)
        if not dropped:
            return self
        log = dict(self.deletions)
        log["missing covariate"] = log.get("missing covariate", 0) + dropped
        return replace(self, observations=kept, deletions=tuple(log.items()))


def format_value(value: Cell) -> str:
    """Текстовая метка значения: 1.0 -> '1', 0.5 -> '0.5'"""
    if value is None:
        return "."
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def _matches_censval(status: Cell, censval) -> bool:
    if isinstance(status, (int, float)):
        try:
            return status == float(censval)
        except (TypeError, ValueError):
            return False
    target = format_value(censval) if isinstance(censval, float) else str(censval)
    return str(status).strip() == target.strip()


def _format1_bounds(raw1: Cell, raw2: Cell) -> Tuple[Optional[ResponseBounds], Optional[str]]:
    if isinstance(raw1, str) or isinstance(raw2, str):
        return None, "non-numeric time"
    if raw1 is None and raw2 is None:
        return None, "both bounds missing"
    if (raw1 is not None and raw1 < 0) or (raw2 is not None and raw2 < 0):
        return None, "negative time"
    if raw1 is not None and raw2 is not None and raw1 > raw2:
        return None, "t1 greater than t2"
    if raw1 == 0 and raw2 is None:
        return None, "zero right-censoring time"
    if raw2 == 0:
        return None, "zero left-censoring time" if raw1 is None else "zero event time"
    if raw1 == 0:
        # (0, t2] эквивалентно цензурированию слева в t2
        raw1 = None
    return ResponseBounds(raw1, raw2), None


def _format2_bounds(time: Cell, status: Cell, censval) -> Tuple[Optional[ResponseBounds], Optional[str]]:
    if time is None:
        return None, "missing time"
    if isinstance(time, str):
        return None, "non-numeric time"
    if time < 0:
        return None, "negative time"
    if status is None:
        return None, "missing censor status"
    if time == 0:
        return None, "zero time"
    if _matches_censval(status, censval):
        return ResponseBounds(time, None), None
    return ResponseBounds(time, time), None


def normalize_response(
    table: RawTable,
    t1col: str,
    t2col: Optional[str] = None,
    censorcol: Optional[str] = None,
    censval=None,
    weightcol: Optional[str] = None,
    stratacols: Optional[Sequence[str]] = None,
) -> ObservationSet:
    """
    Приводит ответ к каноническому виду (t1, t2) и удаляет некорректные записи
    """
    if (t2col is None) == (censorcol is None):
        raise DataError("Нужно указать ровно один из столбцов t2 или censor")
    censval = DATA_CONFIG["censval"] if censval is None else censval
    stratacols = list(stratacols or [])

    i_t1 = table.index(t1col)
    i_t2 = table.index(t2col) if t2col is not None else None
    i_cens = table.index(censorcol) if censorcol is not None else None
    i_weight = table.index(weightcol) if weightcol is not None else None
    i_strata = [table.index(name) for name in stratacols]

    reserved = {i for i in [i_t1, i_t2, i_cens, i_weight, *i_strata] if i is not None}
    covariate_idx = [i for i in range(len(table.columns)) if i not in reserved]
    covariate_names = tuple(table.columns[i] for i in covariate_idx)

    kept: List[Observation] = []
    deletions: Dict[str, int] = {}

    for row_no, row in enumerate(table.rows, 1):
        if i_t2 is not None:
            bounds, reason = _format1_bounds(row[i_t1], row[i_t2])
        else:
            bounds, reason = _format2_bounds(row[i_t1], row[i_cens], censval)

        weight = 1.0
        if reason is None and i_weight is not None:
            raw = row[i_weight]
            if raw is None:
                reason = "missing weight"
            elif isinstance(raw, str) or raw <= 0:
                raise DataError(f"Строка {row_no}: вес должен быть положительным числом, получено {raw!r}")
            else:
                weight = raw

        stratum = None
        if reason is None and i_strata:
            values = [row[i] for i in i_strata]
            if any(v is None for v in values):
                reason = "missing stratum"
            else:
                stratum = "/".join(format_value(v) for v in values)

        if reason is not None:
            deletions[reason] = deletions.get(reason, 0) + 1
            continue

        kept.append(Observation(
            bounds=bounds,
            weight=weight,
            stratum=stratum,
            covariates=tuple((table.columns[i], row[i]) for i in covariate_idx),
        ))

    return ObservationSet(
        observations=tuple(kept),
        deletions=tuple(deletions.items()),
        n_input=len(table.rows),
        covariate_names=covariate_names,
    )


def observed_time(obs: Observation) -> float:
    """Наблюдаемое время: t1, t2 или середина интервала"""
    kind = obs.kind
    if kind is CensorKind.LEFT:
        return obs.bounds.t2
    if kind is CensorKind.INTERVAL:
        return (obs.bounds.t1 + obs.bounds.t2) / 2
    return obs.bounds.t1


__all__ = [
    "CensorKind", "ResponseBounds", "Observation", "ObservationSet",
    "format_value", "normalize_response", "observed_time",
]
