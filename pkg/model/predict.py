# model/predict.py
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config import PREDICTION_CONFIG
from dataset.loader import Cell, RawTable
from dataset.response import format_value
from errors import DataError, DesignError
from .design import encode_rows
from .fit import FitResult
from .inference import z_value
from .numdiff import fd_jacobian

TIME_COLUMN = "time"


@dataclass(frozen=True)
class PredictionRow:
    """Строка набора для прогноза: время и значения ковариат"""
    time: float
    covariates: Tuple[Tuple[str, Cell], ...]

    def __post_init__(self):
        if not self.time > 0:
            raise DataError(f"Время прогноза должно быть положительным: {self.time}")

    @property
    def group(self) -> str:
        return ", ".join(f"{name}={format_value(value)}" for name, value in self.covariates)

    @property
    def covariate_map(self) -> Dict[str, Cell]:
        return dict(self.covariates)


@dataclass(frozen=True)
class PredictionRecord:
    time: float
    covariates: Tuple[Tuple[str, Cell], ...]
    group: str
    stratum: Optional[str]
    survival: float
    survival_se: float
    survival_lower: float
    survival_upper: float
    hazard: float
    hazard_se: float
    hazard_lower: float
    hazard_upper: float
    clamped: bool

    def to_dict(self):
        data = asdict(self)
        data["covariates"] = {name: value for name, value in self.covariates}
        return data


@dataclass(frozen=True)
class TrajectoryCurve:
    group: str
    times: np.ndarray
    survival: np.ndarray
    hazard: np.ndarray
    survival_lower: Optional[np.ndarray] = None
    survival_upper: Optional[np.ndarray] = None
    hazard_lower: Optional[np.ndarray] = None
    hazard_upper: Optional[np.ndarray] = None
    clamped: bool = False

    @property
    def has_bands(self) -> bool:
        return self.survival_lower is not None


def rows_from_table(table: RawTable, covariates: Sequence[str]) -> List[PredictionRow]:
    """
    Строки прогноза из таблицы со столбцом time; ковариаты берутся в порядке
    столбцов таблицы
    """
    if not table.has_column(TIME_COLUMN):
        raise DataError("В наборе для прогноза нет столбца time")
    wanted = {name.lower() for name in covariates}
    for name in covariates:
        if not table.has_column(name):
            raise DesignError(f"В наборе для прогноза нет ковариаты {name}")
    i_time = table.index(TIME_COLUMN)
    used = [i for i, column in enumerate(table.columns) if column.lower() in wanted]

    rows = []
    for row_no, row in enumerate(table.rows, 1):
        time = row[i_time]
        if time is None or isinstance(time, str):
            raise DataError(f"Строка прогноза {row_no}: некорректное время {time!r}")
        rows.append(PredictionRow(
            time=float(time),
            covariates=tuple((table.columns[i], row[i]) for i in used),
        ))
    return rows


def _group_label(row: PredictionRow, stratum: Optional[str]) -> str:
    parts = [row.group] if row.group else []
    if stratum is not None:
        parts.append(f"stratum={stratum}")
    return ", ".join(parts)


def _component_fits(fit: FitResult) -> List[FitResult]:
    return fit.strata if fit.stratified else [fit]


def _param_values(fit: FitResult, rows: Sequence[Dict[str, Cell]]) -> Callable[[np.ndarray], Dict[str, np.ndarray]]:
    ctx = fit.context
    designs = {
        param: encode_rows(rows, ctx.schema, ctx.spec.param_covars[param])
        for param in ctx.layout.parameters
    }

    def values(theta: np.ndarray) -> Dict[str, np.ndarray]:
        with np.errstate(over="ignore"):
            return {
                param: ctx.layout.link_of(param).inverse(x @ theta[ctx.layout.slice_of(param)])
                for param, x in designs.items()
            }

    return values


def _evaluate(fit: FitResult, rows: Sequence[Dict[str, Cell]], times: np.ndarray):
    """S, h и их стандартные ошибки по дельта-методу в точках (row_i, t_i)"""
    if fit.theta is None or fit.context is None:
        raise DataError("Прогноз требует подогнанной модели")
    dist = fit.context.distribution
    values = _param_values(fit, rows)
    times = np.asarray(times, dtype=float)

    def survival(theta):
        params = values(theta)
        dist.validate(params)
        with np.errstate(under="ignore"):
            return np.exp(dist.log_survival(params, times))

    def hazard(theta):
        params = values(theta)
        dist.validate(params)
        with np.errstate(under="ignore", over="ignore"):
            return np.exp(dist.log_hazard(params, times))

    theta = fit.theta
    surv, haz = survival(theta), hazard(theta)
    if fit.covariance is None:
        nan = np.full(times.shape, np.nan)
        return surv, nan, haz, nan
    cov = fit.covariance.matrix
    g_s = fd_jacobian(survival, theta).reshape(times.size, theta.size)
    g_h = fd_jacobian(hazard, theta).reshape(times.size, theta.size)
    se_s = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", g_s, cov, g_s), 0.0))
    se_h = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", g_h, cov, g_h), 0.0))
    return surv, se_s, haz, se_h


def _bands(point, se, z, upper_limit):
    lower = point - z * se
    upper = point + z * se
    clipped_lower = np.maximum(lower, 0.0)
    clipped_upper = upper if upper_limit is None else np.minimum(upper, upper_limit)
    clamped = (lower < 0.0) | (upper > upper_limit if upper_limit is not None else False)
    return clipped_lower, clipped_upper, clamped


def predict_at(fit: FitResult, rows: Sequence[PredictionRow]) -> List[PredictionRecord]:
    """
    Прогноз S(t) и h(t) в строках набора; SE = sqrt(g' V g), g - градиент по theta.
    Полосы обрезаются до [0, 1] для S и [0, inf) для h.
    """
    z = z_value(fit.alpha)
    records: List[Tuple[int, int, PredictionRecord]] = []
    maps = [row.covariate_map for row in rows]
    times = np.array([row.time for row in rows], dtype=float)
    for s_index, component in enumerate(_component_fits(fit)):
        if not rows:
            break
        surv, se_s, haz, se_h = _evaluate(component, maps, times)
        s_lo, s_hi, s_clamped = _bands(surv, se_s, z, 1.0)
        h_lo, h_hi, h_clamped = _bands(haz, se_h, z, None)
        for i, row in enumerate(rows):
            group = _group_label(row, component.stratum)
            records.append((i, s_index, PredictionRecord(
                time=row.time,
                covariates=row.covariates,
                group=group,
                stratum=component.stratum,
                survival=float(surv[i]),
                survival_se=float(se_s[i]),
                survival_lower=float(s_lo[i]),
                survival_upper=float(s_hi[i]),
                hazard=float(haz[i]),
                hazard_se=float(se_h[i]),
                hazard_lower=float(h_lo[i]),
                hazard_upper=float(h_hi[i]),
                clamped=bool(s_clamped[i] or h_clamped[i]),
            )))
    records.sort(key=lambda item: (item[0], item[1]))
    return [record for _, _, record in records]


def unique_rows(rows: Sequence[PredictionRow]) -> List[PredictionRow]:
    """Удаляет строки с повторяющимися значениями ковариат (время не учитывается)"""
    seen = set()
    unique = []
    for row in rows:
        key = tuple((name.lower(), format_value(value)) for name, value in row.covariates)
        if key not in seen:
            seen.add(key)
            unique.append(row)
    return unique


def tick_grid(t_max: float, n_ticks: int = PREDICTION_CONFIG["n_ticks"]) -> np.ndarray:
    """t_max * j / n_ticks, j = 1..n_ticks"""
    if not t_max > 0:
        raise DataError(f"pred_max_time должно быть положительным: {t_max}")
    return t_max * np.arange(1, n_ticks + 1) / n_ticks


def trajectories(
    fit: FitResult,
    rows: Sequence[PredictionRow],
    t_max: float,
    bands: bool = PREDICTION_CONFIG["plot_cl"],
    n_ticks: int = PREDICTION_CONFIG["n_ticks"],
) -> List[TrajectoryCurve]:
    """Кривые выживаемости и риска на сетке из n_ticks точек для каждой уникальной строки"""
    times = tick_grid(t_max, n_ticks)
    z = z_value(fit.alpha)
    curves = []
    for row in unique_rows(rows):
        for component in _component_fits(fit):
            surv, se_s, haz, se_h = _evaluate(component, [row.covariate_map] * times.size, times)
            group = _group_label(row, component.stratum)
            if not bands:
                curves.append(TrajectoryCurve(group, times, surv, haz))
                continue
            s_lo, s_hi, s_clamped = _bands(surv, se_s, z, 1.0)
            h_lo, h_hi, h_clamped = _bands(haz, se_h, z, None)
            curves.append(TrajectoryCurve(
                group, times, surv, haz, s_lo, s_hi, h_lo, h_hi, bool(np.any(s_clamped | h_clamped))
            ))
    return curves


CURVE_COLUMNS = ("group", "time", "surv", "surv_lo", "surv_hi", "haz", "haz_lo", "haz_hi")


def curve_records(curves: Sequence[TrajectoryCurve]) -> Iterator[Dict[str, object]]:
    """Строки CSV кривых: group, time, surv, surv_lo, surv_hi, haz, haz_lo, haz_hi"""
    for curve in curves:
        for j, t in enumerate(curve.times):
            yield {
                "group": curve.group,
                "time": float(t),
                "surv": float(curve.survival[j]),
                "surv_lo": float(curve.survival_lower[j]) if curve.has_bands else None,
                "surv_hi": float(curve.survival_upper[j]) if curve.has_bands else None,
                "haz": float(curve.hazard[j]),
                "haz_lo": float(curve.hazard_lower[j]) if curve.has_bands else None,
                "haz_hi": float(curve.hazard_upper[j]) if curve.has_bands else None,
            }


__all__ = [
    "TIME_COLUMN", "PredictionRow", "PredictionRecord", "TrajectoryCurve",
    "rows_from_table", "predict_at", "unique_rows", "tick_grid", "trajectories",
    "CURVE_COLUMNS", "curve_records",
]
