# ui/report.py
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from jinja2 import Environment, StrictUndefined

from config import INFERENCE_CONFIG, REPORT_CONFIG
from dataset.response import format_value
from model.inference import ComparisonRow, EstimateRow
from model.optimizer import ConvergenceRecord
from model.predict import PredictionRecord

ESTIMATE_HEADER = ("Variable", "Estimate", "S.E.", "CI Lower", "CI Upper", "t Value", "Pr>|t|")
PREDICTION_VALUE_HEADER = ("Survival", "Survival SE", "Hazard", "Hazard SE")
COMPARISON_HEADER = ("Distribution", "Log Likelihood", "AIC", "BIC", "k", "Converged")


def fmt_number(value: Optional[float], decimals: int) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "."
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{decimals}f}"


def fmt_p(value: Optional[float], threshold: float = INFERENCE_CONFIG["p_threshold"]) -> str:
    """p-значение: 4 знака, меньше порога - "<.0001" """
    if value is None or math.isnan(value):
        return "."
    if value < threshold:
        return "<" + f"{threshold:.{REPORT_CONFIG['p_decimals']}f}".lstrip("0")
    return fmt_number(value, REPORT_CONFIG["p_decimals"])


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Таблица фиксированной ширины: первый столбец по левому краю, остальные по правому"""
    widths = [len(h) for h in header]
    for row in rows:
        for j, cell in enumerate(row):
            widths[j] = max(widths[j], len(cell))

    def line(cells):
        parts = [cells[0].ljust(widths[0])]
        parts += [cell.rjust(width) for cell, width in zip(cells[1:], widths[1:])]
        return "  ".join(parts).rstrip()

    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
    return "\n".join([line(header), rule] + [line(row) for row in rows])


def estimate_cells(row: EstimateRow) -> List[str]:
    d = REPORT_CONFIG["estimate_decimals"]
    return [
        row.label,
        fmt_number(row.estimate, d),
        fmt_number(row.se, d),
        fmt_number(row.lower, d),
        fmt_number(row.upper, d),
        fmt_number(row.t, REPORT_CONFIG["t_decimals"]),
        fmt_p(row.p),
    ]


def estimate_table_text(rows: Sequence[EstimateRow]) -> str:
    return format_table(ESTIMATE_HEADER, [estimate_cells(row) for row in rows])


def prediction_header(records: Sequence[PredictionRecord]) -> List[str]:
    covariates = [name for name, _ in records[0].covariates] if records else []
    header = ["Obs", "time"] + covariates
    if any(r.stratum is not None for r in records):
        header.append("stratum")
    return header + list(PREDICTION_VALUE_HEADER)


def prediction_cells(records: Sequence[PredictionRecord]) -> List[List[str]]:
    d = REPORT_CONFIG["prediction_decimals"]
    stratified = any(r.stratum is not None for r in records)
    rows = []
    for i, record in enumerate(records, 1):
        cells = [str(i), format_value(record.time)]
        cells += [format_value(value) for _, value in record.covariates]
        if stratified:
            cells.append(record.stratum or "")
        cells += [
            fmt_number(record.survival, d),
            fmt_number(record.survival_se, d),
            fmt_number(record.hazard, d),
            fmt_number(record.hazard_se, d),
        ]
        rows.append(cells)
    return rows


def prediction_table_text(records: Sequence[PredictionRecord]) -> str:
    return format_table(prediction_header(records), prediction_cells(records))


def comparison_table_text(rows: Sequence[ComparisonRow]) -> str:
    d = REPORT_CONFIG["criteria_decimals"]
    return format_table(COMPARISON_HEADER, [
        [row.distribution, fmt_number(row.loglik, d), fmt_number(row.aic, d),
         fmt_number(row.bic, d), str(row.k), "yes" if row.converged else "no"]
        for row in rows
    ])


def criteria_line(loglik: float, aic: float, bic: float) -> str:
    d = REPORT_CONFIG["criteria_decimals"]
    return (
        f"Log Likelihood = {fmt_number(loglik, d)}   "
        f"AIC = {fmt_number(aic, d)}   BIC = {fmt_number(bic, d)}"
    )


@dataclass
class StratumSummary:
    label: str
    n: int
    rows: List[EstimateRow]
    loglik: float
    aic: float
    bic: float
    convergence: ConvergenceRecord


@dataclass
class RunReport:
    """Содержимое отчета одного запуска; все числа берутся из результатов подгонки"""
    title: str
    n_input: int
    n_used: int
    rows: List[EstimateRow]
    loglik: float
    aic: float
    bic: float
    convergence: ConvergenceRecord
    deletions: Dict[str, int] = field(default_factory=dict)
    log_rows: List[EstimateRow] = field(default_factory=list)
    predictions: List[PredictionRecord] = field(default_factory=list)
    strata: List[StratumSummary] = field(default_factory=list)
    comparison: List[ComparisonRow] = field(default_factory=list)
    manifest: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    covariance_kind: str = "regular"
    alpha: float = INFERENCE_CONFIG["alpha"]

    @property
    def exit_code(self) -> int:
        return 0 if self.convergence.converged else 2

    @property
    def any_clamped(self) -> bool:
        return any(record.clamped for record in self.predictions)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "title": self.title,
            "n_input": self.n_input,
            "n_used": self.n_used,
            "deletions": dict(self.deletions),
            "convergence": self.convergence.to_dict(),
            "manifest": list(self.manifest),
            "notes": list(self.notes),
        }


REPORT_TEMPLATE = """\
{{ report.title }}
{{ "=" * report.title|length }}

Observations read: {{ report.n_input }}   used: {{ report.n_used }}
{% if report.deletions %}
Deleted observations:
{% for reason, count in report.deletions.items() %}
  {{ reason }}: {{ count }}
{% endfor %}
{% endif %}

Parameter Estimates ({{ "%.0f"|format((1 - report.alpha) * 100) }}% CI, {{ report.covariance_kind }} covariance)
{{ report.rows|estimates }}

{{ criteria }}
{% if report.log_rows %}

Parameter Estimates (log scale)
{{ report.log_rows|estimates }}
{% endif %}
{% for stratum in report.strata %}

Stratum {{ stratum.label }} (n = {{ stratum.n }}, {{ stratum.convergence.status.value }})
{{ stratum.rows|estimates }}
{{ stratum_criteria[loop.index0] }}
{% endfor %}
{% if report.predictions %}

Prediction
{{ report.predictions|predictions }}
{% if report.any_clamped %}
  * confidence limits clamped to [0, 1] for survival and [0, inf) for hazard
{% endif %}
{% endif %}
{% if report.comparison %}

Model Comparison
{{ report.comparison|comparison }}
{% endif %}

Convergence: {{ report.convergence.status.value }} ({{ report.convergence.algorithm }}, {{ report.convergence.iterations }} iterations, max |gradient| = {{ "%.3e"|format(report.convergence.grad_norm) }}, gtol = {{ "%g"|format(report.convergence.gtol) }})
{% if report.convergence.message %}
  {{ report.convergence.message }}
{% endif %}
{% for note in report.notes %}
Note: {{ note }}
{% endfor %}
{% if report.manifest %}

Files:
{% for name in report.manifest %}
  {{ name }}
{% endfor %}
{% endif %}
"""


def _environment() -> Environment:
    env = Environment(trim_blocks=True, lstrip_blocks=True, undefined=StrictUndefined, keep_trailing_newline=True)
    env.filters["estimates"] = estimate_table_text
    env.filters["predictions"] = prediction_table_text
    env.filters["comparison"] = comparison_table_text
    return env


_ENV = _environment()


def render_report(report: RunReport) -> str:
    template = _ENV.from_string(REPORT_TEMPLATE)
    return template.render(
        report=report,
        criteria=criteria_line(report.loglik, report.aic, report.bic),
        stratum_criteria=[criteria_line(s.loglik, s.aic, s.bic) for s in report.strata],
    )


__all__ = [
    "ESTIMATE_HEADER", "fmt_number", "fmt_p", "format_table", "estimate_cells",
    "estimate_table_text", "prediction_header", "prediction_cells", "prediction_table_text",
    "comparison_table_text", "criteria_line", "StratumSummary", "RunReport", "render_report",
]
