# ui/plots.py
"""SVG графики прогнозных кривых выживаемости и риска"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from jinja2 import Environment

from config import PLOT_CONFIG, REPORT_CONFIG
from errors import DataError
from model.predict import TrajectoryCurve

SVG_TEMPLATE = """\
<svg xmlns="http://www.w3.org/2000/svg" width="{{ width }}" height="{{ height }}" viewBox="0 0 {{ width }} {{ height }}" font-family="sans-serif" font-size="12">
  <rect x="0" y="0" width="{{ width }}" height="{{ height }}" fill="#ffffff"/>
  <text x="{{ width / 2 }}" y="{{ margin.top / 2 + 6 }}" text-anchor="middle" font-size="15">{{ title }}</text>
  <g class="axes" stroke="#444444" stroke-width="1">
    <line x1="{{ x0 }}" y1="{{ y0 }}" x2="{{ x1 }}" y2="{{ y0 }}"/>
    <line x1="{{ x0 }}" y1="{{ y0 }}" x2="{{ x0 }}" y2="{{ y1 }}"/>
  </g>
  <g class="ticks">
{% for tick in x_ticks %}
    <line x1="{{ tick.pos }}" y1="{{ y0 }}" x2="{{ tick.pos }}" y2="{{ y0 + 5 }}" stroke="#444444"/>
    <text x="{{ tick.pos }}" y="{{ y0 + 18 }}" text-anchor="middle">{{ tick.label }}</text>
{% endfor %}
{% for tick in y_ticks %}
    <line x1="{{ x0 - 5 }}" y1="{{ tick.pos }}" x2="{{ x0 }}" y2="{{ tick.pos }}" stroke="#444444"/>
    <text x="{{ x0 - 8 }}" y="{{ tick.pos + 4 }}" text-anchor="end">{{ tick.label }}</text>
{% endfor %}
  </g>
  <text x="{{ (x0 + x1) / 2 }}" y="{{ height - 15 }}" text-anchor="middle">{{ x_label }}</text>
  <text x="18" y="{{ (y0 + y1) / 2 }}" text-anchor="middle" transform="rotate(-90 18 {{ (y0 + y1) / 2 }})">{{ y_label }}</text>
{% for series in series_list %}
  <g class="series">
{% if series.band %}
    <polygon class="band" points="{{ series.band }}" fill="{{ series.color }}" fill-opacity="{{ band_opacity }}" stroke="none"/>
{% endif %}
    <polyline points="{{ series.points }}" fill="none" stroke="{{ series.color }}" stroke-width="2"/>
  </g>
{% endfor %}
  <g class="legend">
{% for series in series_list %}
    <line x1="{{ x1 - 200 }}" y1="{{ y1 + 15 + loop.index0 * 18 }}" x2="{{ x1 - 180 }}" y2="{{ y1 + 15 + loop.index0 * 18 }}" stroke="{{ series.color }}" stroke-width="2"/>
    <text x="{{ x1 - 175 }}" y="{{ y1 + 19 + loop.index0 * 18 }}">{{ series.label }}</text>
{% endfor %}
  </g>
</svg>
"""

_ENV = Environment(autoescape=True, trim_blocks=True, lstrip_blocks=True)

PANELS = {
    "survival": {"title": "Predicted survival", "y_label": "Survival probability"},
    "hazard": {"title": "Predicted hazard", "y_label": "Hazard rate"},
}


def _ticks(lo: float, hi: float, n: int, to_pos) -> List[Dict[str, object]]:
    return [
        {"pos": round(float(to_pos(v)), 2), "label": f"{v:.4g}"}
        for v in np.linspace(lo, hi, n + 1)
    ]


def _points(xs: np.ndarray, ys: np.ndarray) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))


def render_svg(curves: Sequence[TrajectoryCurve], quantity: str, bands: bool = True) -> str:
    """Одна панель: ломаная на каждую группу, полосы при bands, легенда"""
    if not curves:
        raise DataError("Нет кривых для построения графика")
    for curve in curves:
        if len(curve.times) < 2:
            raise DataError("Для графика нужно не меньше двух точек")
    if quantity not in PANELS:
        raise ValueError(f"Неизвестная величина {quantity!r}")

    width, height = PLOT_CONFIG["width"], PLOT_CONFIG["height"]
    margin = PLOT_CONFIG["margin"]
    x0, x1 = margin["left"], width - margin["right"]
    y0, y1 = height - margin["bottom"], margin["top"]

    def values(curve):
        if quantity == "survival":
            return curve.survival, curve.survival_lower, curve.survival_upper
        return curve.hazard, curve.hazard_lower, curve.hazard_upper

    show_bands = bands and all(curve.has_bands for curve in curves)
    t_max = max(float(np.max(curve.times)) for curve in curves)
    if quantity == "survival":
        y_max = 1.0
    else:
        tops = [np.nanmax(values(c)[2] if show_bands else values(c)[0]) for c in curves]
        y_max = float(np.nanmax(tops)) * 1.05
        if not np.isfinite(y_max) or y_max <= 0:
            y_max = 1.0

    def to_x(t):
        return x0 + (x1 - x0) * t / t_max

    def to_y(v):
        return y0 - (y0 - y1) * np.clip(v, 0.0, y_max) / y_max

    colors = PLOT_CONFIG["colors"]
    series_list = []
    for i, curve in enumerate(curves):
        point, lower, upper = values(curve)
        xs = to_x(curve.times)
        band = None
        if show_bands:
            ok = np.isfinite(lower) & np.isfinite(upper)
            if np.any(ok):
                band = _points(
                    np.concatenate([xs[ok], xs[ok][::-1]]),
                    np.concatenate([to_y(upper[ok]), to_y(lower[ok])[::-1]]),
                )
        series_list.append({
            "label": curve.group or "all",
            "color": colors[i % len(colors)],
            "points": _points(xs, to_y(point)),
            "band": band,
        })

    n_ticks = PLOT_CONFIG["n_axis_ticks"]
    return _ENV.from_string(SVG_TEMPLATE).render(
        width=width,
        height=height,
        margin=margin,
        x0=x0, x1=x1, y0=y0, y1=y1,
        title=PANELS[quantity]["title"],
        x_label="time",
        y_label=PANELS[quantity]["y_label"],
        x_ticks=_ticks(0.0, t_max, n_ticks, to_x),
        y_ticks=_ticks(0.0, y_max, n_ticks, to_y),
        series_list=series_list,
        band_opacity=PLOT_CONFIG["band_opacity"],
    )


def render_plots(curves: Sequence[TrajectoryCurve], bands: bool = True) -> Dict[str, str]:
    """Имя файла -> SVG-документ для кривых выживаемости и риска"""
    return {
        REPORT_CONFIG["surv_plot_file"]: render_svg(curves, "survival", bands),
        REPORT_CONFIG["haz_plot_file"]: render_svg(curves, "hazard", bands),
    }


def emit_plots(
    curves: Sequence[TrajectoryCurve],
    outdir: Union[str, Path],
    bands: bool = True,
    documents: Optional[Dict[str, str]] = None,
) -> List[Path]:
    """Пишет surv.svg и haz.svg; готовые documents не перерисовываются"""
    outdir = Path(outdir)
    documents = documents if documents is not None else render_plots(curves, bands)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in documents.items():
        path = outdir / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


__all__ = ["render_svg", "render_plots", "emit_plots"]
