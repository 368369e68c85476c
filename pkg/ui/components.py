# ui/components.py
import sys
from typing import Any, Dict, List, Sequence

from prompt_toolkit import print_formatted_text
from prompt_toolkit.formatted_text import HTML
from prompt_toolkit.styles import Style

from model.inference import EstimateRow
from .report import (
    ESTIMATE_HEADER, comparison_table_text, estimate_cells, format_table, prediction_table_text,
)

# Стиль терминального отчета
style = Style.from_dict({
    "header": "#61afef bold",
    "title": "#e5c07b bold",
    "table": "#abb2bf",
    "significant": "#98c379",
    "ok": "#98c379",
    "warning": "#d19a66",
    "error": "#e06c75 bold",
    "info": "#56b6c2",
})

STATUS_PREFIX = {
    "start": "🚀",
    "ok": "✅",
    "warning": "⚠️ ",
    "error": "❌",
    "info": "📁",
}


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class UIComponents:
    """Вывод отчета в терминал"""

    quiet = False

    @classmethod
    def echo(cls, markup: str):
        if not cls.quiet:
            print_formatted_text(HTML(markup), style=style, file=sys.stdout)

    @classmethod
    def print_line(cls, text: str):
        """Строка вывода оптимизатора"""
        cls.echo(_escape(text))

    @classmethod
    def print_header(cls, text: str):
        """Печатает заголовок"""
        cls.echo(f"\n<header>{'=' * 60}</header>")
        cls.echo(f"<header> {_escape(text)}</header>")
        cls.echo(f"<header>{'=' * 60}</header>")

    @classmethod
    def print_status(cls, kind: str, text: str):
        """Строка состояния с эмодзи; ошибки печатаются и в тихом режиме"""
        tag = kind if kind in ("ok", "warning", "error", "info") else "info"
        markup = f"<{tag}>{STATUS_PREFIX.get(kind, '')} {_escape(text)}</{tag}>"
        if kind == "error":
            print_formatted_text(HTML(markup), style=style, file=sys.stderr)
        else:
            cls.echo(markup)

    @classmethod
    def print_table(cls, title: str, text: str):
        cls.echo(f"\n<title>{_escape(title)}</title>")
        cls.echo(f"<table>{_escape(text)}</table>")

    @classmethod
    def print_estimates(cls, title: str, rows: Sequence[EstimateRow], p_threshold: float = 0.05):
        """Таблица оценок; строки с p < p_threshold подсвечиваются"""
        cls.echo(f"\n<title>{_escape(title)}</title>")
        lines = format_table(ESTIMATE_HEADER, [estimate_cells(row) for row in rows]).split("\n")
        cls.echo(f"<table>{_escape(lines[0])}\n{lines[1]}</table>")
        for row, line in zip(rows, lines[2:]):
            tag = "significant" if row.p < p_threshold else "table"
            cls.echo(f"<{tag}>{_escape(line)}</{tag}>")

    @classmethod
    def print_predictions(cls, records):
        if records:
            cls.print_table("Prediction", prediction_table_text(records))

    @classmethod
    def print_comparison(cls, rows):
        if rows:
            cls.print_table("Model Comparison", comparison_table_text(rows))

    @classmethod
    def print_distributions(cls, distributions: List[Dict[str, Any]]):
        """Список встроенных распределений (--list-dists)"""
        table = format_table(
            ("Distribution", "Label", "Parameters"),
            [
                [d["id"], d["label"], ", ".join(f"{name} ({constraint})" for name, constraint in d["parameters"])]
                for d in distributions
            ],
        )
        print_formatted_text(HTML(f"<table>{_escape(table)}</table>"), style=style, file=sys.stdout)


__all__ = ["style", "UIComponents"]
