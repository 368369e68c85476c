# dataset/loader.py
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from config import DATA_CONFIG
from errors import DataError

Cell = Union[float, str, None]


@dataclass
class RawTable:
    """Таблица с заголовком; ячейки - число, текст или None (пропуск)"""
    columns: List[str]
    rows: List[List[Cell]] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for name in self.columns:
            key = name.lower()
            if key in seen:
                raise DataError(f"Повторяющееся имя столбца: {name}")
            seen.add(key)
        for i, row in enumerate(self.rows, 1):
            if len(row) != len(self.columns):
                raise DataError(
                    f"Строка {i}: {len(row)} ячеек при {len(self.columns)} столбцах"
                )

    def index(self, name: str) -> int:
        """Индекс столбца без учета регистра"""
        key = name.lower()
        for i, column in enumerate(self.columns):
            if column.lower() == key:
                return i
        raise DataError(f"Столбец не найден: {name}")

    def has_column(self, name: str) -> bool:
        return any(column.lower() == name.lower() for column in self.columns)

    def column(self, name: str) -> List[Cell]:
        i = self.index(name)
        return [row[i] for row in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


def parse_cell(text: str, missing_tokens: Iterable[str]) -> Cell:
    """Типизация ячейки: пропуск, число или текст"""
    stripped = text.strip()
    if stripped in missing_tokens or text in missing_tokens:
        return None
    try:
        value = float(stripped)
    except ValueError:
        return stripped
    if not math.isfinite(value):
        return stripped
    return value


def load_table(path: Union[str, Path], missing_tokens: Optional[Sequence[str]] = None) -> RawTable:
    """
    Читает CSV с заголовком; числовые ячейки приводятся к float
    """
    tokens = set(DATA_CONFIG["missing_tokens"] if missing_tokens is None else missing_tokens)
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            records = [r for r in csv.reader(f) if r]
    except OSError as e:
        raise DataError(f"Не удалось прочитать файл {path}: {e}") from e

    if not records:
        raise DataError(f"Файл пуст: {path}")

    header = [name.strip() for name in records[0]]
    rows = [[parse_cell(cell, tokens) for cell in record] for record in records[1:]]
    return RawTable(columns=header, rows=rows)


__all__ = ["Cell", "RawTable", "parse_cell", "load_table"]
