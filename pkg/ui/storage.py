# ui/storage.py
import csv
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

from config import OUTPUT_DIR, REPORT_CONFIG


def to_jsonable(value: Any) -> Any:
    """numpy -> списки и числа Python, NaN и бесконечности -> None"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


class ResultStorage:
    """Запись результатов запуска в выходной каталог"""

    def __init__(self, output_dir: Union[str, Path] = OUTPUT_DIR):
        self.output_dir = Path(output_dir)
        self.written: List[str] = []

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def _register(self, path: Path) -> Path:
        if path.name not in self.written:
            self.written.append(path.name)
        return path

    def save_json(self, data: Dict[str, Any], name: str = REPORT_CONFIG["results_file"]) -> Path:
        """
        Сохраняет JSON без отметок времени: одинаковые входы дают одинаковые файлы
        """
        path = self._path(name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(to_jsonable(data), f, ensure_ascii=False, indent=2, allow_nan=False)
            f.write("\n")
        return self._register(path)

    def save_text(self, text: str, name: str = REPORT_CONFIG["report_file"]) -> Path:
        path = self._path(name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return self._register(path)

    def save_csv(
        self,
        records: Iterable[Dict[str, Any]],
        columns: Sequence[str],
        name: str = REPORT_CONFIG["curves_file"],
    ) -> Path:
        """CSV с заголовком columns; отсутствующие значения - пустые ячейки"""
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for record in records:
                writer.writerow(["" if to_jsonable(record.get(c)) is None else _cell(record.get(c)) for c in columns])
        return self._register(path)

    def register(self, path: Union[str, Path]) -> Path:
        """Учитывает файл, записанный другим модулем"""
        return self._register(Path(path))

    def load_json(self, name: str = REPORT_CONFIG["results_file"]) -> Dict[str, Any]:
        with open(self.output_dir / name, "r", encoding="utf-8") as f:
            return json.load(f)


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


__all__ = ["to_jsonable", "ResultStorage"]
