import csv
import json
import os
import re
from collections.abc import Sequence
from datetime import datetime
from pathlib import Path
from typing import Any


def save_json(data: Any, filepath: str | Path):
    """Сохраняет данные в JSON файл, создавая директории при необходимости."""
    os.makedirs(os.path.dirname(os.fspath(filepath)) or ".", exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=4, sort_keys=True)


def generate_unique_name(label: str) -> str:
    """Генерирует уникальное имя для папки или файла на основе метки и времени."""
    # Удаляем недопустимые символы и обрезаем до 50
    safe_label = re.sub(r'[\\/*?:"<>|]', "", label)[:50]
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return f"{timestamp}_{safe_label.replace(' ', '_')}"


def write_csv(filepath: str | Path, rows: Sequence[dict], columns: Sequence[str] | None = None) -> Path:
    """
    Пишет строки в CSV; заголовок пишется всегда, даже для пустого списка строк.

    Args:
        rows: одинаковые по ключам словари
        columns: порядок колонок; по умолчанию ключи первой строки
    """
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    with open(filepath, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: row[key] for key in columns})
    return filepath


def format_float(value: float, digits: int = 6) -> str:
    return f"{value:.{digits}f}"
