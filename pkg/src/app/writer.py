"""
Модуль для записи отчетов решателя: JSON файл и сводная таблица.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from .utils import atomic_write_text, setup_logger

# Настройка логирования
logger = setup_logger(__name__)


def _finite_or_none(value: Any) -> Any:
    """Приводит numpy-типы к JSON, нечисловые бесконечности заменяет на None."""

    if isinstance(value, dict):
        return {str(k): _finite_or_none(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(v) for v in value]
    if isinstance(value, np.ndarray):
        return _finite_or_none(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [_finite_or_none(value.real), _finite_or_none(value.imag)]
    return value


def _non_finite_paths(value: Any, path: str = "") -> List[str]:
    if isinstance(value, float):
        return [] if math.isfinite(value) else [path or "<корень>"]
    if isinstance(value, dict):
        return [p for k, v in value.items() for p in _non_finite_paths(v, f"{path}/{k}")]
    if isinstance(value, list):
        return [p for i, v in enumerate(value) for p in _non_finite_paths(v, f"{path}/{i}")]
    return []


class ReportFile(BaseModel):
    """Отчет команды solve."""

    command: str
    mode: str
    instance_digest: str
    status: str
    primal_value: Optional[float] = None
    dual_value: Optional[float] = None
    gap: Optional[float] = None
    assumption_status: Dict[str, str] = Field(default_factory=dict)
    policy: Optional[Dict[str, Any]] = None
    rollout: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = Field(default_factory=dict)
    timings: Optional[Dict[str, float]] = None

    @model_validator(mode="after")
    def check_finite(self) -> "ReportFile":
        bad = _non_finite_paths(self.model_dump())
        if bad:
            raise ValueError(f"Нечисловые значения в отчете: {', '.join(bad)}")
        return self

    @classmethod
    def build(cls, **fields) -> "ReportFile":
        """Конструктор из сырых результатов (numpy, inf -> None)."""
        return cls(**_finite_or_none(fields))

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(report: ReportFile, path: Union[str, Path]) -> str:
    """
    Записывает отчет атомарно (временный файл + rename).

    Returns:
        Путь к записанному файлу.
    """

    filepath = atomic_write_text(path, report.to_json())
    logger.info(f"Отчет сохранен: {filepath}")
    return filepath


def summary_table(report: ReportFile) -> str:
    """Сводная таблица фиксированной ширины для печати в консоль."""

    rows = [
        ("mode", report.mode),
        ("status", report.status),
        ("primal", report.primal_value),
        ("dual", report.dual_value),
        ("gap", report.gap),
    ]
    for name, status in sorted(report.assumption_status.items()):
        rows.append((name, status))
    if report.rollout:
        rows.append(("rollout", report.rollout.get("normalized_cost")))
        rows.append(("tail bound", report.rollout.get("cost_tail_bound")))
    if report.timings:
        rows.append(("seconds", report.timings.get("total")))

    df = pd.DataFrame(rows, columns=["field", "value"])
    df["value"] = df["value"].map(_format_cell)
    return df.to_string(index=False)


def _format_cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def default_report_path(problem_path: Union[str, Path], mode: str) -> Path:
    """<имя задачи>.<mode>.report.json рядом с файлом задачи."""
    problem_path = Path(problem_path)
    return problem_path.with_name(f"{problem_path.stem}.{mode}.report.json")
