"""
Исключения, общие для всех модулей пакета.
"""

from typing import Optional


class QmdpError(Exception):
    """Базовое исключение пакета."""


class DimensionMismatchError(QmdpError, ValueError):
    """Размерности операндов не согласованы."""


class InvariantViolationError(QmdpError, ValueError):
    """
    Нарушен инвариант входных данных.

    Attributes:
        invariant: Машинное имя инварианта (trace_preservation, psd, ...).
        residual: Измеренная невязка.
    """

    def __init__(self, invariant: str, residual: float, message: Optional[str] = None):
        self.invariant = invariant
        self.residual = float(residual)
        if message is None:
            message = f"Нарушен инвариант {invariant}: невязка {self.residual:.3e}"
        super().__init__(message)


class NumericalDegeneracyError(QmdpError, ArithmeticError):
    """Численная процедура не сошлась или система вырождена."""


class SolverError(QmdpError, RuntimeError):
    """Решатель вернул неоптимальный статус там, где нужен оптимум."""

    def __init__(self, status: str, message: str, context: Optional[str] = None):
        self.status = status
        self.context = context
        super().__init__(message)


class NetCapExceededError(QmdpError):
    """Размер сетки превышает допустимый предел."""


class ProblemFormatError(QmdpError):
    """Файл задачи не разбирается или не соответствует схеме."""
