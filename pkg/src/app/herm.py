"""
Плотная алгебра комплексных матриц и эрмитовых операторов.

Соглашение о тензорных индексах едино для всего пакета:
(x, a) -> x * dim_a + a, левый множитель всегда система X.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import (
    DimensionMismatchError,
    InvariantViolationError,
    NumericalDegeneracyError,
)
from .settings import settings
from .utils import setup_logger

# Настройка логирования
logger = setup_logger(__name__)

Matrix = NDArray[np.complex128]

# Допуски из секции tolerances конфигурации решателей
TOL_HERM = float(settings.get("tolerances", "herm"))
TOL_PSD = float(settings.get("tolerances", "psd"))
TOL_TRACE = float(settings.get("tolerances", "trace"))
# Порог отказа при симметризации (H + H^dagger) / 2
SYMMETRIZE_REJECT = 1e-8


def as_matrix(m) -> Matrix:
    """Приводит вход к конечной комплексной квадратной матрице."""

    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"Ожидалась квадратная матрица, получено {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvariantViolationError("finite", float("nan"), "Матрица содержит нечисловые элементы")
    return arr


def _frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


def hermitian(m, tol: float = SYMMETRIZE_REJECT) -> Matrix:
    """
    Строит эрмитов оператор симметризацией (m + m^dagger) / 2.

    Args:
        m: Квадратная матрица.
        tol: Максимально допустимая поправка симметризации.

    Returns:
        Неизменяемый массив эрмитова оператора.
    """

    arr = as_matrix(m)
    correction = np.max(np.abs(arr - arr.conj().T)) / 2 if arr.size else 0.0
    if correction > tol:
        raise InvariantViolationError("hermiticity", correction)
    return _frozen((arr + arr.conj().T) / 2)


def is_hermitian(m, tol: float = TOL_HERM) -> bool:
    arr = np.asarray(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        return False
    return bool(np.max(np.abs(arr - arr.conj().T), initial=0.0) <= tol)


def density(m, tol_psd: float = TOL_PSD, tol_trace: float = TOL_TRACE) -> Matrix:
    """
    Проверяет и возвращает оператор плотности.

    Raises:
        InvariantViolationError: если нарушены psd или unit_trace.
    """

    rho = hermitian(m)
    lam_min = min_eig(rho)
    if lam_min < -tol_psd:
        raise InvariantViolationError("psd", -lam_min)
    trace_err = abs(np.trace(rho).real - 1.0)
    if trace_err > tol_trace:
        raise InvariantViolationError("unit_trace", trace_err)
    return rho


def is_density(m, tol_psd: float = TOL_PSD, tol_trace: float = TOL_TRACE) -> bool:
    try:
        density(m, tol_psd, tol_trace)
    except (InvariantViolationError, DimensionMismatchError):
        return False
    return True


def tensor(a, b) -> Matrix:
    """Тензорное произведение a ⊗ b, индекс (x, a) -> x * dim(b) + a."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def _check_bipartite(m: np.ndarray, dim_x: int, dim_a: int) -> None:
    if m.ndim != 2 or m.shape != (dim_x * dim_a, dim_x * dim_a):
        raise DimensionMismatchError(
            f"Размерность {m.shape} не равна {dim_x}*{dim_a}"
        )


def partial_trace_A(m, dim_x: int, dim_a: int) -> Matrix:
    """Частичный след по системе действий: (Tr_A m)[x, y] = sum_a m[(x,a), (y,a)]."""

    m = np.asarray(m, dtype=np.complex128)
    _check_bipartite(m, dim_x, dim_a)
    return np.einsum("iaja->ij", m.reshape(dim_x, dim_a, dim_x, dim_a))


def partial_trace_X(m, dim_x: int, dim_a: int) -> Matrix:
    """Частичный след по системе состояний."""

    m = np.asarray(m, dtype=np.complex128)
    _check_bipartite(m, dim_x, dim_a)
    return np.einsum("xaxb->ab", m.reshape(dim_x, dim_a, dim_x, dim_a))


def hs_inner(a, b) -> float:
    """
    Скалярное произведение Гильберта-Шмидта Tr(a b) для эрмитовых a, b.

    Мнимая часть отбрасывается после проверки, что она пренебрежимо мала.
    """

    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Размерности {a.shape} и {b.shape} не совпадают")
    value = np.vdot(a, b)
    scale = max(1.0, float(np.linalg.norm(a) * np.linalg.norm(b)))
    if abs(value.imag) > 1e-10 * scale:
        raise InvariantViolationError("hermiticity", abs(value.imag),
                                      f"Мнимая часть Tr(ab) слишком велика: {value.imag:.3e}")
    return float(value.real)


def hs_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def eig_h(h) -> Tuple[NDArray[np.float64], Matrix]:
    """
    Спектральное разложение эрмитова оператора.

    Returns:
        (собственные значения по возрастанию, унитарная матрица собственных векторов)
    """

    h = as_matrix(h)
    try:
        # driver 'ev': трехдиагонализация + неявный QL/QR
        w, v = scipy.linalg.eigh(h, driver="ev")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalDegeneracyError(f"Спектральное разложение не сошлось: {e}") from e
    return w, v


def eigvals_h(h) -> NDArray[np.float64]:
    try:
        return scipy.linalg.eigvalsh(as_matrix(h))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalDegeneracyError(f"Спектральное разложение не сошлось: {e}") from e


def min_eig(h) -> float:
    h = np.asarray(h)
    if h.size == 0:
        return 0.0
    return float(eigvals_h((h + h.conj().T) / 2)[0])


def spectral_norm(h) -> float:
    w = eigvals_h(h)
    return float(max(abs(w[0]), abs(w[-1]))) if w.size else 0.0


def basis_projector(dim: int, index: int) -> Matrix:
    """Проектор |index><index| в вычислительном базисе."""
    p = np.zeros((dim, dim), dtype=np.complex128)
    p[index, index] = 1.0
    return p


@lru_cache(maxsize=64)
def _hermitian_basis_cached(dim: int) -> np.ndarray:
    elements = []
    for i in range(dim):
        elements.append(basis_projector(dim, i))
    s = 1.0 / np.sqrt(2.0)
    for i in range(dim):
        for j in range(i + 1, dim):
            sym = np.zeros((dim, dim), dtype=np.complex128)
            sym[i, j] = sym[j, i] = s
            elements.append(sym)
            asym = np.zeros((dim, dim), dtype=np.complex128)
            asym[i, j] = 1j * s
            asym[j, i] = -1j * s
            elements.append(asym)
    return _frozen(np.array(elements))


def hermitian_basis(dim: int) -> np.ndarray:
    """
    Ортонормированный (по Гильберту-Шмидту) базис эрмитовых матриц.

    Сначала диагональные проекторы, затем для каждой пары i < j
    симметричный и антисимметричный элементы. Массив формы (dim^2, dim, dim).
    """
    return _hermitian_basis_cached(int(dim))


def to_real_vector(h, dim: int) -> NDArray[np.float64]:
    """Координаты эрмитова оператора в базисе hermitian_basis(dim)."""
    basis = hermitian_basis(dim)
    return np.einsum("kij,ji->k", basis, np.asarray(h)).real


def from_real_vector(v, dim: int) -> Matrix:
    basis = hermitian_basis(dim)
    m = np.einsum("k,kij->ij", np.asarray(v, dtype=np.float64), basis)
    return (m + m.conj().T) / 2


def superoperator_matrix(linear_map: Callable[[Matrix], Matrix], dim_in: int, dim_out: int) -> NDArray[np.float64]:
    """
    Вещественная матрица сохраняющего эрмитовость отображения
    в базисах hermitian_basis(dim_in) -> hermitian_basis(dim_out).
    """
    columns = [to_real_vector(linear_map(b), dim_out) for b in hermitian_basis(dim_in)]
    return np.stack(columns, axis=1)


@dataclass(frozen=True)
class OperatorSchmidt:
    """Операторное разложение Шмидта M = sum_k weights[k] * left[k] ⊗ right[k]."""

    rank: int
    weights: NDArray[np.float64]
    left: List[Matrix]
    right: List[Matrix]

    def reconstruct(self) -> Matrix:
        if self.rank == 0:
            return np.zeros((0, 0), dtype=np.complex128)
        return sum(w * tensor(e_x, e_a) for w, e_x, e_a in zip(self.weights, self.left, self.right))


def operator_schmidt(m, dim_x: int, dim_a: int, cutoff: float = 1e-10) -> OperatorSchmidt:
    """
    Операторное разложение Шмидта эрмитова оператора на H_X ⊗ H_A.

    Вычисляется через SVD перестановки (realignment) m, записанной в
    вещественных координатах произведения эрмитовых базисов, поэтому
    оба семейства множителей эрмитовы и ортонормированы.

    Args:
        m: Эрмитов оператор размерности dim_x * dim_a.
        dim_x: Размерность системы X.
        dim_a: Размерность системы A.
        cutoff: Относительный порог отбрасывания сингулярных чисел.
    """

    m = as_matrix(m)
    _check_bipartite(m, dim_x, dim_a)
    basis_x = hermitian_basis(dim_x)
    basis_a = hermitian_basis(dim_a)

    m4 = m.reshape(dim_x, dim_a, dim_x, dim_a)
    realigned = np.einsum("kyx,lba,xayb->kl", basis_x, basis_a, m4).real

    try:
        u, s, vt = np.linalg.svd(realigned)
    except np.linalg.LinAlgError as e:
        raise NumericalDegeneracyError(f"SVD не сошлось: {e}") from e

    if s.size == 0 or s[0] <= 0.0:
        return OperatorSchmidt(rank=0, weights=np.zeros(0), left=[], right=[])

    keep = int(np.sum(s > cutoff * s[0]))
    left = [np.einsum("i,ixy->xy", u[:, k], basis_x) for k in range(keep)]
    right = [np.einsum("j,jab->ab", vt[k, :], basis_a) for k in range(keep)]
    return OperatorSchmidt(rank=keep, weights=s[:keep].copy(), left=left, right=right)
