"""
Квантовые каналы: представления Крауса и Чоя, проверка CPTP,
сопряженные отображения и специальные каналы (классическое вложение,
присоединяющий канал, дефазировка N_qc, политики, сохраняющие
классические состояния).

Порядок Чоя: вход ⊗ выход, C = sum_ij |i><j| ⊗ N(|i><j|).
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, InvariantViolationError
from .herm import (
    TOL_PSD,
    Matrix,
    basis_projector,
    density,
    eig_h,
    hermitian,
    min_eig,
    partial_trace_A,
    partial_trace_X,
    tensor,
)
from .utils import setup_logger

# Настройка логирования
logger = setup_logger(__name__)

TOL_KRAUS_TP = 1e-9
TOL_CHOI_TP = 1e-8
TOL_CSP = 1e-8
TOL_STOCHASTIC = 1e-12
KRAUS_CUTOFF = 1e-10


def _choi_partial_out(choi: np.ndarray, in_dim: int, out_dim: int) -> Matrix:
    """Tr_out(C): след по выходному множителю."""
    return partial_trace_A(choi, in_dim, out_dim)


def kraus_tp_residual(kraus: Sequence[np.ndarray], in_dim: int) -> float:
    """||sum_l K_l^dagger K_l - Id||_HS."""
    total = np.zeros((in_dim, in_dim), dtype=np.complex128)
    for k in kraus:
        total += k.conj().T @ k
    return float(np.linalg.norm(total - np.eye(in_dim)))


@dataclass(frozen=True)
class KrausChannel:
    """
    Канал в представлении Крауса: rho -> sum_l K_l rho K_l^dagger.

    Проверяется при создании; непроверенный экземпляр строится
    только через KrausChannel.unchecked.
    """

    in_dim: int
    out_dim: int
    kraus: Tuple[np.ndarray, ...]
    checked: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        ops = []
        for k in self.kraus:
            arr = np.array(k, dtype=np.complex128)
            if arr.shape != (self.out_dim, self.in_dim):
                raise DimensionMismatchError(
                    f"Оператор Крауса имеет форму {arr.shape}, ожидалось {(self.out_dim, self.in_dim)}"
                )
            if not np.all(np.isfinite(arr)):
                raise InvariantViolationError("finite", float("nan"), "Оператор Крауса содержит нечисловые элементы")
            arr.setflags(write=False)
            ops.append(arr)
        object.__setattr__(self, "kraus", tuple(ops))

        if self.checked:
            residual = kraus_tp_residual(ops, self.in_dim)
            if residual > TOL_KRAUS_TP:
                raise InvariantViolationError("trace_preservation", residual)

    @classmethod
    def from_operators(cls, kraus: Sequence[np.ndarray]) -> "KrausChannel":
        ops = [np.asarray(k, dtype=np.complex128) for k in kraus]
        if not ops:
            raise DimensionMismatchError("Пустой набор операторов Крауса")
        out_dim, in_dim = ops[0].shape
        return cls(in_dim=in_dim, out_dim=out_dim, kraus=tuple(ops))

    @classmethod
    def unchecked(cls, kraus: Sequence[np.ndarray]) -> "KrausChannel":
        """Создает канал без проверки сохранения следа (для диагностики и тестов)."""
        ops = [np.asarray(k, dtype=np.complex128) for k in kraus]
        out_dim, in_dim = ops[0].shape
        return cls(in_dim=in_dim, out_dim=out_dim, kraus=tuple(ops), checked=False)

    def apply(self, rho) -> Matrix:
        return apply_kraus(self, rho)

    def adjoint(self, xi) -> Matrix:
        return adjoint_apply(self, xi)


@dataclass(frozen=True)
class ChoiMatrix:
    """Матрица Чоя канала H_in -> H_out в порядке вход ⊗ выход."""

    in_dim: int
    out_dim: int
    matrix: np.ndarray
    checked: bool = field(default=True, repr=False, compare=False)
    tol_tp: float = field(default=TOL_CHOI_TP, repr=False, compare=False)

    def __post_init__(self):
        size = self.in_dim * self.out_dim
        arr = np.array(self.matrix, dtype=np.complex128)
        if arr.shape != (size, size):
            raise DimensionMismatchError(f"Матрица Чоя имеет форму {arr.shape}, ожидалось {(size, size)}")
        object.__setattr__(self, "matrix", hermitian(arr))

        if self.checked:
            lam_min = min_eig(self.matrix)
            if lam_min < -TOL_PSD:
                raise InvariantViolationError("choi_psd", -lam_min)
            residual = choi_tp_residual(self)
            if residual > self.tol_tp:
                raise InvariantViolationError("trace_preservation", residual)

    @classmethod
    def unchecked(cls, matrix, in_dim: int, out_dim: int) -> "ChoiMatrix":
        return cls(in_dim=in_dim, out_dim=out_dim, matrix=matrix, checked=False)

    def blocks(self) -> np.ndarray:
        """Тензор блоков C[i, a, j, b] = (N(|i><j|))[a, b]."""
        return self.matrix.reshape(self.in_dim, self.out_dim, self.in_dim, self.out_dim)

    def apply(self, rho) -> Matrix:
        return apply_choi(self, rho)


def choi_tp_residual(c: ChoiMatrix) -> float:
    marginal = _choi_partial_out(c.matrix, c.in_dim, c.out_dim)
    return float(np.linalg.norm(marginal - np.eye(c.in_dim)))


@dataclass(frozen=True)
class CspPolicyChannel:
    """Политика, сохраняющая классические состояния: канал H_X -> H_X ⊗ H_A."""

    choi: ChoiMatrix
    dim_x: int
    dim_a: int
    tol: float = field(default=TOL_CSP, repr=False, compare=False)

    def __post_init__(self):
        if self.choi.in_dim != self.dim_x or self.choi.out_dim != self.dim_x * self.dim_a:
            raise DimensionMismatchError(
                f"Чой {self.choi.in_dim}->{self.choi.out_dim} не соответствует |X|={self.dim_x}, |A|={self.dim_a}"
            )
        report = csp_membership(self.choi, self.tol, self.dim_a)
        if not report.passed:
            raise InvariantViolationError("csp_membership", report.residual)

    @classmethod
    def from_matrix(cls, matrix, dim_x: int, dim_a: int, tol: float = TOL_CSP) -> "CspPolicyChannel":
        choi = ChoiMatrix(in_dim=dim_x, out_dim=dim_x * dim_a, matrix=matrix, tol_tp=max(tol, TOL_CHOI_TP))
        return cls(choi=choi, dim_x=dim_x, dim_a=dim_a, tol=tol)

    def apply(self, rho) -> Matrix:
        return apply_choi(self.choi, rho)


@dataclass
class CptpReport:
    """Результат проверки CPTP."""
    psd_margin: float
    tp_residual: float
    passed: bool

    def to_dict(self) -> dict:
        return {"psd_margin": self.psd_margin, "tp_residual": self.tp_residual, "passed": self.passed}


@dataclass
class CspReport:
    """Результат проверки принадлежности классу CSP."""
    residual: float
    passed: bool

    def to_dict(self) -> dict:
        return {"residual": self.residual, "passed": self.passed}


def apply_kraus(n: KrausChannel, rho) -> Matrix:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (n.in_dim, n.in_dim):
        raise DimensionMismatchError(f"Вход {rho.shape} не соответствует in_dim={n.in_dim}")
    out = np.zeros((n.out_dim, n.out_dim), dtype=np.complex128)
    for k in n.kraus:
        out += k @ rho @ k.conj().T
    return out


def adjoint_apply(n: KrausChannel, xi) -> Matrix:
    """Сопряженный канал: xi -> sum_l K_l^dagger xi K_l."""
    xi = np.asarray(xi, dtype=np.complex128)
    if xi.shape != (n.out_dim, n.out_dim):
        raise DimensionMismatchError(f"Вход {xi.shape} не соответствует out_dim={n.out_dim}")
    out = np.zeros((n.in_dim, n.in_dim), dtype=np.complex128)
    for k in n.kraus:
        out += k.conj().T @ xi @ k
    return out


def kraus_to_choi(n: KrausChannel) -> ChoiMatrix:
    size = n.in_dim * n.out_dim
    choi = np.zeros((size, size), dtype=np.complex128)
    for k in n.kraus:
        # |K>> = sum_i |i> ⊗ K|i>
        vec = k.T.reshape(-1)
        choi += np.outer(vec, vec.conj())
    return ChoiMatrix(in_dim=n.in_dim, out_dim=n.out_dim, matrix=choi, checked=n.checked)


def apply_choi(c: ChoiMatrix, rho) -> Matrix:
    """Lambda(C, rho) = sum_ij rho_ij * C_[i,j]."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (c.in_dim, c.in_dim):
        raise DimensionMismatchError(f"Вход {rho.shape} не соответствует in_dim={c.in_dim}")
    return np.einsum("ij,iajb->ab", rho, c.blocks())


def choi_adjoint_apply(c: ChoiMatrix, m) -> Matrix:
    """Сопряженное к rho -> Lambda(C, rho): <m, Lambda(C, rho)> = <result, rho>."""
    m = np.asarray(m, dtype=np.complex128)
    if m.shape != (c.out_dim, c.out_dim):
        raise DimensionMismatchError(f"Вход {m.shape} не соответствует out_dim={c.out_dim}")
    return np.einsum("ba,iajb->ji", m, c.blocks())


def choi_objective_operator(rho, g) -> Matrix:
    """Оператор W такой, что <W, C> = <g, Lambda(C, rho)> для любой матрицы Чоя C."""
    return tensor(np.asarray(rho).T, g)


def choi_to_kraus(c: ChoiMatrix, cutoff: float = KRAUS_CUTOFF) -> KrausChannel:
    """Операторы Крауса из масштабированных собственных векторов матрицы Чоя."""

    w, v = eig_h(c.matrix)
    lam_max = max(float(w[-1]), 0.0)
    if w[0] < -TOL_PSD * max(1.0, lam_max):
        raise InvariantViolationError("choi_psd", -float(w[0]))

    kraus = []
    for lam, vec in zip(w, v.T):
        if lam <= cutoff * lam_max:
            continue
        kraus.append(np.sqrt(lam) * vec.reshape(c.in_dim, c.out_dim).T)

    if not kraus:
        raise InvariantViolationError("choi_psd", 0.0, "Матрица Чоя нулевая")

    return KrausChannel(in_dim=c.in_dim, out_dim=c.out_dim, kraus=tuple(kraus), checked=False)


def verify_cptp(channel, tol: float = 1e-8) -> CptpReport:
    """
    Проверяет полную положительность и сохранение следа.

    Args:
        channel: KrausChannel или ChoiMatrix (в том числе непроверенные).
        tol: Допуск для обеих невязок.
    """

    if isinstance(channel, KrausChannel):
        choi = kraus_to_choi(channel).matrix
        tp_residual = kraus_tp_residual(channel.kraus, channel.in_dim)
    elif isinstance(channel, ChoiMatrix):
        choi = channel.matrix
        tp_residual = choi_tp_residual(channel)
    else:
        raise TypeError(f"Неподдерживаемое представление канала: {type(channel).__name__}")

    psd_margin = min_eig(choi)
    passed = psd_margin >= -tol and tp_residual <= tol
    return CptpReport(psd_margin=psd_margin, tp_residual=tp_residual, passed=bool(passed))


def nqc(rho) -> Matrix:
    """Дефазировка в вычислительном базисе: оставляет только диагональ."""
    rho = np.asarray(rho, dtype=np.complex128)
    return np.diag(np.diag(rho))


def _check_stochastic_columns(w: np.ndarray) -> None:
    if np.any(w < -TOL_STOCHASTIC):
        raise InvariantViolationError("stochasticity", float(-w.min()))
    residual = float(np.max(np.abs(w.sum(axis=0) - 1.0), initial=0.0))
    if residual > TOL_STOCHASTIC:
        raise InvariantViolationError("stochasticity", residual)


def classical_channel_embed(w) -> KrausChannel:
    """
    Вложение классического канала W (столбцы - распределения W(.|i))
    с операторами Крауса sqrt(W(j|i)) |j><i|.
    """

    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise DimensionMismatchError(f"Ожидалась матрица, получено {w.shape}")
    _check_stochastic_columns(w)
    m, n = w.shape

    kraus = []
    for i in range(n):
        for j in range(m):
            if w[j, i] <= 0.0:
                continue
            k = np.zeros((m, n), dtype=np.complex128)
            k[j, i] = np.sqrt(w[j, i])
            kraus.append(k)

    # Перестановка: один унитарный оператор Крауса
    if m == n and np.all((w == 0.0) | (w == 1.0)) and np.all(w.sum(axis=1) == 1.0):
        return KrausChannel(in_dim=n, out_dim=m, kraus=(w.astype(np.complex128),))

    return KrausChannel(in_dim=n, out_dim=m, kraus=tuple(kraus))


def appending_channel(pi, dim_x: int) -> KrausChannel:
    """Канал rho -> rho ⊗ pi из H_X в H_X ⊗ H_A."""

    pi = density(pi)
    dim_a = pi.shape[0]
    w, v = eig_h(pi)
    kraus = []
    for lam, vec in zip(w, v.T):
        if lam <= KRAUS_CUTOFF * max(float(w[-1]), 0.0):
            continue
        kraus.append(np.kron(np.eye(dim_x), np.sqrt(lam) * vec.reshape(dim_a, 1)))
    return KrausChannel(in_dim=dim_x, out_dim=dim_x * dim_a, kraus=tuple(kraus))


def _check_kernel(pi: np.ndarray) -> None:
    if pi.ndim != 2:
        raise DimensionMismatchError(f"Ожидалась таблица pi(a|x), получено {pi.shape}")
    if np.any(pi < -TOL_STOCHASTIC):
        raise InvariantViolationError("stochasticity", float(-pi.min()))
    residual = float(np.max(np.abs(pi.sum(axis=1) - 1.0), initial=0.0))
    if residual > TOL_STOCHASTIC:
        raise InvariantViolationError("stochasticity", residual)


def classical_policy_kraus(pi) -> KrausChannel:
    """Операторы Крауса sqrt(pi(a|x)) |x,a><x| классической политики."""

    pi = np.asarray(pi, dtype=np.float64)
    _check_kernel(pi)
    dim_x, dim_a = pi.shape
    kraus = []
    for x in range(dim_x):
        for a in range(dim_a):
            if pi[x, a] <= 0.0:
                continue
            k = np.zeros((dim_x * dim_a, dim_x), dtype=np.complex128)
            k[x * dim_a + a, x] = np.sqrt(pi[x, a])
            kraus.append(k)
    return KrausChannel(in_dim=dim_x, out_dim=dim_x * dim_a, kraus=tuple(kraus))


def classical_policy_channel(pi) -> CspPolicyChannel:
    """Классическая стационарная политика pi(a|x) в виде CSP-канала (через Чоя)."""

    n = classical_policy_kraus(pi)
    dim_x, dim_a = np.asarray(pi).shape
    return CspPolicyChannel(choi=kraus_to_choi(n), dim_x=dim_x, dim_a=dim_a)


def csp_residual(c: ChoiMatrix, dim_a: Optional[int] = None) -> float:
    dim_x = c.in_dim
    if dim_a is None:
        dim_a = c.out_dim // dim_x
    if dim_x * dim_a != c.out_dim:
        raise DimensionMismatchError(f"out_dim={c.out_dim} не делится на |X|={dim_x}")
    blocks = c.blocks()
    residual = 0.0
    for x in range(dim_x):
        marginal = partial_trace_A(blocks[x, :, x, :], dim_x, dim_a)
        residual = max(residual, float(np.linalg.norm(marginal - basis_projector(dim_x, x))))
    return residual


def csp_membership(c: ChoiMatrix, tol: float = TOL_CSP, dim_a: Optional[int] = None) -> CspReport:
    """Проверка Tr_A(Lambda(C, |x><x|)) = |x><x| на классических базисных состояниях."""
    residual = csp_residual(c, dim_a)
    return CspReport(residual=residual, passed=residual <= tol)


def spanning_densities(dim: int) -> List[Matrix]:
    """Набор операторов плотности, линейная оболочка которых - все матрицы."""

    states = [basis_projector(dim, i) for i in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            plus = np.zeros(dim, dtype=np.complex128)
            plus[i] = plus[j] = 1 / np.sqrt(2)
            states.append(np.outer(plus, plus.conj()))
            phase = np.zeros(dim, dtype=np.complex128)
            phase[i] = 1 / np.sqrt(2)
            phase[j] = 1j / np.sqrt(2)
            states.append(np.outer(phase, phase.conj()))
    return states


def appending_structure(n: KrausChannel, dim_x: int, dim_a: int, tol: float = 1e-8) -> Tuple[bool, Matrix]:
    """
    Проверяет обратимость Tr_A ∘ gamma = id на порождающем наборе состояний.

    Каналы, прошедшие проверку, действуют как rho -> rho ⊗ xi; xi
    восстанавливается как Tr_X(gamma(Id / |X|)).

    Returns:
        (проверка пройдена, присоединяемое состояние xi)
    """

    if n.in_dim != dim_x or n.out_dim != dim_x * dim_a:
        raise DimensionMismatchError("Размерности канала не соответствуют H_X -> H_X ⊗ H_A")

    passed = True
    for rho in spanning_densities(dim_x):
        marginal = partial_trace_A(apply_kraus(n, rho), dim_x, dim_a)
        if np.linalg.norm(marginal - rho) > tol:
            passed = False
            break

    xi = partial_trace_X(apply_kraus(n, np.eye(dim_x) / dim_x), dim_x, dim_a)
    return passed, xi


def csp_support_isometry(dim_x: int, dim_a: int) -> np.ndarray:
    """
    Вложение P: e_(i,a) -> e_(i,i,a).

    Матрица Чоя любого CSP-канала сосредоточена на индексах (i, i, a),
    поэтому C = P Z P^T, где Z ⪰ 0 на H_X ⊗ H_A и Tr(Z_xx) = 1.
    """
    p = np.zeros((dim_x * dim_x * dim_a, dim_x * dim_a))
    for i in range(dim_x):
        for a in range(dim_a):
            p[(i * dim_x + i) * dim_a + a, i * dim_a + a] = 1.0
    return p


def csp_compress(c: ChoiMatrix, dim_a: int) -> Matrix:
    """Сжатая матрица Z = P^T C P CSP-канала."""
    p = csp_support_isometry(c.in_dim, dim_a)
    return p.T @ c.matrix @ p


def csp_expand(z, dim_x: int, dim_a: int) -> Matrix:
    """Полная матрица Чоя P Z P^T по сжатой матрице Z."""
    p = csp_support_isometry(dim_x, dim_a)
    return p @ np.asarray(z, dtype=np.complex128) @ p.T
