"""
Экземпляр q-MDP, открытые политики, отчет о решении и
супер-операторы T, T^dagger, T_w, T_w^dagger.
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..channel import CspPolicyChannel, KrausChannel, adjoint_apply, apply_kraus, nqc
from ..errors import DimensionMismatchError, InvariantViolationError
from ..herm import Matrix, density, hermitian, hs_norm, partial_trace_A, spectral_norm, tensor


@dataclass(frozen=True)
class QmdpInstance:
    """
    Квантовый MDP: (H_X, H_X ⊗ H_A, N, c), коэффициент дисконтирования и
    начальное состояние.
    """

    dim_x: int
    dim_a: int
    channel: KrausChannel
    cost: Matrix
    beta: float
    rho0: Matrix

    def __post_init__(self):
        if self.channel.in_dim != self.dim_x * self.dim_a or self.channel.out_dim != self.dim_x:
            raise DimensionMismatchError(
                f"Канал {self.channel.in_dim}->{self.channel.out_dim} не согласован "
                f"с |X|={self.dim_x}, |A|={self.dim_a}"
            )
        cost = hermitian(self.cost)
        if cost.shape != (self.dim_x * self.dim_a,) * 2:
            raise DimensionMismatchError(f"Стоимость {cost.shape} не соответствует |X||A|={self.dim_x * self.dim_a}")
        if not (0.0 <= float(self.beta) < 1.0):
            raise InvariantViolationError("discount_range", float(self.beta),
                                          f"Коэффициент дисконтирования вне [0, 1): {self.beta}")
        rho0 = density(self.rho0)
        if rho0.shape != (self.dim_x, self.dim_x):
            raise DimensionMismatchError(f"rho0 {rho0.shape} не соответствует |X|={self.dim_x}")

        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "rho0", rho0)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def dim_xa(self) -> int:
        return self.dim_x * self.dim_a

    @property
    def cost_hs_norm(self) -> float:
        return hs_norm(self.cost)

    @property
    def cost_spectral_norm(self) -> float:
        return spectral_norm(self.cost)

    def with_rho0(self, rho0) -> "QmdpInstance":
        return dataclasses.replace(self, rho0=rho0)

    def with_beta(self, beta: float) -> "QmdpInstance":
        return dataclasses.replace(self, beta=beta)


def _check_sigma(q: QmdpInstance, sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.complex128)
    if sigma.shape != (q.dim_xa, q.dim_xa):
        raise DimensionMismatchError(f"sigma {sigma.shape} не соответствует |X||A|={q.dim_xa}")
    return sigma


def _check_xi(q: QmdpInstance, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=np.complex128)
    if xi.shape != (q.dim_x, q.dim_x):
        raise DimensionMismatchError(f"xi {xi.shape} не соответствует |X|={q.dim_x}")
    return xi


def op_T(q: QmdpInstance, sigma) -> Matrix:
    """T(sigma) = Tr_A(sigma) - beta * N(sigma)."""
    sigma = _check_sigma(q, sigma)
    return partial_trace_A(sigma, q.dim_x, q.dim_a) - q.beta * apply_kraus(q.channel, sigma)


def op_T_adj(q: QmdpInstance, xi) -> Matrix:
    """T^dagger(xi) = xi ⊗ Id - beta * N^dagger(xi)."""
    xi = _check_xi(q, xi)
    return tensor(xi, np.eye(q.dim_a)) - q.beta * adjoint_apply(q.channel, xi)


def op_Tw(q: QmdpInstance, sigma) -> Matrix:
    """T_w = N_qc ∘ T."""
    return nqc(op_T(q, sigma))


def op_Tw_adj(q: QmdpInstance, xi) -> Matrix:
    """T_w^dagger = T^dagger ∘ N_qc (N_qc самосопряжен)."""
    return op_T_adj(q, nqc(_check_xi(q, xi)))


@dataclass(frozen=True)
class OpenLoopPolicy:
    """
    Открытая политика gamma_t(rho) = rho ⊗ pi_t: конечная
    последовательность pi_0..pi_{T-1} и стационарный хвост.
    """

    tail: Matrix
    steps: Tuple[Matrix, ...] = ()

    def __post_init__(self):
        tail = density(self.tail)
        steps = tuple(density(pi) for pi in self.steps)
        if any(pi.shape != tail.shape for pi in steps):
            raise DimensionMismatchError("Все pi_t должны иметь одинаковую размерность")
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "steps", steps)

    @classmethod
    def stationary(cls, pi) -> "OpenLoopPolicy":
        return cls(tail=pi)

    @property
    def dim_a(self) -> int:
        return self.tail.shape[0]

    @property
    def is_stationary(self) -> bool:
        return not self.steps

    def at(self, t: int) -> Matrix:
        return self.steps[t] if t < len(self.steps) else self.tail


Policy = Union[OpenLoopPolicy, CspPolicyChannel]


def relative_gap(primal: float, dual: float) -> float:
    return abs(primal - dual) / (1.0 + abs(primal))


@dataclass
class SolveReport:
    """
    Итог решения задачи q-MDP.

    Значения primal_value/dual_value нормированы как в SDP: (1 - beta) * V.
    rollout_value нормирован так же.
    """

    primal_value: float
    dual_value: float
    status: str
    extracted_policy: Optional[Policy] = None
    rollout_value: Optional[float] = None
    assumption_status: Optional[str] = None
    sigma: Optional[Matrix] = field(default=None, repr=False)
    xi: Optional[Matrix] = field(default=None, repr=False)
    details: Dict[str, Any] = field(default_factory=dict)
    gap: float = field(init=False)

    def __post_init__(self):
        self.gap = relative_gap(self.primal_value, self.dual_value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "status": self.status,
            "rollout_value": self.rollout_value,
            "assumption_status": self.assumption_status,
            "details": dict(self.details),
        }
