"""
Классический MDP как эталон: итерация по ценности, детерминированная
редукция (d-MDP) с задачей ЛП и двойственной к ней, вложение в q-MDP.

Тензор переходов хранится как p[y, x, a] = p(y | x, a).
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from . import conic
from .channel import classical_channel_embed
from .errors import DimensionMismatchError, InvariantViolationError, SolverError
from .qsolve.instance import QmdpInstance
from .utils import setup_logger

# Настройка логирования
logger = setup_logger(__name__)

TOL_STOCHASTIC = 1e-12
TOL_OCCUPANCY_SIGN = 1e-9
TOL_OCCUPANCY_MASS = 1e-8
ZERO_MARGINAL = 1e-12

Vector = NDArray[np.float64]


def _check_distribution_rows(table: np.ndarray, axis: int, name: str) -> None:
    if np.any(table < -TOL_STOCHASTIC):
        raise InvariantViolationError("stochasticity", float(-table.min()), f"{name}: отрицательные вероятности")
    residual = float(np.max(np.abs(table.sum(axis=axis) - 1.0), initial=0.0))
    if residual > TOL_STOCHASTIC:
        raise InvariantViolationError("stochasticity", residual, f"{name}: суммы вероятностей отличаются от 1 на {residual:.3e}")


@dataclass(frozen=True)
class ClassicalMdp:
    """Классический MDP (X, A, p, c) с коэффициентом дисконтирования."""

    nx: int
    na: int
    p: np.ndarray
    c: np.ndarray
    beta: float

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64)
        c = np.array(self.c, dtype=np.float64)
        if p.shape != (self.nx, self.nx, self.na):
            raise DimensionMismatchError(f"p имеет форму {p.shape}, ожидалось {(self.nx, self.nx, self.na)}")
        if c.shape != (self.nx, self.na):
            raise DimensionMismatchError(f"c имеет форму {c.shape}, ожидалось {(self.nx, self.na)}")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(c))):
            raise InvariantViolationError("finite", float("nan"), "Модель содержит нечисловые значения")
        _check_distribution_rows(p, 0, "p(.|x,a)")
        if not (0.0 <= float(self.beta) < 1.0):
            raise InvariantViolationError("discount_range", float(self.beta),
                                          f"Коэффициент дисконтирования вне [0, 1): {self.beta}")
        p.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "beta", float(self.beta))

    def q_values(self, v) -> np.ndarray:
        """Q(x, a) = c(x, a) + beta * sum_y p(y|x,a) v(y)."""
        return self.c + self.beta * np.einsum("yxa,y->xa", self.p, np.asarray(v, dtype=np.float64))


@dataclass(frozen=True)
class OccupancyMeasure:
    """Мера занятости nu на X x A."""

    nu: np.ndarray

    def __post_init__(self):
        nu = np.array(self.nu, dtype=np.float64)
        if nu.ndim != 2:
            raise DimensionMismatchError(f"nu должна быть таблицей X x A, получено {nu.shape}")
        if np.any(nu < -TOL_OCCUPANCY_SIGN):
            raise InvariantViolationError("nonnegativity", float(-nu.min()))
        mass_err = abs(float(nu.sum()) - 1.0)
        if mass_err > TOL_OCCUPANCY_MASS:
            raise InvariantViolationError("unit_mass", mass_err)
        nu.setflags(write=False)
        object.__setattr__(self, "nu", nu)

    @property
    def state_marginal(self) -> Vector:
        return self.nu.sum(axis=1)


@dataclass(frozen=True)
class StationaryKernel:
    """Стационарное стохастическое ядро pi(a | x), строки - распределения."""

    pi: np.ndarray

    def __post_init__(self):
        pi = np.array(self.pi, dtype=np.float64)
        if pi.ndim != 2:
            raise DimensionMismatchError(f"pi должна быть таблицей X x A, получено {pi.shape}")
        _check_distribution_rows(pi, 1, "pi(.|x)")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @classmethod
    def deterministic(cls, actions, na: int) -> "StationaryKernel":
        actions = np.asarray(actions, dtype=int)
        pi = np.zeros((actions.size, na))
        pi[np.arange(actions.size), actions] = 1.0
        return cls(pi=pi)

    @classmethod
    def uniform(cls, nx: int, na: int) -> "StationaryKernel":
        return cls(pi=np.full((nx, na), 1.0 / na))


@dataclass
class ValueIterationResult:
    """Результат итерации по ценности."""
    v: Vector
    policy: NDArray[np.int64]
    iterations: int
    residuals: List[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "v": self.v.tolist(),
            "policy": self.policy.tolist(),
            "iterations": self.iterations,
            "final_residual": self.residuals[-1] if self.residuals else 0.0,
        }


def bellman_operator_d(mdp: ClassicalMdp, v) -> Tuple[Vector, NDArray[np.int64]]:
    """
    Оператор динамического программирования L_d и жадное действие
    (наименьший индекс при равенстве).
    """

    q = mdp.q_values(v)
    return q.min(axis=1), np.argmin(q, axis=1)


def value_iteration(mdp: ClassicalMdp, tol: float = 1e-10, max_iter: Optional[int] = None) -> ValueIterationResult:
    """
    Итерация по ценности до ||v - L_d v||_inf <= tol (1 - beta) / (2 beta),
    что гарантирует ||v - v*||_inf <= tol.
    """

    v = np.zeros(mdp.nx)
    if mdp.beta == 0.0:
        v_next, policy = bellman_operator_d(mdp, v)
        return ValueIterationResult(v=v_next, policy=policy, iterations=1, residuals=[0.0])

    threshold = tol * (1.0 - mdp.beta) / (2.0 * mdp.beta)
    residuals = []
    iteration = 0
    while True:
        iteration += 1
        v_next, policy = bellman_operator_d(mdp, v)
        residual = float(np.max(np.abs(v_next - v), initial=0.0))
        residuals.append(residual)
        v = v_next
        if residual <= threshold:
            break
        if max_iter is not None and iteration >= max_iter:
            logger.warning(f"Итерация по ценности остановлена на {iteration} шаге, невязка {residual:.3e}")
            break

    # Жадная политика относительно итогового v
    _, policy = bellman_operator_d(mdp, v)
    logger.debug(f"Итерация по ценности: {iteration} шагов, невязка {residuals[-1]:.3e}")
    return ValueIterationResult(v=v, policy=policy, iterations=iteration, residuals=residuals)


def _kernel_table(kernel) -> np.ndarray:
    return kernel.pi if isinstance(kernel, StationaryKernel) else StationaryKernel(pi=kernel).pi


def evaluate_policy(mdp: ClassicalMdp, kernel) -> Vector:
    """Ценность стационарной политики: (I - beta P_pi) v = c_pi."""

    pi = _kernel_table(kernel)
    if pi.shape != (mdp.nx, mdp.na):
        raise DimensionMismatchError(f"pi {pi.shape} не соответствует модели {(mdp.nx, mdp.na)}")
    p_pi = np.einsum("yxa,xa->xy", mdp.p, pi)
    c_pi = np.einsum("xa,xa->x", mdp.c, pi)
    return np.linalg.solve(np.eye(mdp.nx) - mdp.beta * p_pi, c_pi)


def policy_occupancy(mdp: ClassicalMdp, kernel, mu0) -> OccupancyMeasure:
    """Точная мера занятости: mu = (1 - beta) mu0 + beta P_pi^T mu, nu = mu ⊗ pi."""

    pi = _kernel_table(kernel)
    mu0 = _check_mu0(mdp, mu0)
    p_pi = np.einsum("yxa,xa->xy", mdp.p, pi)
    mu = np.linalg.solve(np.eye(mdp.nx) - mdp.beta * p_pi.T, (1.0 - mdp.beta) * mu0)
    return OccupancyMeasure(nu=mu[:, None] * pi)


def dmdp_step(nu, mdp: ClassicalMdp) -> Vector:
    """Переход d-MDP: P(nu)(y) = sum_{x,a} p(y|x,a) nu(x,a)."""

    nu = np.asarray(nu, dtype=np.float64)
    if nu.shape != (mdp.nx, mdp.na):
        raise DimensionMismatchError(f"nu {nu.shape} не соответствует модели {(mdp.nx, mdp.na)}")
    return np.einsum("yxa,xa->y", mdp.p, nu)


def _check_mu0(mdp: ClassicalMdp, mu0) -> Vector:
    mu0 = np.asarray(mu0, dtype=np.float64)
    if mu0.shape != (mdp.nx,):
        raise DimensionMismatchError(f"mu0 {mu0.shape} не соответствует |X|={mdp.nx}")
    if np.any(mu0 < -TOL_STOCHASTIC) or abs(mu0.sum() - 1.0) > 1e-9:
        raise InvariantViolationError("stochasticity", abs(mu0.sum() - 1.0), "mu0 не является распределением")
    return mu0


def build_occupancy_lp(mdp: ClassicalMdp, mu0) -> conic.SdpProblem:
    """
    ЛП d-MDP в диагональной SDP-записи:
    min <c, nu> при nu(y, A) - beta P(nu)(y) = (1 - beta) mu0(y), nu >= 0.
    """

    mu0 = _check_mu0(mdp, mu0)
    size = mdp.nx * mdp.na
    objective = np.diag(mdp.c.reshape(-1)).astype(np.complex128)
    constraints = []
    for y in range(mdp.nx):
        row = np.zeros((mdp.nx, mdp.na))
        row[y, :] = 1.0
        row -= mdp.beta * mdp.p[y]
        constraints.append((np.diag(row.reshape(-1)).astype(np.complex128), (1.0 - mdp.beta) * float(mu0[y])))
    return conic.SdpProblem(dim=size, objective=objective, constraints=tuple(constraints))


@dataclass
class OccupancyLpResult:
    """Решение пары ЛП d-MDP."""
    nu: OccupancyMeasure
    value: float
    xi: Vector
    dual_value: float
    solution: conic.SdpSolution = field(repr=False)


def _solve_lp_pair(mdp: ClassicalMdp, mu0, tol: Optional[float]) -> OccupancyLpResult:
    solution = conic.solve(build_occupancy_lp(mdp, mu0), tol=tol)
    if solution.status != conic.OPTIMAL:
        raise SolverError(solution.status, f"ЛП d-MDP не решена: статус {solution.status}")

    nu = np.clip(np.diag(solution.x).real.reshape(mdp.nx, mdp.na), 0.0, None)
    nu = nu / nu.sum()
    return OccupancyLpResult(
        nu=OccupancyMeasure(nu=nu),
        value=float(np.sum(mdp.c * nu)),
        xi=np.asarray(solution.y, dtype=np.float64).copy(),
        dual_value=solution.dual_obj,
        solution=solution,
    )


def occupancy_lp(mdp: ClassicalMdp, mu0, tol: Optional[float] = None) -> Tuple[OccupancyMeasure, float]:
    """
    Решает ЛП d-MDP.

    Returns:
        (оптимальная мера занятости, значение <c, nu> = (1 - beta) V*(mu0))
    """

    result = _solve_lp_pair(mdp, mu0, tol)
    return result.nu, result.value


def lp_dual(mdp: ClassicalMdp, mu0, tol: Optional[float] = None) -> Tuple[Vector, float]:
    """
    Двойственная ЛП: max <xi, (1 - beta) mu0> при
    c(x, a) + beta sum_y xi(y) p(y|x,a) >= xi(x).

    Множители берутся из той же диагональной SDP; на состояниях,
    недостижимых из mu0, xi определена неоднозначно.
    """

    result = _solve_lp_pair(mdp, mu0, tol)
    return result.xi, result.dual_value


def lp_dual_residual(mdp: ClassicalMdp, xi) -> float:
    """Наибольшее нарушение двойственных ограничений (0, если xi допустима)."""
    xi = np.asarray(xi, dtype=np.float64)
    slack = mdp.q_values(xi) - xi[:, None]
    return float(max(0.0, -slack.min()))


def disintegrate(nu) -> StationaryKernel:
    """pi(a|x) = nu(x, a) / nu(x, A); строки с нулевой маргиналью равномерны."""

    table = nu.nu if isinstance(nu, OccupancyMeasure) else OccupancyMeasure(nu=nu).nu
    nx, na = table.shape
    pi = np.full((nx, na), 1.0 / na)
    marginal = table.sum(axis=1)
    support = marginal > ZERO_MARGINAL
    pi[support] = np.clip(table[support], 0.0, None) / marginal[support, None]
    pi[support] /= pi[support].sum(axis=1, keepdims=True)
    return StationaryKernel(pi=pi)


def embed_to_qmdp(mdp: ClassicalMdp, mu0=None) -> QmdpInstance:
    """
    Вложение классического MDP в q-MDP: N - вложение классического канала
    (x, a) -> p(.|x, a), стоимость - diag(c), rho0 = diag(mu0).

    Args:
        mdp: Классическая модель.
        mu0: Начальное распределение; по умолчанию равномерное.
    """

    if mu0 is None:
        mu0 = np.full(mdp.nx, 1.0 / mdp.nx)
    mu0 = _check_mu0(mdp, mu0)

    channel = classical_channel_embed(mdp.p.reshape(mdp.nx, mdp.nx * mdp.na))
    return QmdpInstance(
        dim_x=mdp.nx,
        dim_a=mdp.na,
        channel=channel,
        cost=np.diag(mdp.c.reshape(-1)).astype(np.complex128),
        beta=mdp.beta,
        rho0=np.diag(mu0).astype(np.complex128),
    )
