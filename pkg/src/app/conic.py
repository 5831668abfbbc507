"""
Плотный решатель полуопределенных задач малой размерности.

    min <C, X>  при  <A_i, X> = b_i,  X ⪰ 0,   X эрмитова.

Двойственная задача: max b.y при C - sum_i y_i A_i ⪰ 0.

Эрмитова задача всегда переводится в вещественную симметричную через
вложение herm_to_real; внутри работает прямо-двойственный метод
внутренней точки с масштабированием Нестерова-Тодда и
предиктором-корректором Мехротры из недопустимой начальной точки.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import DimensionMismatchError, InvariantViolationError
from .herm import Matrix, hermitian
from .settings import settings
from .utils import setup_logger

# Настройка логирования
logger = setup_logger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"


@dataclass(frozen=True)
class SdpProblem:
    """Эрмитова SDP-задача в стандартной форме."""

    dim: int
    objective: Matrix
    constraints: Tuple[Tuple[Matrix, float], ...] = ()

    def __post_init__(self):
        c = hermitian(self.objective)
        if c.shape != (self.dim, self.dim):
            raise DimensionMismatchError(f"Целевая матрица {c.shape} не соответствует dim={self.dim}")
        checked = []
        for index, (a, b) in enumerate(self.constraints):
            a = hermitian(a)
            if a.shape != (self.dim, self.dim):
                raise DimensionMismatchError(f"Ограничение {index}: форма {a.shape}, dim={self.dim}")
            b = float(b)
            if not np.isfinite(b):
                raise InvariantViolationError("finite", float("nan"), f"Ограничение {index}: b не конечно")
            checked.append((a, b))
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", tuple(checked))

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)


@dataclass
class SdpSolution:
    """Результат решения SDP."""

    status: str
    x: Matrix
    y: NDArray[np.float64]
    primal_obj: float
    dual_obj: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int = 0
    slack: Optional[Matrix] = field(default=None, repr=False)

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def to_dict(self) -> Dict[str, object]:
        return {
            "status": self.status,
            "primal_obj": self.primal_obj,
            "dual_obj": self.dual_obj,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "gap": self.gap,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class SolverOptions:
    """Параметры метода внутренней точки."""

    tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98
    redundancy_threshold: float = 1e-10

    @classmethod
    def from_settings(cls, **overrides) -> "SolverOptions":
        section = settings.solver_config["solver"]
        values = {
            "tol": float(section["tol"]),
            "max_iter": int(section["max_iter"]),
            "step_fraction": float(section["step_fraction"]),
            "redundancy_threshold": float(section["redundancy_threshold"]),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def herm_to_real(h) -> NDArray[np.float64]:
    """Вещественное вложение [[Re, -Im], [Im, Re]] эрмитовой матрицы."""
    h = np.asarray(h, dtype=np.complex128)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def real_to_herm(x: NDArray[np.float64], n: int) -> Matrix:
    """Проекция вещественной симметричной матрицы 2n x 2n обратно на эрмитовы."""
    p = x[:n, :n]
    q = x[n:, :n]
    r = x[n:, n:]
    return (p + r) / 2 + 1j * (q - q.T) / 2


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2


def _prune_constraints(
    a_flat: np.ndarray, b: np.ndarray, threshold: float, tol: float
) -> Tuple[np.ndarray, bool]:
    """
    Отбрасывает линейно зависимые ограничения (QR с выбором ведущего столбца).

    Returns:
        (индексы оставленных ограничений, система совместна)
    """

    m = a_flat.shape[0]
    if m == 0:
        return np.arange(0), True

    _, r, piv = scipy.linalg.qr(a_flat.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        keep = np.arange(0)
    else:
        keep = np.sort(piv[: int(np.sum(diag > threshold * diag[0]))])

    dropped = np.setdiff1d(np.arange(m), keep)
    if dropped.size == 0:
        return keep, True

    if keep.size == 0:
        residual = float(np.max(np.abs(b[dropped])))
    else:
        coeffs, *_ = np.linalg.lstsq(a_flat[keep].T, a_flat[dropped].T, rcond=None)
        residual = float(np.max(np.abs(b[dropped] - coeffs.T @ b[keep])))

    consistent = residual <= max(tol, 1e-9) * (1.0 + float(np.max(np.abs(b))))
    if dropped.size:
        logger.debug(f"Отброшено {dropped.size} зависимых ограничений, невязка совместности {residual:.2e}")
    return keep, consistent


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Наибольший шаг alpha, при котором x + alpha * dx остается ⪰ 0."""
    lower = scipy.linalg.cholesky(x, lower=True)
    tmp = scipy.linalg.solve_triangular(lower, dx, lower=True)
    scaled = scipy.linalg.solve_triangular(lower, tmp.T, lower=True).T
    lam = scipy.linalg.eigvalsh(_sym(scaled))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _interior_point(
    c: np.ndarray, a: np.ndarray, b: np.ndarray, options: SolverOptions
) -> Dict[str, object]:
    """Метод внутренней точки для вещественной симметричной задачи."""

    n = c.shape[0]
    m = b.size
    a_flat = a.reshape(m, n * n)
    eye = np.eye(n)

    tau = max(1.0, float(np.max(np.abs(b))) if m else 1.0)
    x = tau * eye
    s = tau * eye
    y = np.zeros(m)

    norm_b = 1.0 + float(np.linalg.norm(b))
    norm_c = 1.0 + float(np.linalg.norm(c))

    status = MAX_ITER
    best = None
    iteration = 0

    for iteration in range(options.max_iter + 1):
        rp = b - a_flat @ x.ravel()
        rd = c - (a_flat.T @ y).reshape(n, n) - s
        pobj = float(np.vdot(c, x))
        dobj = float(b @ y)

        pres = float(np.linalg.norm(rp)) / norm_b
        dres = float(np.linalg.norm(rd)) / norm_c
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        merit = max(pres, dres, gap)

        if best is None or merit < best["merit"]:
            best = {"merit": merit, "x": x.copy(), "y": y.copy(), "s": s.copy(),
                    "pres": pres, "dres": dres, "iteration": iteration}

        logger.debug(
            f"ipm {iteration:3d}: pobj={pobj: .10e} dobj={dobj: .10e} "
            f"pres={pres:.2e} dres={dres:.2e} gap={gap:.2e}"
        )

        if merit <= options.tol:
            status = OPTIMAL
            break
        if iteration == options.max_iter:
            break

        # Сертификаты недопустимости
        aty = (a_flat.T @ y).reshape(n, n)
        if dobj > 0.0 and m:
            lam_max = float(scipy.linalg.eigvalsh(_sym(aty))[-1])
            if lam_max <= options.tol * dobj:
                status = INFEASIBLE
                break
        if pobj < 0.0:
            if float(np.linalg.norm(b - rp)) <= options.tol * abs(pobj):
                status = UNBOUNDED
                break

        try:
            lx = scipy.linalg.cholesky(x, lower=True)
            ls = scipy.linalg.cholesky(s, lower=True)
        except np.linalg.LinAlgError:
            logger.debug("Разложение Холецкого не удалось, остановка")
            break

        # Точка масштабирования НТ: G^{-1} X G^{-T} = G^T S G = diag(v)
        _, v, vt = np.linalg.svd(ls.T @ lx)
        g = (lx @ vt.T) / np.sqrt(v)
        lx_inv = scipy.linalg.solve_triangular(lx, eye, lower=True)
        g_inv = (np.sqrt(v)[:, None] * vt) @ lx_inv
        w = g @ g.T

        wa = w[None, :, :] @ a @ w[None, :, :]
        schur = _sym(a_flat @ wa.reshape(m, n * n).T) if m else np.zeros((0, 0))
        try:
            factor = scipy.linalg.cho_factor(schur) if m else None
            solve_schur = lambda rhs: scipy.linalg.cho_solve(factor, rhs)
        except np.linalg.LinAlgError:
            pinv = np.linalg.pinv(schur)
            solve_schur = lambda rhs: pinv @ rhs

        mu = float(np.vdot(x, s)) / n
        v_sum = v[:, None] + v[None, :]
        w_rd_w = w @ rd @ w

        def direction(r: np.ndarray):
            d = 2.0 * r / v_sum
            rc = g @ d @ g.T
            if m:
                dy = solve_schur(rp - a_flat @ (rc - w_rd_w).ravel())
            else:
                dy = np.zeros(0)
            ds = _sym(rd - (a_flat.T @ dy).reshape(n, n))
            dx = _sym(rc - w @ ds @ w)
            return dx, dy, ds

        # Предиктор
        dx_a, dy_a, ds_a = direction(-np.diag(v ** 2))
        ap_a = min(1.0, _max_step(x, dx_a))
        ad_a = min(1.0, _max_step(s, ds_a))
        mu_aff = float(np.vdot(x + ap_a * dx_a, s + ad_a * ds_a)) / n
        sigma = float(np.clip((mu_aff / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

        # Корректор
        dxs = g_inv @ dx_a @ g_inv.T
        dss = g.T @ ds_a @ g
        r = sigma * mu * eye - np.diag(v ** 2) - (dxs @ dss + dss @ dxs) / 2
        dx, dy, ds = direction(r)

        ap = min(1.0, options.step_fraction * _max_step(x, dx))
        ad = min(1.0, options.step_fraction * _max_step(s, ds))

        if ap < 1e-12 and ad < 1e-12:
            logger.debug("Шаг вырожден, остановка")
            break

        x = _sym(x + ap * dx)
        y = y + ad * dy
        s = _sym(s + ad * ds)

    if status == MAX_ITER and best is not None:
        x, y, s = best["x"], best["y"], best["s"]
        pres, dres = best["pres"], best["dres"]

    return {"status": status, "x": x, "y": y, "s": s, "iterations": iteration,
            "primal_residual": pres, "dual_residual": dres}


def _solve_unconstrained(c_herm: Matrix, n: int, tol: float) -> SdpSolution:
    """min <C, X> при X ⪰ 0 без линейных ограничений: X = 0 либо луч вдоль отрицательного собственного вектора."""
    c_herm = hermitian(c_herm)
    lam = float(scipy.linalg.eigvalsh(c_herm)[0]) if n else 0.0
    zero = np.zeros((n, n), dtype=np.complex128)
    if lam >= -tol:
        logger.debug(f"SDP (dim={n}) без ограничений: C ⪰ 0, X = 0")
        return SdpSolution(
            status=OPTIMAL, x=zero, y=np.zeros(0), primal_obj=0.0, dual_obj=0.0,
            primal_residual=0.0, dual_residual=0.0, gap=0.0, iterations=0, slack=c_herm,
        )
    logger.warning(f"SDP (dim={n}) без ограничений неограничена: lambda_min(C) = {lam:.3e}")
    return SdpSolution(
        status=UNBOUNDED, x=zero, y=np.zeros(0), primal_obj=-np.inf, dual_obj=-np.inf,
        primal_residual=0.0, dual_residual=np.inf, gap=np.inf, iterations=0,
    )


def solve(
    problem: SdpProblem,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    options: Optional[SolverOptions] = None,
) -> SdpSolution:
    """
    Решает эрмитову SDP-задачу.

    Args:
        problem: Задача в стандартной форме.
        tol: Допуск по невязкам и относительному зазору (по умолчанию 1e-8).
        max_iter: Максимум итераций (по умолчанию 200).
        options: Полный набор параметров; tol/max_iter имеют приоритет.

    Returns:
        SdpSolution с эрмитовой X и множителями y для всех исходных ограничений.
    """

    if options is None:
        options = SolverOptions.from_settings(tol=tol, max_iter=max_iter)
    elif tol is not None or max_iter is not None:
        options = SolverOptions(
            tol=tol if tol is not None else options.tol,
            max_iter=max_iter if max_iter is not None else options.max_iter,
            step_fraction=options.step_fraction,
            redundancy_threshold=options.redundancy_threshold,
        )

    n = problem.dim
    m = problem.num_constraints
    c_herm = problem.objective
    a_herm = [a for a, _ in problem.constraints]
    b_full = np.array([b for _, b in problem.constraints], dtype=np.float64)

    if m == 0:
        return _solve_unconstrained(c_herm, n, options.tol)

    # Делим на 2, чтобы значения целевой функции совпадали с эрмитовыми
    c_real = herm_to_real(c_herm) / 2
    a_real = np.array([herm_to_real(a) / 2 for a in a_herm]).reshape(m, 2 * n, 2 * n)

    keep, consistent = _prune_constraints(
        a_real.reshape(m, -1), b_full, options.redundancy_threshold, options.tol
    )

    if not consistent:
        logger.warning("Система линейных ограничений несовместна")
        return SdpSolution(
            status=INFEASIBLE,
            x=np.zeros((n, n), dtype=np.complex128),
            y=np.zeros(m),
            primal_obj=np.inf,
            dual_obj=np.inf,
            primal_residual=np.inf,
            dual_residual=np.inf,
            gap=np.inf,
            iterations=0,
        )

    result = _interior_point(c_real, a_real[keep], b_full[keep], options)

    x = hermitian(real_to_herm(result["x"], n))
    y = np.zeros(m)
    y[keep] = result["y"]

    slack = c_herm - sum((yi * a for yi, a in zip(y, a_herm)), np.zeros((n, n), dtype=np.complex128))
    slack = (slack + slack.conj().T) / 2
    primal_obj = float(np.vdot(c_herm, x).real)
    dual_obj = float(b_full @ y)
    gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj))

    status = result["status"]
    if status != OPTIMAL:
        logger.warning(
            f"SDP (dim={n}, m={m}): статус {status}, pres={result['primal_residual']:.2e}, "
            f"dres={result['dual_residual']:.2e}, gap={gap:.2e}"
        )
    else:
        logger.debug(f"SDP (dim={n}, m={m}) решена за {result['iterations']} итераций, obj={primal_obj:.10g}")

    return SdpSolution(
        status=status,
        x=x,
        y=y,
        primal_obj=primal_obj,
        dual_obj=dual_obj,
        primal_residual=float(result["primal_residual"]),
        dual_residual=float(result["dual_residual"]),
        gap=gap,
        iterations=int(result["iterations"]),
        slack=slack,
    )
