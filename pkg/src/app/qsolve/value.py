"""
Функции ценности q-MDP.

- min_over_actions: минимизация по открытым действиям через спектр
  частичной свертки;
- value_net_open: сетка по D(H_X) и двойственные решения в каждой точке;
- value_closed: точная линейная функция ценности для CSP-политик;
- шаги Беллмана для диагностики неподвижной точки.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar
from scipy.stats import qmc
try:
    from tqdm import tqdm
except ImportError:
    tqdm = lambda x, **kwargs: x  # fallback без progress bar

from .. import conic
from ..channel import CspPolicyChannel, adjoint_apply, apply_kraus, nqc
from ..errors import NetCapExceededError, QmdpError, SolverError
from ..herm import Matrix, basis_projector, eig_h, hermitian, hermitian_basis, hs_inner, min_eig, partial_trace_X, tensor
from ..random_models import make_rng, random_density
from ..settings import settings
from ..utils import setup_logger
from .instance import QmdpInstance, op_T_adj
from .sdp import min_over_csp_policies, solve_sdp_closed, solve_sdp_open

# Настройка логирования
logger = setup_logger(__name__)

DEGENERACY_TOL = 1e-10
DUAL_FEASIBILITY_TOL = 1e-7
MAX_PROBES = 20000
PROBE_SEED = 20240917

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=np.complex128)


@dataclass
class ActionMinimum:
    """Минимум <c + beta N^dagger(xi), rho ⊗ pi> по pi."""
    value: float
    argmin_pi: Matrix
    contraction: Matrix = field(repr=False)


def action_contraction(q: QmdpInstance, rho, xi) -> Matrix:
    """G = Tr_X((c + beta N^dagger(xi)) (rho ⊗ Id))."""

    m = q.cost + q.beta * adjoint_apply(q.channel, xi)
    g = partial_trace_X(m @ tensor(rho, np.eye(q.dim_a)), q.dim_x, q.dim_a)
    return (g + g.conj().T) / 2


def bottom_eigenprojector(g) -> Tuple[float, Matrix]:
    """Наименьшее собственное значение и равномерная смесь по его собственному подпространству."""

    w, v = eig_h(g)
    scale = max(1.0, float(np.max(np.abs(w))))
    mask = w <= w[0] + DEGENERACY_TOL * scale
    basis = v[:, mask]
    return float(w[0]), hermitian(basis @ basis.conj().T / basis.shape[1])


def min_over_actions(q: QmdpInstance, rho, xi) -> ActionMinimum:
    """
    Оператор L для линейной функции <xi, .>: минимум по pi равен
    lambda_min(G), минимизатор - нормированный проектор на нижнее
    собственное подпространство G.
    """

    g = action_contraction(q, rho, xi)
    value, pi = bottom_eigenprojector(g)
    return ActionMinimum(value=value, argmin_pi=pi, contraction=g)


@dataclass
class DensityNet:
    """Конечный набор операторов плотности, покрывающий D(H_X)."""
    points: List[Matrix]
    constructive_radius: Optional[float] = None

    def __len__(self) -> int:
        return len(self.points)


def bloch_lattice(resolution: int, cap: int) -> DensityNet:
    """
    Кубическая решетка в шаре Блоха с шагом h = 2 sqrt(2) / (sqrt(3) n).

    Узлы вне шара, но в слое толщины h sqrt(3) / 2, проецируются на сферу,
    поэтому радиус покрытия в норме Гильберта-Шмидта не превосходит
    h sqrt(3) / (2 sqrt(2)) = 1 / n.
    """

    h = 2.0 * math.sqrt(2.0) / (math.sqrt(3.0) * resolution)
    reach = 1.0 + h * math.sqrt(3.0) / 2.0
    if 0.5 * (4.0 * math.pi / 3.0) / h ** 3 > cap:
        raise NetCapExceededError(f"Сетка разрешения {resolution} превышает предел {cap}")

    k = int(math.ceil(reach / h))
    axis = np.arange(-k, k + 1) * h
    coords = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    norms = np.linalg.norm(coords, axis=1)
    inside = coords[norms <= 1.0]
    shell = (norms > 1.0) & (norms <= reach)
    projected = coords[shell] / norms[shell, None]
    vectors = np.unique(np.round(np.vstack([inside, projected]), 12), axis=0)

    if len(vectors) > cap:
        raise NetCapExceededError(f"Сетка из {len(vectors)} точек превышает предел {cap}")

    points = [hermitian((np.eye(2) + np.einsum("k,kij->ij", r, PAULI)) / 2) for r in vectors]
    return DensityNet(points=points, constructive_radius=h * math.sqrt(3.0) / (2.0 * math.sqrt(2.0)))


def _simplex_grid(dim: int, resolution: int) -> List[np.ndarray]:
    """Все спектры с шагом 1/n (разбиения n на dim слагаемых)."""
    spectra = []
    for bars in itertools.combinations(range(resolution + dim - 1), dim - 1):
        edges = (-1,) + bars + (resolution + dim - 1,)
        spectra.append(np.diff(edges) - 1)
    return [np.array(s, dtype=np.float64) / resolution for s in spectra]


def spectral_net(dim: int, resolution: int, unitaries_per_spectrum: int, cap: int) -> DensityNet:
    """
    Сетка U diag(lambda) U^dagger: спектры с шагом 1/n и детерминированный
    набор унитарных матриц exp(iH), где координаты H берутся из
    последовательности Холтона.
    """

    spectra = _simplex_grid(dim, resolution)
    num_unitaries = unitaries_per_spectrum * resolution ** 2
    total = sum(1 if np.allclose(s, s[0]) else num_unitaries + 1 for s in spectra)
    if total > cap:
        raise NetCapExceededError(f"Сетка из {total} точек превышает предел {cap}")

    basis = hermitian_basis(dim)
    sampler = qmc.Halton(d=dim * dim, scramble=False)
    # Первая точка последовательности нулевая (единичная матрица), пропускаем ее
    coords = sampler.random(num_unitaries + 1)[1:]
    unitaries = [np.eye(dim, dtype=np.complex128)]
    for u in coords:
        h = np.einsum("k,kij->ij", (2.0 * u - 1.0) * np.pi, basis)
        unitaries.append(scipy.linalg.expm(1j * h))

    points = []
    for spectrum in spectra:
        if np.allclose(spectrum, spectrum[0]):
            points.append(hermitian(np.diag(spectrum).astype(np.complex128)))
            continue
        for u in unitaries:
            points.append(hermitian(u @ np.diag(spectrum) @ u.conj().T))
    return DensityNet(points=points)


def density_net(dim_x: int, resolution: int, unitaries_per_spectrum: Optional[int] = None,
                cap: Optional[int] = None) -> DensityNet:
    """
    Строит покрывающий набор D_n(H_X).

    Args:
        dim_x: Размерность H_X.
        resolution: Разрешение n >= 1.
        unitaries_per_spectrum: Множитель числа унитарных матриц (для |X| >= 3).
        cap: Предельный размер сетки.
    """

    if resolution < 1:
        raise ValueError(f"Разрешение должно быть >= 1, получено {resolution}")
    cap = int(cap if cap is not None else settings.get("value_net", "cap"))
    if unitaries_per_spectrum is None:
        unitaries_per_spectrum = int(settings.get("value_net", "unitaries_per_spectrum"))

    if dim_x == 1:
        return DensityNet(points=[np.ones((1, 1), dtype=np.complex128)], constructive_radius=0.0)
    if dim_x == 2:
        return bloch_lattice(resolution, cap)
    return spectral_net(dim_x, resolution, unitaries_per_spectrum, cap)


def _flatten(points) -> np.ndarray:
    return np.array([np.asarray(p).reshape(-1) for p in points])


def distances_to_points(points: np.ndarray, probes: np.ndarray, chunk: int = 2048) -> Tuple[np.ndarray, np.ndarray]:
    """
    Для каждой пробы - расстояние по Гильберту-Шмидту до ближайшей точки
    и ее индекс (наименьший при равенстве).
    """

    point_sq = np.sum(np.abs(points) ** 2, axis=1)
    dists = np.empty(len(probes))
    indices = np.empty(len(probes), dtype=np.int64)
    for start in range(0, len(probes), chunk):
        block = probes[start:start + chunk]
        sq = np.sum(np.abs(block) ** 2, axis=1)[:, None] + point_sq[None, :] - 2.0 * (block.conj() @ points.T).real
        idx = np.argmin(sq, axis=1)
        indices[start:start + chunk] = idx
        dists[start:start + chunk] = np.sqrt(np.maximum(sq[np.arange(len(block)), idx], 0.0))
    return dists, indices


def covering_radius(points, num_probes: int, seed=PROBE_SEED) -> float:
    """Эмпирический радиус покрытия: максимум по случайным пробам расстояния до сетки."""

    dim = np.asarray(points[0]).shape[0]
    if dim == 1:
        return 0.0
    rng = make_rng(seed)
    probes = [random_density(dim, rng, rank=1 if i % 2 == 0 else None) for i in range(num_probes)]
    dists, _ = distances_to_points(_flatten(points), _flatten(probes))
    return float(dists.max())


@dataclass
class ValueNet:
    """
    Кусочно-линейная аппроксимация V*: V_n(rho) = <xi_Q(rho), rho>,
    Q(rho) - ближайшая точка сетки.
    """

    resolution: int
    beta: float
    points: List[Matrix] = field(repr=False)
    duals: List[Matrix] = field(repr=False)
    dual_values: List[float] = field(repr=False)
    covering_radius_estimate: float
    covering_radius_bound: Optional[float] = None
    dropped: List[int] = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.points) == len(self.duals) == len(self.dual_values)):
            raise ValueError("points, duals и dual_values должны иметь одинаковую длину")
        self._flat = _flatten(self.points) if self.points else np.zeros((0, 0))

    def __len__(self) -> int:
        return len(self.points)

    def nearest_index(self, rho) -> int:
        _, idx = distances_to_points(self._flat, np.asarray(rho).reshape(1, -1))
        return int(idx[0])

    def dual_at(self, rho) -> Matrix:
        return self.duals[self.nearest_index(rho)]

    def __call__(self, rho) -> float:
        return hs_inner(self.dual_at(rho), rho)

    def error_bound(self, cost_hs_norm: float, radius: Optional[float] = None) -> float:
        """||c||_HS sqrt(|X|) r / (1 - beta) для радиуса покрытия r."""
        r = self.covering_radius_estimate if radius is None else radius
        dim_x = np.asarray(self.points[0]).shape[0]
        return cost_hs_norm * math.sqrt(dim_x) * r / (1.0 - self.beta)

    def to_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "size": len(self.points),
            "dropped": list(self.dropped),
            "covering_radius_estimate": self.covering_radius_estimate,
            "covering_radius_bound": self.covering_radius_bound,
        }


def _dual_at_point(q: QmdpInstance, point, tol: Optional[float]):
    try:
        report = solve_sdp_open(q.with_rho0(point), tol=tol)
    except QmdpError as e:
        return None, str(e)
    if report.status != conic.OPTIMAL:
        return None, f"статус {report.status}"
    margin = min_eig(q.cost - op_T_adj(q, report.xi))
    if margin < -DUAL_FEASIBILITY_TOL:
        return None, f"двойственное решение недопустимо: lambda_min={margin:.2e}"
    return (report.xi, report.dual_value), None


def value_net_open(
    q: QmdpInstance,
    resolution: int,
    cap: Optional[int] = None,
    workers: Optional[int] = None,
    tol: Optional[float] = None,
    probe_seed=PROBE_SEED,
    progress: bool = True,
) -> ValueNet:
    """
    Сеточный алгоритм для открытых политик: двойственная SDP в каждой
    точке сетки, ближайшая точка при вычислении.

    Args:
        q: Экземпляр q-MDP (rho0 не используется).
        resolution: Разрешение сетки n.
        cap: Предельный размер сетки.
        workers: Число потоков (по умолчанию QMDP_THREADS).
        tol: Допуск решателя.
        probe_seed: Зерно проб для оценки радиуса покрытия.
        progress: Показывать индикатор выполнения.

    Returns:
        ValueNet; точки, где решение не получено, исключаются с предупреждением.
    """

    net = density_net(q.dim_x, resolution, cap=cap)
    workers = max(1, int(workers or settings.threads))
    logger.info(f"Сетка разрешения {resolution}: {len(net)} точек, потоков {workers}")

    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(tqdm(
            executor.map(lambda point: _dual_at_point(q, point, tol), net.points),
            total=len(net),
            desc="Двойственные SDP в точках сетки",
            disable=not progress,
        ))

    points, duals, values, dropped = [], [], [], []
    for index, (result, reason) in enumerate(results):
        if result is None:
            logger.warning(f"Точка сетки {index} исключена: {reason}")
            dropped.append(index)
            continue
        points.append(net.points[index])
        duals.append(result[0])
        values.append(float(result[1]))

    if not points:
        raise SolverError(conic.MAX_ITER, "Ни в одной точке сетки двойственная задача не решена")

    num_probes = min(MAX_PROBES, int(settings.get("value_net", "probe_factor")) * len(net))
    radius = covering_radius(points, num_probes, seed=probe_seed)
    logger.info(f"Эмпирический радиус покрытия {radius:.4f} по {num_probes} пробам")

    return ValueNet(
        resolution=resolution,
        beta=q.beta,
        points=points,
        duals=duals,
        dual_values=values,
        covering_radius_estimate=radius,
        covering_radius_bound=net.constructive_radius,
        dropped=dropped,
    )


def _one_step_open(q: QmdpInstance, value_net: ValueNet, rho, pi) -> Tuple[float, Matrix]:
    """Значение <c, rho ⊗ pi> + beta V_n(N(rho ⊗ pi)) и активное xi."""
    sigma = tensor(rho, pi)
    next_state = apply_kraus(q.channel, sigma)
    xi = value_net.dual_at(next_state)
    return hs_inner(q.cost, sigma) + q.beta * hs_inner(xi, next_state), xi


def bellman_step_open(q: QmdpInstance, value_net: ValueNet, rho, max_iter: int = 50, tol: float = 1e-12) -> float:
    """
    L V_n(rho) = min_pi <c, rho ⊗ pi> + beta V_n(N(rho ⊗ pi)).

    Кандидаты - минимизаторы для каждого хранимого xi (V_n совпадает с одним
    из линейных кусков), лучший уточняется методом Франк-Вульфа с
    одномерным поиском по истинной функции.
    """

    rho = np.asarray(rho, dtype=np.complex128)
    candidates = [np.eye(q.dim_a, dtype=np.complex128) / q.dim_a]
    candidates += [min_over_actions(q, rho, xi).argmin_pi for xi in value_net.duals]

    best_pi, best_value, best_xi = None, np.inf, None
    for pi in candidates:
        value, xi = _one_step_open(q, value_net, rho, pi)
        if value < best_value:
            best_pi, best_value, best_xi = pi, value, xi

    for _ in range(max_iter):
        vertex = min_over_actions(q, rho, best_xi).argmin_pi
        direction = vertex - best_pi
        if np.linalg.norm(direction) < 1e-14:
            break
        search = minimize_scalar(
            lambda t: _one_step_open(q, value_net, rho, best_pi + t * direction)[0],
            bounds=(0.0, 1.0), method="bounded",
        )
        step = float(search.x)
        trial_pi = best_pi + step * direction
        trial_value, trial_xi = _one_step_open(q, value_net, rho, trial_pi)
        if trial_value >= best_value - tol:
            break
        best_pi, best_value, best_xi = trial_pi, trial_value, trial_xi

    return float(best_value)


@dataclass
class ClosedValueFunction:
    """Линейная функция ценности V_w(rho) = <N_qc(xi*), rho>."""

    diag_xi: np.ndarray
    dual_values: List[float] = field(default_factory=list, repr=False)

    @property
    def operator(self) -> Matrix:
        return np.diag(np.asarray(self.diag_xi, dtype=np.float64)).astype(np.complex128)

    def __call__(self, rho) -> float:
        rho = np.asarray(rho)
        return float(np.dot(self.diag_xi, np.diag(rho).real))

    def to_dict(self) -> dict:
        return {"diag_xi": [float(v) for v in self.diag_xi]}


def value_closed(q: QmdpInstance, tol: Optional[float] = None) -> ClosedValueFunction:
    """
    Точная функция ценности для CSP-политик: (SDP-w†) при rho0 = |x><x|
    для каждого x, diag_xi[x] = Tr(xi_x |x><x|) = V*(|x><x|).

    Raises:
        SolverError: если задача для какого-то x не решена оптимально.
    """

    diag_xi = np.zeros(q.dim_x)
    dual_values = []
    for x in range(q.dim_x):
        report = solve_sdp_closed(q.with_rho0(basis_projector(q.dim_x, x)), tol=tol)
        if report.status != conic.OPTIMAL:
            raise SolverError(report.status, f"(SDP-w) при rho0 = |{x}><{x}| не решена: статус {report.status}",
                              context=f"|{x}><{x}|")
        diag_xi[x] = float(report.xi[x, x].real)
        dual_values.append(report.dual_value)
    logger.info(f"Функция ценности CSP-политик: diag_xi = {np.round(diag_xi, 8).tolist()}")
    return ClosedValueFunction(diag_xi=diag_xi, dual_values=dual_values)


def _closed_step_problem(q: QmdpInstance, evaluator: ClosedValueFunction, rho, tol: Optional[float]):
    g = q.cost + q.beta * adjoint_apply(q.channel, nqc(evaluator.operator))
    result = min_over_csp_policies(q.dim_x, q.dim_a, rho, g, tol=tol)
    if result.solution.status != conic.OPTIMAL:
        raise SolverError(result.solution.status, f"Шаг Беллмана по CSP-политикам не решен: {result.solution.status}")
    return result


def bellman_step_closed(q: QmdpInstance, evaluator: ClosedValueFunction, rho, tol: Optional[float] = None) -> float:
    """L_w V_w(rho) = min по gamma из C_w <c + beta N^dagger(N_qc(xi*)), gamma(rho)>."""
    return float(_closed_step_problem(q, evaluator, rho, tol).value)


def greedy_csp_policy(q: QmdpInstance, evaluator: ClosedValueFunction, rho=None,
                      tol: Optional[float] = None) -> CspPolicyChannel:
    """
    Жадная CSP-политика относительно линейной функции ценности.

    При диагональном rho (по умолчанию Id / |X|) задача распадается по
    блокам x, и минимизатор оптимален во всех классических состояниях.
    """

    if rho is None:
        rho = np.eye(q.dim_x, dtype=np.complex128) / q.dim_x
    return _closed_step_problem(q, evaluator, rho, tol).policy
