"""
Генераторы случайных моделей с фиксированным зерном: состояния,
эрмитовы операторы, каналы, классические MDP и CSP-политики.
"""

from typing import Optional

import numpy as np

from .channel import CspPolicyChannel, KrausChannel, csp_expand
from .classical import ClassicalMdp
from .herm import Matrix, hermitian
from .qsolve.instance import QmdpInstance


def make_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def random_density(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> Matrix:
    """Оператор плотности G G^dagger / Tr(G G^dagger) (мера Гильберта-Шмидта при rank = dim)."""
    g = _ginibre(rng, dim, rank or dim)
    rho = g @ g.conj().T
    return hermitian(rho / np.trace(rho).real)


def random_pure_state(dim: int, rng: np.random.Generator) -> Matrix:
    return random_density(dim, rng, rank=1)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> Matrix:
    g = _ginibre(rng, dim, dim)
    return hermitian(scale * (g + g.conj().T) / 2)


def random_psd(dim: int, rng: np.random.Generator, shift: float = 0.0) -> Matrix:
    """Случайный PSD оператор; shift > 0 делает его строго положительным."""
    g = _ginibre(rng, dim, dim)
    return hermitian(g @ g.conj().T / dim + shift * np.eye(dim))


def random_unitary(dim: int, rng: np.random.Generator) -> Matrix:
    """Унитарная матрица по мере Хаара (QR с исправлением фаз)."""
    q, r = np.linalg.qr(_ginibre(rng, dim, dim))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases[None, :]


def random_channel(in_dim: int, out_dim: int, rng: np.random.Generator, num_kraus: Optional[int] = None) -> KrausChannel:
    """
    Случайный CPTP канал: изометрия Стайнспринга V (out_dim * k x in_dim),
    нарезанная на блоки Крауса K_l = V[l*out : (l+1)*out, :].
    """

    k = num_kraus or in_dim
    k = max(k, -(-in_dim // out_dim))
    q, r = np.linalg.qr(_ginibre(rng, out_dim * k, in_dim))
    v = q * (np.diag(r) / np.abs(np.diag(r)))[None, :]
    kraus = tuple(v[l * out_dim:(l + 1) * out_dim, :] for l in range(k))
    return KrausChannel(in_dim=in_dim, out_dim=out_dim, kraus=kraus)


def random_classical_mdp(nx: int, na: int, beta: float, rng: np.random.Generator) -> ClassicalMdp:
    """Плотные переходы и стоимости из [0, 1]."""
    w = rng.exponential(size=(nx, nx, na))
    p = w / w.sum(axis=0, keepdims=True)
    c = rng.uniform(0.0, 1.0, size=(nx, na))
    return ClassicalMdp(nx=nx, na=na, p=p, c=c, beta=beta)


def random_csp_policy(dim_x: int, dim_a: int, rng: np.random.Generator) -> CspPolicyChannel:
    """
    Случайный CSP-канал: сжатая матрица Z = D G D, G - случайная PSD на
    H_X ⊗ H_A, D нормирует диагональные блоки к единичному следу.
    """

    g = _ginibre(rng, dim_x * dim_a, dim_x * dim_a)
    z = g @ g.conj().T
    scale = np.empty(dim_x * dim_a)
    for x in range(dim_x):
        block = z[x * dim_a:(x + 1) * dim_a, x * dim_a:(x + 1) * dim_a]
        scale[x * dim_a:(x + 1) * dim_a] = 1.0 / np.sqrt(np.trace(block).real)
    z = scale[:, None] * z * scale[None, :]
    return CspPolicyChannel.from_matrix(csp_expand(z, dim_x, dim_a), dim_x, dim_a)


def random_qmdp(dim_x: int, dim_a: int, beta: float, rng: np.random.Generator, cost_scale: float = 1.0) -> QmdpInstance:
    """Случайный q-MDP: канал Стайнспринга, эрмитова стоимость, смешанное rho0."""
    return QmdpInstance(
        dim_x=dim_x,
        dim_a=dim_a,
        channel=random_channel(dim_x * dim_a, dim_x, rng),
        cost=random_hermitian(dim_x * dim_a, rng, scale=cost_scale),
        beta=beta,
        rho0=random_density(dim_x, rng),
    )
