"""
Файлы задач и политик: JSON-схемы, разбор в числовые модели и обратная
сериализация. Комплексные числа записываются как [re, im].
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from jsonschema import ValidationError, validate

from .channel import ChoiMatrix, CspPolicyChannel, KrausChannel, choi_to_kraus
from .classical import ClassicalMdp, embed_to_qmdp
from .errors import DimensionMismatchError, ProblemFormatError
from .qsolve.instance import OpenLoopPolicy, Policy, QmdpInstance
from .utils import setup_logger

# Настройка логирования
logger = setup_logger(__name__)

KIND_QMDP = "qmdp"
KIND_CLASSICAL = "classical-mdp"
KIND_OPEN_POLICY = "open-loop-policy"
KIND_CSP_POLICY = "csp-policy"

COMPLEX_SCHEMA = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}

COMPLEX_MATRIX_SCHEMA = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": COMPLEX_SCHEMA},
}

REAL_ARRAY_SCHEMA = {
    "type": "array",
    "minItems": 1,
    "items": {"anyOf": [{"type": "number"}, {"$ref": "#/definitions/real_array"}]},
}

QMDP_SCHEMA = {
    "type": "object",
    "required": ["kind", "dimX", "dimA", "beta", "rho0", "cost", "channel"],
    "properties": {
        "kind": {"const": KIND_QMDP},
        "dimX": {"type": "integer", "minimum": 1},
        "dimA": {"type": "integer", "minimum": 1},
        "beta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "rho0": COMPLEX_MATRIX_SCHEMA,
        "cost": COMPLEX_MATRIX_SCHEMA,
        "channel": {
            "type": "object",
            "oneOf": [
                {
                    "required": ["kraus"],
                    "properties": {"kraus": {"type": "array", "minItems": 1, "items": COMPLEX_MATRIX_SCHEMA}},
                },
                {"required": ["choi"], "properties": {"choi": COMPLEX_MATRIX_SCHEMA}},
            ],
        },
    },
}

CLASSICAL_SCHEMA = {
    "type": "object",
    "required": ["kind", "nx", "na", "beta", "p", "c"],
    "definitions": {"real_array": REAL_ARRAY_SCHEMA},
    "properties": {
        "kind": {"const": KIND_CLASSICAL},
        "nx": {"type": "integer", "minimum": 1},
        "na": {"type": "integer", "minimum": 1},
        "beta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "p": {"$ref": "#/definitions/real_array"},
        "c": {"$ref": "#/definitions/real_array"},
        "mu0": {"type": "array", "items": {"type": "number"}},
    },
}

POLICY_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {
            "required": ["pi"],
            "properties": {
                "kind": {"const": KIND_OPEN_POLICY},
                "pi": COMPLEX_MATRIX_SCHEMA,
                "steps": {"type": "array", "items": COMPLEX_MATRIX_SCHEMA},
            },
        },
        {
            "required": ["dimX", "dimA", "choi"],
            "properties": {
                "kind": {"const": KIND_CSP_POLICY},
                "dimX": {"type": "integer", "minimum": 1},
                "dimA": {"type": "integer", "minimum": 1},
                "choi": COMPLEX_MATRIX_SCHEMA,
            },
        },
    ],
}

SCHEMAS = {KIND_QMDP: QMDP_SCHEMA, KIND_CLASSICAL: CLASSICAL_SCHEMA}


@dataclass
class ProblemFile:
    """Загруженный и проверенный файл задачи."""
    kind: str
    raw: Dict[str, Any] = field(repr=False)
    digest: str
    instance: Optional[QmdpInstance] = field(default=None, repr=False)
    mdp: Optional[ClassicalMdp] = field(default=None, repr=False)
    mu0: Optional[np.ndarray] = None

    def as_qmdp(self) -> QmdpInstance:
        """q-MDP задачи; классическая модель вкладывается с rho0 = diag(mu0)."""
        if self.instance is not None:
            return self.instance
        return embed_to_qmdp(self.mdp, self.mu0)


def digest(payload: Dict[str, Any]) -> str:
    """sha256 канонической JSON-записи."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ProblemFormatError(f"Некорректный JSON в {path}: {e}") from e


def _validate_schema(data: Any, schema: Dict[str, Any], what: str) -> None:
    try:
        validate(instance=data, schema=schema)
    except ValidationError as e:
        location = "/".join(str(p) for p in e.absolute_path) or "<корень>"
        raise ProblemFormatError(f"{what}: схема валидации не пройдена в {location}: {e.message}") from e


def parse_complex_matrix(data, name: str, shape: Optional[tuple] = None) -> np.ndarray:
    """Вложенные списки [re, im] -> комплексная матрица."""

    try:
        arr = np.array(data, dtype=np.float64)
    except ValueError as e:
        raise ProblemFormatError(f"{name}: строки матрицы разной длины") from e
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ProblemFormatError(f"{name}: ожидалась матрица пар [re, im], получено {arr.shape}")
    matrix = arr[..., 0] + 1j * arr[..., 1]
    if shape is not None and matrix.shape != shape:
        raise DimensionMismatchError(f"{name}: размерность {matrix.shape}, объявлено {shape}")
    return matrix


def complex_matrix_to_json(m) -> List[List[List[float]]]:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _real_array(data, name: str, shape: tuple) -> np.ndarray:
    try:
        arr = np.array(data, dtype=np.float64)
    except ValueError as e:
        raise ProblemFormatError(f"{name}: вложенные списки разной длины") from e
    if arr.shape != shape:
        raise DimensionMismatchError(f"{name}: размерность {arr.shape}, объявлено {shape}")
    return arr


def _parse_channel(data: Dict[str, Any], dim_x: int, dim_a: int) -> KrausChannel:
    in_dim, out_dim = dim_x * dim_a, dim_x
    if "kraus" in data:
        ops = [parse_complex_matrix(k, f"channel.kraus[{i}]", (out_dim, in_dim)) for i, k in enumerate(data["kraus"])]
        return KrausChannel(in_dim=in_dim, out_dim=out_dim, kraus=tuple(ops))
    choi = ChoiMatrix(
        in_dim=in_dim,
        out_dim=out_dim,
        matrix=parse_complex_matrix(data["choi"], "channel.choi", (in_dim * out_dim, in_dim * out_dim)),
    )
    return choi_to_kraus(choi)


def parse_qmdp(data: Dict[str, Any]) -> QmdpInstance:
    _validate_schema(data, QMDP_SCHEMA, "q-MDP")
    dim_x, dim_a = int(data["dimX"]), int(data["dimA"])
    return QmdpInstance(
        dim_x=dim_x,
        dim_a=dim_a,
        channel=_parse_channel(data["channel"], dim_x, dim_a),
        cost=parse_complex_matrix(data["cost"], "cost", (dim_x * dim_a, dim_x * dim_a)),
        beta=float(data["beta"]),
        rho0=parse_complex_matrix(data["rho0"], "rho0", (dim_x, dim_x)),
    )


def parse_classical(data: Dict[str, Any]):
    """Классическая модель и начальное распределение (по умолчанию равномерное)."""

    _validate_schema(data, CLASSICAL_SCHEMA, "classical-mdp")
    nx, na = int(data["nx"]), int(data["na"])
    mdp = ClassicalMdp(
        nx=nx,
        na=na,
        p=_real_array(data["p"], "p", (nx, nx, na)),
        c=_real_array(data["c"], "c", (nx, na)),
        beta=float(data["beta"]),
    )
    mu0 = _real_array(data["mu0"], "mu0", (nx,)) if "mu0" in data else np.full(nx, 1.0 / nx)
    return mdp, mu0


def load_problem(path: Union[str, Path]) -> ProblemFile:
    """
    Читает и проверяет файл задачи.

    Raises:
        ProblemFormatError: файл не разбирается или не проходит схему.
        InvariantViolationError: нарушены инварианты (след, PSD, стохастичность).
        DimensionMismatchError: размеры не соответствуют объявленным.
    """

    data = read_json(path)
    if not isinstance(data, dict) or data.get("kind") not in SCHEMAS:
        raise ProblemFormatError(f"Неизвестный тип задачи в {path}: ожидалось одно из {sorted(SCHEMAS)}")

    kind = data["kind"]
    if kind == KIND_QMDP:
        problem = ProblemFile(kind=kind, raw=data, digest=digest(data), instance=parse_qmdp(data))
    else:
        mdp, mu0 = parse_classical(data)
        # Проверяем и вложение, и mu0
        embed_to_qmdp(mdp, mu0)
        problem = ProblemFile(kind=kind, raw=data, digest=digest(data), mdp=mdp, mu0=mu0)

    logger.info(f"Задача {path} загружена: {kind}, sha256 {problem.digest[:12]}")
    return problem


def qmdp_to_json(q: QmdpInstance) -> Dict[str, Any]:
    """Сериализует экземпляр q-MDP (канал в представлении Крауса)."""
    return {
        "kind": KIND_QMDP,
        "dimX": q.dim_x,
        "dimA": q.dim_a,
        "beta": q.beta,
        "rho0": complex_matrix_to_json(q.rho0),
        "cost": complex_matrix_to_json(q.cost),
        "channel": {"kraus": [complex_matrix_to_json(k) for k in q.channel.kraus]},
    }


def policy_to_json(policy: Policy) -> Dict[str, Any]:
    if isinstance(policy, CspPolicyChannel):
        return {
            "kind": KIND_CSP_POLICY,
            "dimX": policy.dim_x,
            "dimA": policy.dim_a,
            "choi": complex_matrix_to_json(policy.choi.matrix),
        }
    payload = {"kind": KIND_OPEN_POLICY, "pi": complex_matrix_to_json(policy.tail)}
    if policy.steps:
        payload["steps"] = [complex_matrix_to_json(pi) for pi in policy.steps]
    return payload


def parse_policy(data: Dict[str, Any], tol: float = 1e-7) -> Policy:
    """Политика из JSON; CSP-политики проверяются с допуском tol."""

    _validate_schema(data, POLICY_SCHEMA, "policy")
    if data["kind"] == KIND_OPEN_POLICY:
        pi = parse_complex_matrix(data["pi"], "pi")
        steps = tuple(parse_complex_matrix(s, f"steps[{i}]", pi.shape) for i, s in enumerate(data.get("steps", [])))
        return OpenLoopPolicy(tail=pi, steps=steps)

    dim_x, dim_a = int(data["dimX"]), int(data["dimA"])
    size = dim_x * dim_x * dim_a
    matrix = parse_complex_matrix(data["choi"], "choi", (size, size))
    return CspPolicyChannel.from_matrix(matrix, dim_x, dim_a, tol=tol)


def load_policy(path: Union[str, Path]) -> Policy:
    return parse_policy(read_json(path))
