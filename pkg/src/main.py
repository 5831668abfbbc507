"""
Главный модуль приложения - точка входа.
"""

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Dict

import numpy as np

from src.app import conic
from src.app.channel import CspPolicyChannel, nqc, verify_cptp
from src.app.classical import embed_to_qmdp
from src.app.cli import CLI, EXIT_OK, EXIT_SOLVER
from src.app.errors import DimensionMismatchError, ProblemFormatError
from src.app.herm import hs_norm
from src.app.problem_io import (
    KIND_CLASSICAL,
    complex_matrix_to_json,
    load_policy,
    load_problem,
    policy_to_json,
    qmdp_to_json,
)
from src.app.qsolve.assumptions import CERTIFIED, REFUTED, UNKNOWN, check_assumption1, check_assumption2, default_probes
from src.app.qsolve.bilinear import BilinearOptions, solve_bil_closed, solve_bil_open
from src.app.qsolve.instance import OpenLoopPolicy, QmdpInstance, op_T, op_Tw, relative_gap
from src.app.qsolve.occupation import evaluate_stationary, rollout
from src.app.qsolve.sdp import solve_sdp_closed, solve_sdp_open
from src.app.qsolve.value import bellman_step_open, greedy_csp_policy, value_closed, value_net_open
from src.app.settings import settings
from src.app.utils import atomic_write_text, setup_logger
from src.app.writer import ReportFile, default_report_path, summary_table, write_report

# Настройка логирования
logger = setup_logger(__name__)

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"

Fields = Dict[str, Any]


def cmd_validate(args: argparse.Namespace) -> int:
    """Проверяет файл задачи; ошибки инвариантов поднимаются как исключения."""

    problem = load_problem(args.path)
    q = problem.as_qmdp()
    report = verify_cptp(q.channel)
    print(f"OK: {problem.kind}, |X|={q.dim_x}, |A|={q.dim_a}, beta={q.beta}")
    print(f"  trace preservation residual: {report.tp_residual:.3e}")
    print(f"  Choi psd margin:             {report.psd_margin:.3e}")
    print(f"  sha256: {problem.digest}")
    return EXIT_OK


def _parse_mu0(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError as e:
        raise ProblemFormatError(f"Некорректный --mu0: {text}") from e


def cmd_embed_classical(args: argparse.Namespace) -> int:
    """Записывает q-MDP, эквивалентный классическому MDP."""

    problem = load_problem(args.path)
    if problem.kind != KIND_CLASSICAL:
        raise ProblemFormatError(f"Ожидался файл {KIND_CLASSICAL}, получен {problem.kind}")

    mu0 = _parse_mu0(args.mu0) if args.mu0 else problem.mu0
    q = embed_to_qmdp(problem.mdp, mu0)

    output = Path(args.output) if args.output else Path(args.path).with_name(f"{Path(args.path).stem}.qmdp.json")
    atomic_write_text(output, json.dumps(qmdp_to_json(q), sort_keys=True, indent=2) + "\n")
    logger.info(f"q-MDP записан: {output}")
    print(f"OK: {output}")
    return EXIT_OK


def _exit_for_status(status: str) -> int:
    return EXIT_OK if status in (conic.OPTIMAL, CERTIFIED, CONSISTENT) else EXIT_SOLVER


def _solve_sdp(q: QmdpInstance, args: argparse.Namespace) -> Fields:
    closed = args.mode.startswith("closed")
    report = (solve_sdp_closed if closed else solve_sdp_open)(q, tol=args.tol)
    details = dict(report.details)
    if args.mode.endswith("dual"):
        details["xi"] = complex_matrix_to_json(report.xi)
    else:
        details["sigma"] = complex_matrix_to_json(report.sigma)
    return {
        "status": report.status,
        "primal_value": report.primal_value,
        "dual_value": report.dual_value,
        "gap": report.gap,
        "details": details,
    }


def _solve_bilinear(q: QmdpInstance, args: argparse.Namespace) -> Fields:
    options = BilinearOptions.from_settings(
        restarts=args.restarts,
        max_outer=args.max_outer,
        seed=args.seed,
        solver_tol=args.tol,
    )
    report = (solve_bil_closed if args.mode == "bil-closed" else solve_bil_open)(q, options)
    details = dict(report.details)
    trace = details.pop("rollout")
    trace["rollout_value"] = report.rollout_value
    return {
        "status": report.status,
        "primal_value": report.primal_value,
        "dual_value": report.dual_value,
        "gap": report.gap,
        "policy": policy_to_json(report.extracted_policy),
        "rollout": trace,
        "details": details,
    }


def _solve_value_net(q: QmdpInstance, args: argparse.Namespace) -> Fields:
    net = value_net_open(q, args.net_resolution, tol=args.tol, progress=sys.stderr.isatty())
    reference = solve_sdp_open(q, tol=args.tol)
    approx = net(q.rho0)
    bellman = bellman_step_open(q, net, q.rho0)

    status = conic.OPTIMAL if not net.dropped and reference.status == conic.OPTIMAL else conic.MAX_ITER
    details = net.to_dict()
    details.update({
        "value_at_rho0": approx,
        "bellman_residual_at_rho0": bellman - approx,
        "error_bound": net.error_bound(q.cost_hs_norm),
        "reference_status": reference.status,
    })
    return {
        "status": status,
        "primal_value": (1.0 - q.beta) * approx,
        "dual_value": reference.dual_value,
        "gap": relative_gap((1.0 - q.beta) * approx, reference.dual_value),
        "details": details,
    }


def _solve_value_closed(q: QmdpInstance, args: argparse.Namespace) -> Fields:
    evaluator = value_closed(q, tol=args.tol)
    policy = greedy_csp_policy(q, evaluator, tol=args.tol)
    trace = rollout(q, policy)
    reference = solve_sdp_closed(q, tol=args.tol)

    # Прямая сторона - точная стоимость жадной политики, двойственная - (SDP-w)
    primal = evaluate_stationary(q, policy)
    gap = relative_gap(primal, reference.dual_value)
    certified = reference.status == conic.OPTIMAL and gap <= float(settings.get("bilinear", "certificate_tol"))

    details = evaluator.to_dict()
    details.update({
        "dual_values": list(evaluator.dual_values),
        "value_at_rho0": evaluator(q.rho0),
        "reference_status": reference.status,
    })
    return {
        "status": conic.OPTIMAL if certified else conic.MAX_ITER,
        "primal_value": primal,
        "dual_value": reference.dual_value,
        "gap": gap,
        "policy": policy_to_json(policy),
        "rollout": trace.to_dict(),
        "details": details,
    }


def _rollout_policy(q: QmdpInstance, path) -> Any:
    if path is None:
        return OpenLoopPolicy.stationary(np.eye(q.dim_a, dtype=np.complex128) / q.dim_a)
    policy = load_policy(path)
    if isinstance(policy, CspPolicyChannel) and (policy.dim_x, policy.dim_a) != (q.dim_x, q.dim_a):
        raise DimensionMismatchError(
            f"CSP-политика {policy.dim_x}x{policy.dim_a} не соответствует задаче {q.dim_x}x{q.dim_a}"
        )
    return policy


def _solve_rollout(q: QmdpInstance, args: argparse.Namespace) -> Fields:
    policy = _rollout_policy(q, args.policy)
    trace = rollout(q, policy, horizon=args.horizon)

    if isinstance(policy, CspPolicyChannel):
        residual = hs_norm(op_Tw(q, trace.occupation) - (1.0 - q.beta) * nqc(q.rho0))
    else:
        residual = hs_norm(op_T(q, trace.occupation) - (1.0 - q.beta) * q.rho0)

    # Для стационарной политики сверяем прогон с точным значением через неподвижную точку
    stationary = isinstance(policy, CspPolicyChannel) or policy.is_stationary
    exact = evaluate_stationary(q, policy) if stationary else None
    deviation = abs(trace.normalized_cost - exact) if exact is not None else 0.0
    status = CONSISTENT if deviation <= trace.cost_tail_bound + 1e-9 else INCONSISTENT

    summary = trace.to_dict()
    summary["occupation_residual"] = residual
    return {
        "status": status,
        "primal_value": trace.normalized_cost,
        "dual_value": exact,
        "gap": deviation if exact is not None else None,
        "policy": policy_to_json(policy),
        "rollout": summary,
    }


def _check_assumptions(q: QmdpInstance, args: argparse.Namespace) -> Fields:
    tol = max(args.tol, float(settings.get("tolerances", "assumption")))
    probes = default_probes(q.dim_x, args.probes, seed=args.seed)
    checks = {}
    for name, solve, check in (
        ("assumption1", solve_sdp_open, check_assumption1),
        ("assumption2", solve_sdp_closed, check_assumption2),
    ):
        report = solve(q, tol=args.tol)
        if report.status != conic.OPTIMAL:
            logger.warning(f"{name}: двойственная задача не решена ({report.status})")
            checks[name] = {"status": UNKNOWN, "reason": f"SDP: {report.status}"}
            continue
        checks[name] = check(q, report.xi, probes, tol=tol).to_dict()

    statuses = {name: result["status"] for name, result in checks.items()}
    if all(s == CERTIFIED for s in statuses.values()):
        status = CERTIFIED
    elif any(s == REFUTED for s in statuses.values()):
        status = REFUTED
    else:
        status = UNKNOWN
    return {"status": status, "assumption_status": statuses, "details": checks}


SOLVERS = {
    "open-sdp": _solve_sdp,
    "open-dual": _solve_sdp,
    "closed-sdp": _solve_sdp,
    "closed-dual": _solve_sdp,
    "bil-open": _solve_bilinear,
    "bil-closed": _solve_bilinear,
    "value-net": _solve_value_net,
    "value-closed": _solve_value_closed,
    "rollout": _solve_rollout,
    "check-assumptions": _check_assumptions,
}


def cmd_solve(args: argparse.Namespace) -> int:
    """
    Решает задачу в режиме args.mode и пишет отчет.

    Returns:
        0 при оптимальном (сертифицированном) результате, 3 иначе;
        отчет записывается в обоих случаях.
    """

    problem = load_problem(args.path)
    q = problem.as_qmdp()

    start = time.perf_counter()
    fields = SOLVERS[args.mode](q, args)
    elapsed = time.perf_counter() - start

    report = ReportFile.build(
        command="solve",
        mode=args.mode,
        instance_digest=problem.digest,
        timings=None if args.no_timings else {"total": elapsed},
        **fields,
    )
    write_report(report, args.output or default_report_path(args.path, args.mode))
    print(summary_table(report))
    return _exit_for_status(report.status)


HANDLERS = {
    "validate": cmd_validate,
    "embed-classical": cmd_embed_classical,
    "solve": cmd_solve,
}


def main():
    """Точка входа."""
    cli = CLI()
    cli.parse_and_run(HANDLERS)


if __name__ == "__main__":
    main()
