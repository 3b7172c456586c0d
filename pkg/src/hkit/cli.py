"""Command-line front end.

Subcommands::

    hkit run CONFIG                       solve and write trace CSV / summary JSON
    hkit validate-schedule --a --b        check a power schedule
    hkit path CONFIG --theta T [T ...]    distances of regularization-path points
    hkit probe CONFIG                     monotonicity probes for F, K and A
    hkit gallery                          list built-in problems

Exit codes of ``run``: 0 converged, 1 configuration error, 2 iteration cap
reached, 3 divergence, probe rejection or resolvent failure. The
``HKIT_THREADS`` environment variable caps worker threads (0 = automatic).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from .config import ConfigError, build_grid, build_problem, load_config
from .exceptions import (
    DivergenceError,
    HkitError,
    InvalidScheduleError,
    NoRootError,
    OracleFailureError,
    ProbeRejectedError,
    ResolventError,
)
from .lp_space import weighted_norm
from .operators import monotonicity_probe
from .oracle import gallery, newton_solve
from .resolvent import product_duality, product_solve, ResolventConfig
from .schedules import PowerSchedule, validate
from .solver import SolverConfig, run

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_MAX_ITER, EXIT_FAILURE = 0, 1, 2, 3
TRACE_HEADER = ["n", "residual", "err_u", "phi_u", "wedge_to_path", "lambda_n", "theta_n"]
DEFAULT_THETAS = [10.0 ** (-k) for k in range(1, 7)]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % value


def thread_count() -> int:
    """Worker cap from ``HKIT_THREADS``; 0 or unset means one per CPU."""
    raw = os.environ.get("HKIT_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer HKIT_THREADS=%r", raw)
        value = 0
    return value if value > 0 else (os.cpu_count() or 1)


def trace_csv(trace) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for rec in trace:
        writer.writerow(
            [_fmt(v) for v in (rec.n, rec.residual_norm, rec.err_u, rec.phi_u, rec.wedge_to_path, rec.lambda_n, rec.theta_n)]
        )
    return buffer.getvalue()


def summary_json(termination, trace) -> str:
    final = trace[-1] if trace else None
    summary = {
        "termination": termination,
        "iterations": final.n if final else 0,
        "final_residual": final.residual_norm if final else None,
        "final_err_u": final.err_u if final else None,
    }
    return json.dumps(summary, indent=2) + "\n"


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _reference_solution(problem, ops, is_gallery):
    if is_gallery and getattr(problem, "known_solution", None) is not None:
        return problem.solution(ops.grid).values
    try:
        return newton_solve(ops).values
    except (OracleFailureError, HkitError, ArithmeticError, np.linalg.LinAlgError):
        return None


def _setup(args):
    loaded = load_config(args.config)
    problem, is_gallery = build_problem(loaded)
    grid = build_grid(loaded, problem)
    try:
        ops = problem.discretize(grid)
    except ProbeRejectedError as exc:
        raise ConfigError(str(exc), loaded.line_of("problem"), loaded.source) from None
    return loaded, problem, is_gallery, ops


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_run(args) -> int:
    loaded, problem, is_gallery, ops = _setup(args)
    data = loaded.data
    try:
        schedule = PowerSchedule(data["schedule"]["a"], data["schedule"]["b"])
        config = SolverConfig(
            p=float(data["p"]), schedule=schedule, max_iter=int(data["max_iter"]),
            residual_tol=float(data["residual_tol"]), variant=data["variant"],
            record_every=int(data["record_every"]),
        )
    except (InvalidScheduleError, ValueError) as exc:
        key = "schedule" if isinstance(exc, InvalidScheduleError) else "variant"
        raise ConfigError(str(exc), loaded.line_of(key), loaded.source) from None

    reference = _reference_solution(problem, ops, is_gallery)
    outputs = data["output"]
    trace, termination, code = [], "max_iter", EXIT_MAX_ITER
    try:
        result = run(
            ops, config, oracle_solution=reference, track_path=bool(data["track_path"]), seed=int(data["seed"])
        )
        trace, termination = result.trace, result.termination
        code = EXIT_OK if termination == "converged" else EXIT_MAX_ITER
    except InvalidScheduleError as exc:
        raise ConfigError(str(exc), loaded.line_of("schedule"), loaded.source) from None
    except ProbeRejectedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        termination, code = "probe_rejected", EXIT_FAILURE
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        trace, termination, code = exc.trace, "diverged", EXIT_FAILURE
    except (ResolventError, NoRootError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        termination, code = "resolvent_failure", EXIT_FAILURE

    summary = summary_json(termination, trace)
    if "trace_csv" in outputs:
        _write(outputs["trace_csv"], trace_csv(trace))
    if "summary_json" in outputs:
        _write(outputs["summary_json"], summary)
    else:
        sys.stdout.write(summary)
    return code


def cmd_validate_schedule(args) -> int:
    try:
        schedule = PowerSchedule(args.a, args.b)
    except InvalidScheduleError as exc:
        print(json.dumps({"passed": False, "error": str(exc)}, indent=2))
        return EXIT_CONFIG
    try:
        report = validate(schedule, args.horizon)
    except ValueError as exc:
        print(json.dumps({"passed": False, "error": str(exc)}, indent=2))
        return EXIT_CONFIG
    print(json.dumps(report.to_dict(), indent=2))
    for flag in report.warnings:
        print(f"warning: {flag}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_CONFIG


def cmd_path(args) -> int:
    thetas = DEFAULT_THETAS if args.theta is None else args.theta
    if not thetas:
        print("error: the theta list is empty", file=sys.stderr)
        return EXIT_CONFIG
    if any(not 0.0 < t <= 1.0 for t in thetas):
        print("error: every theta must lie in (0, 1]", file=sys.stderr)
        return EXIT_CONFIG
    loaded, problem, is_gallery, ops = _setup(args)
    ustar = _reference_solution(problem, ops, is_gallery)
    if ustar is None:
        print("error: the path command needs a problem with a reference solution", file=sys.stderr)
        return EXIT_FAILURE
    wstar = np.stack([ustar, ops.F(ustar)])
    anchor = wstar.copy() if args.start_at_solution else np.zeros_like(wstar)
    rhs = product_duality(ops, anchor)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["theta", "distance"])
    point = None
    try:
        for theta in thetas:
            t = 1.0 / theta
            point = product_solve(ops, rhs, t, ResolventConfig(t), "auto", point)
            diff = point - wstar
            w = ops.weights
            distance = (weighted_norm(diff[0], w, ops.p) ** ops.p + weighted_norm(diff[1], w, ops.q) ** ops.p) ** (1.0 / ops.p)
            writer.writerow([_fmt(theta), _fmt(float(distance))])
    except (ResolventError, NoRootError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if args.output:
        _write(args.output, buffer.getvalue())
    else:
        sys.stdout.write(buffer.getvalue())
    return EXIT_OK


def cmd_probe(args) -> int:
    loaded = load_config(args.config)
    problem, _ = build_problem(loaded)
    grid = build_grid(loaded, problem)
    from .operators import DiscretizedOperators

    ops = DiscretizedOperators(problem.nonlinearity, problem.kernel, grid, problem.p, check_claims=False)
    seed = int(loaded.data["seed"]) if args.seed is None else args.seed
    reports = {
        which: monotonicity_probe(ops, which, samples=args.samples, radius=args.radius, seed=seed, n_jobs=thread_count()).to_dict()
        for which in ("F", "K", "A")
    }
    print(json.dumps(reports, indent=2))
    return EXIT_OK


def cmd_gallery(args) -> int:
    entries = [
        {"name": g.name, "p": g.p, "nonlinearity": g.nonlinearity.name, "kernel": g.kernel.name,
         "closed_form": g.known_solution is not None, "strongly_monotone": g.strongly_monotone, "notes": g.notes}
        for g in gallery()
    ]
    if args.json:
        print(json.dumps(entries, indent=2))
    else:
        for e in entries:
            print(f"{e['name']:20s} p={e['p']:<4g} f={e['nonlinearity']:<16s} k={e['kernel']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hkit", description="Hammerstein equation iteration toolkit.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="increase log verbosity")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the coupled iteration from a JSON config")
    p_run.add_argument("config", help="path to the run configuration")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate-schedule", help="validate a power schedule")
    p_val.add_argument("--a", type=float, required=True, help="step-size exponent")
    p_val.add_argument("--b", type=float, required=True, help="regularization exponent")
    p_val.add_argument("--horizon", type=int, default=10**6, help="validation horizon (>= 1000)")
    p_val.set_defaults(func=cmd_validate_schedule)

    p_path = sub.add_parser("path", help="distance of regularization-path points to the solution")
    p_path.add_argument("config", help="path to the run configuration")
    p_path.add_argument("--theta", type=float, nargs="*", default=None, help="theta values in (0, 1]")
    p_path.add_argument("--start-at-solution", action="store_true", help="anchor the path at the solution")
    p_path.add_argument("--output", help="CSV destination (default: stdout)")
    p_path.set_defaults(func=cmd_path)

    p_probe = sub.add_parser("probe", help="sample monotonicity of F, K and A")
    p_probe.add_argument("config", help="path to the run configuration")
    p_probe.add_argument("--samples", type=int, default=1000)
    p_probe.add_argument("--radius", type=float, default=1.0)
    p_probe.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p_probe.set_defaults(func=cmd_probe)

    p_gal = sub.add_parser("gallery", help="list built-in problems")
    p_gal.add_argument("--json", action="store_true", help="emit JSON")
    p_gal.set_defaults(func=cmd_gallery)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
