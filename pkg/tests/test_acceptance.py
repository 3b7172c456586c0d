"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines appear in the
"acceptance criteria" summary section) or directly with
``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np
from hkit.exceptions import InvalidScheduleError
from hkit.lp_space import (
    GridFunction,
    ProductPoint,
    QuadratureGrid,
    conjugate,
    gauge_power,
    weighted_norm,
    weighted_pairing,
)
from hkit.lyapunov import (
    LyapunovConfig,
    norm_lower_bound_gap,
    phi_bounds_gaps,
    three_point_gap,
    vp_identity_gap,
    vp_perturbation_gap,
)
from hkit.oracle import get_problem
from hkit.resolvent import (
    ResolventConfig,
    integral_solve,
    nemytskii_solve,
    newton_product_solve,
    path_residuals,
    product_duality,
    product_solve,
    regularization_path,
    resolvent_extend,
    resolvent_product,
)
from hkit.schedules import FAIL_RATIO, WARN_SUM_LAMBDA, PowerSchedule, validate
from hkit.solver import SolverConfig, run, step_arrays, step_chidume_idu_arrays

SLACK = 1e-9


def _line(number, passed, detail, elapsed):
    return f"criterion {number}: {'PASS' if passed else 'FAIL'} ({elapsed:.2f}s) {detail}"


# --------------------------------------------------------------------------
# 1. duality machinery
# --------------------------------------------------------------------------


def criterion_1():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    grid = QuadratureGrid.trapezoid(64)
    w = grid.weights
    worst_trip = worst_pair = 0.0
    worst_mono = np.inf
    for p in (1.5, 2.0, 3.0):
        q = conjugate(p)
        u = rng.standard_normal((1000, 64)) * rng.lognormal(0.0, 1.0, (1000, 1))
        y = rng.standard_normal((1000, 64)) * rng.lognormal(0.0, 1.0, (1000, 1))
        back = gauge_power(gauge_power(u, p), q)
        trip = weighted_norm(back - u, w, p) / weighted_norm(u, w, p)
        pair = np.abs(weighted_pairing(gauge_power(u, p), u, w) / weighted_norm(u, w, p) ** p - 1.0)
        mono = weighted_pairing(gauge_power(u, p) - gauge_power(y, p), u - y, w)
        worst_trip = max(worst_trip, float(trip.max()))
        worst_pair = max(worst_pair, float(pair.max()))
        worst_mono = min(worst_mono, float(mono.min()))
    elapsed = time.perf_counter() - start
    passed = worst_trip <= 1e-10 and worst_pair <= 1e-10 and worst_mono >= -1e-12 and elapsed < 1.0
    detail = f"round trip {worst_trip:.1e}, pairing {worst_pair:.1e}, min monotone {worst_mono:.2e}"
    return passed, detail, elapsed


# --------------------------------------------------------------------------
# 2. Lyapunov inequality suite
# --------------------------------------------------------------------------


def _lyapunov_instances(p, rng, count=1000, n=16):
    grid = QuadratureGrid.trapezoid(n)
    for _ in range(count):
        scales = rng.lognormal(0.0, 1.0, 5)
        x, y, z = (GridFunction.primal(grid, rng.standard_normal(n) * s, p) for s in scales[:3])
        xs, ys = (GridFunction.dual(grid, rng.standard_normal(n) * s, p) for s in scales[3:])
        yield x, y, z, xs, ys


def lyapunov_worst_gaps(p, seed=2, count=1000):
    """Smallest margin of each inequality over ``count`` random instances."""
    cfg = LyapunovConfig(p)
    rng = np.random.default_rng(seed)
    worst = {"bounds": np.inf, "identity": np.inf, "perturbation": np.inf, "norm_lower_bound": np.inf, "three_point": np.inf}
    for x, y, z, xs, ys in _lyapunov_instances(p, rng, count):
        lower, upper = phi_bounds_gaps(x, y, cfg)
        worst["bounds"] = min(worst["bounds"], lower, upper)
        worst["identity"] = min(worst["identity"], -abs(vp_identity_gap(x, xs, cfg)))
        worst["perturbation"] = min(worst["perturbation"], vp_perturbation_gap(x, xs, ys, cfg))
        d = max(float(weighted_norm(x.values, x.grid.weights, p)), float(weighted_norm(y.values, y.grid.weights, p)))
        worst["norm_lower_bound"] = min(worst["norm_lower_bound"], norm_lower_bound_gap(x, y, d, cfg))
        worst["three_point"] = min(worst["three_point"], three_point_gap(x, y, z, cfg))
    return worst


def criterion_2():
    start = time.perf_counter()
    results = {p: lyapunov_worst_gaps(p) for p in (1.5, 2.0)}
    elapsed = time.perf_counter() - start
    failing = [f"{name}@p={p:g} ({gap:.2e})" for p, worst in results.items() for name, gap in worst.items() if gap < -SLACK]
    passed = not failing and elapsed < 5.0
    detail = "all inequalities hold" if not failing else "violated: " + ", ".join(failing)
    return passed, detail, elapsed


# --------------------------------------------------------------------------
# 3. resolvent contracts
# --------------------------------------------------------------------------


def _flavor_samples(ops, flavor, rng, count):
    n = ops.size
    shape = (count, 2, n) if flavor == "product" else (count, n)
    return rng.standard_normal(shape), rng.standard_normal(shape)


def _flavor_tools(ops, flavor):
    """Return ``(duality, resolvent(x, t), norm)`` on arrays for a flavor."""
    p, q, w = ops.p, ops.q, ops.weights
    if flavor == "nemytskii":
        return (lambda x: gauge_power(x, p)), (lambda x, t: nemytskii_solve(ops, gauge_power(x, p), t)), (lambda x: weighted_norm(x, w, p))
    if flavor == "integral":
        return (lambda x: gauge_power(x, q)), (lambda x, t: integral_solve(ops, gauge_power(x, q), t)), (lambda x: weighted_norm(x, w, q))

    def norm(z):
        return (weighted_norm(z[..., 0, :], w, p) ** p + weighted_norm(z[..., 1, :], w, q) ** p) ** (1.0 / p)

    return (lambda z: product_duality(ops, z)), (lambda z, t: product_solve(ops, product_duality(ops, z), t)), norm


def _pair(a, b, w, product):
    if product:
        return weighted_pairing(a[..., 0, :], b[..., 0, :], w) + weighted_pairing(a[..., 1, :], b[..., 1, :], w)
    return weighted_pairing(a, b, w)


def resolvent_contract_margins(p, flavor, t, count=500, seed=3):
    """Worst margins of nonexpansiveness and the firmly-nonexpansive-type inequality."""
    ops = get_problem("cubic-green").discretize(p=p)
    rng = np.random.default_rng(seed)
    x, y = _flavor_samples(ops, flavor, rng, count)
    duality, resolvent, norm = _flavor_tools(ops, flavor)
    rx, ry = resolvent(x, t), resolvent(y, t)
    nonexp = norm(x - y) - norm(rx - ry)
    product = flavor == "product"
    lhs = _pair(duality(rx) - duality(ry), rx - ry, ops.weights, product)
    rhs = _pair(duality(x) - duality(y), rx - ry, ops.weights, product)
    return float(nonexp.min()), float((rhs - lhs).min())


def extension_mismatch(seed=4, count=20):
    """Largest gap between extension-based and direct solves at p = 2."""
    ops = get_problem("cubic-green").discretize()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in (1.0, 10.0):
        z = rng.standard_normal((count, 2, ops.size))
        rhs = product_duality(ops, z)
        via_extension = product_solve(ops, rhs, t, ResolventConfig(t), method="contraction")
        direct = newton_product_solve(ops, rhs, t, ResolventConfig(t))
        worst = max(worst, float(np.max(np.abs(via_extension - direct))))
        b = gauge_power(rng.standard_normal((count, ops.size)), 2.0)
        ext = resolvent_extend(lambda rhs_, start=None: nemytskii_solve(ops, rhs_, 0.5), b, t, 0.5, lambda x: gauge_power(x, 2.0))
        worst = max(worst, float(np.max(np.abs(ext - nemytskii_solve(ops, b, t)))))
        ext = resolvent_extend(lambda rhs_, start=None: integral_solve(ops, rhs_, 0.5), b, t, 0.5, lambda x: gauge_power(x, 2.0))
        worst = max(worst, float(np.max(np.abs(ext - integral_solve(ops, b, t)))))
    return worst


def zero_fixed_mismatch():
    worst = 0.0
    for name in ("linear-affine", "cubic-green"):
        problem = get_problem(name)
        ops = problem.discretize()
        ustar = problem.solution(ops.grid)
        wstar = ProductPoint(ustar, ops.dual(ops.F(ustar.values)))
        for t in (0.1, 1.0, 10.0):
            z = resolvent_product(ops, wstar, ResolventConfig(t))
            worst = max(worst, float(np.max(np.abs(z.u.values - wstar.u.values))), float(np.max(np.abs(z.v.values - wstar.v.values))))
    return worst


def criterion_3():
    start = time.perf_counter()
    failures, notes = [], []
    for flavor in ("nemytskii", "integral", "product"):
        for t in (0.1, 1.0, 10.0):
            nonexp, firm = resolvent_contract_margins(2.0, flavor, t)
            if nonexp < -SLACK:
                failures.append(f"nonexpansive {flavor} t={t:g} ({nonexp:.1e})")
            if firm < -SLACK:
                failures.append(f"firm {flavor} t={t:g} ({firm:.1e})")
            for p in (1.5, 3.0):
                nonexp_p, firm_p = resolvent_contract_margins(p, flavor, t, count=100)
                if firm_p < -SLACK:
                    failures.append(f"firm {flavor} p={p:g} t={t:g} ({firm_p:.1e})")
                if nonexp_p < -SLACK:
                    notes.append(f"{flavor}@p={p:g},t={t:g}")
    ext = extension_mismatch()
    if ext > 1e-8:
        failures.append(f"extension mismatch {ext:.1e}")
    zero = zero_fixed_mismatch()
    if zero > 1e-10:
        failures.append(f"zero not fixed ({zero:.1e})")
    elapsed = time.perf_counter() - start
    if elapsed >= 10.0:
        failures.append("runtime")
    detail = f"extension gap {ext:.1e}, zero gap {zero:.1e}"
    if notes:
        detail += "; nonexpansiveness off p=2 fails (informational): " + ", ".join(notes)
    if failures:
        detail += "; violated: " + ", ".join(failures)
    return not failures, detail, elapsed


# --------------------------------------------------------------------------
# 4. regularization path
# --------------------------------------------------------------------------


def criterion_4():
    start = time.perf_counter()
    problem = get_problem("linear-affine")
    ops = problem.discretize()
    ustar = problem.solution(ops.grid).values
    wstar = np.stack([ustar, ops.F(ustar)])
    w1 = ProductPoint(ops.primal(0.0), ops.dual(0.0))
    p, q, w = ops.p, ops.q, ops.weights
    distances, worst_residual = [], 0.0
    for k in range(1, 7):
        theta = 10.0 ** (-k)
        x = regularization_path(ops, w1, theta)
        worst_residual = max(worst_residual, *path_residuals(ops, x, w1, theta))
        diff = np.stack([x.u.values, x.v.values]) - wstar
        distances.append(float((weighted_norm(diff[0], w, p) ** p + weighted_norm(diff[1], w, q) ** p) ** (1 / p)))
    elapsed = time.perf_counter() - start
    decreasing = all(b < a for a, b in zip(distances, distances[1:]))
    passed = decreasing and distances[-1] <= 1e-3 and worst_residual <= 1e-8 and elapsed < 5.0
    detail = "distances " + ", ".join(f"{d:.2e}" for d in distances) + f"; optimality residual {worst_residual:.1e}"
    return passed, detail, elapsed


# --------------------------------------------------------------------------
# 5. main convergence
# --------------------------------------------------------------------------


def _long_run(name, a=0.6, b=0.3):
    problem = get_problem(name)
    ops = problem.discretize()
    ustar = problem.solution(ops.grid).values
    config = SolverConfig(2.0, PowerSchedule(a, b), 100_000, 1e-12, record_every=10**9)
    start = time.perf_counter()
    result = run(ops, config, oracle_solution=ustar, record_at=[100])
    elapsed = time.perf_counter() - start
    at = {rec.n: rec for rec in result.trace}
    return at, elapsed


def criterion_5_linear():
    at, elapsed = _long_run("linear-affine")
    err100, err_final = at[100].err_u, at[100_000].err_u
    passed = err_final <= 1e-3 and err_final <= err100 / 10.0 and elapsed < 30.0
    return passed, f"linear-affine err_u(1e2)={err100:.3e}, err_u(1e5)={err_final:.3e}", elapsed


def criterion_5_cubic():
    at, elapsed = _long_run("cubic-green")
    final = at[100_000]
    passed = final.residual_norm <= 1e-2 and final.err_u <= 1e-2 and elapsed < 30.0
    return passed, f"cubic-green residual={final.residual_norm:.3e}, err={final.err_u:.3e}", elapsed


def criterion_5():
    ok1, d1, e1 = criterion_5_linear()
    ok2, d2, e2 = criterion_5_cubic()
    return ok1 and ok2, f"{d1} [{'ok' if ok1 else 'miss'}]; {d2} [{'ok' if ok2 else 'miss'}]", e1 + e2


# --------------------------------------------------------------------------
# 6. variant equivalence
# --------------------------------------------------------------------------


def criterion_6():
    start = time.perf_counter()
    ops = get_problem("cubic-green").discretize()
    rng = np.random.default_rng(6)
    schedule = PowerSchedule()
    worst_single = 0.0
    for _ in range(1000):
        u, v, u1, v1 = rng.standard_normal((4, ops.size))
        n = int(rng.integers(1, 10**5))
        lam, theta = schedule.lambda_at(n), schedule.theta_at(n)
        a = step_arrays(ops, u, v, u1, v1, lam, theta)
        b = step_chidume_idu_arrays(ops, u, v, u1, v1, lam, theta)
        worst_single = max(worst_single, float(np.max(np.abs(np.subtract(a, b)))))
    u1 = v1 = np.zeros(ops.size)
    states = [(u1, v1), (u1, v1)]
    for n in range(1, 1001):
        lam, theta = schedule.lambda_at(n), schedule.theta_at(n)
        states[0] = step_arrays(ops, *states[0], u1, v1, lam, theta)
        states[1] = step_chidume_idu_arrays(ops, *states[1], u1, v1, lam, theta)
    worst_chain = float(np.max(np.abs(np.subtract(states[0], states[1]))))
    elapsed = time.perf_counter() - start
    passed = worst_single <= 1e-12 and worst_chain <= 1e-10
    return passed, f"single-step gap {worst_single:.1e}, 1000-step gap {worst_chain:.1e}", elapsed


# --------------------------------------------------------------------------
# 7. schedule validator
# --------------------------------------------------------------------------


def criterion_7():
    start = time.perf_counter()
    good = validate(PowerSchedule(0.6, 0.3), 10**6)
    again = validate(PowerSchedule(0.6, 0.3), 10**6)
    try:
        PowerSchedule(0.5, 0.6)
        rejected = False
    except InvalidScheduleError:
        rejected = True
    flagged = validate(PowerSchedule(0.7, 0.4), 10**6)
    elapsed = time.perf_counter() - start
    passed = (
        good.passed and WARN_SUM_LAMBDA in good.flags and rejected
        and FAIL_RATIO in flagged.flags and not flagged.passed
        and good.to_dict() == again.to_dict()
    )
    detail = (
        f"(0.6,0.3) passed={good.passed} flags={list(good.flags)}; (0.5,0.6) rejected={rejected}; "
        f"(0.7,0.4) flags={list(flagged.flags)}"
    )
    return passed, detail, elapsed


# --------------------------------------------------------------------------
# 8. path tracking
# --------------------------------------------------------------------------


def criterion_8():
    start = time.perf_counter()
    ops = get_problem("linear-affine").discretize()
    config = SolverConfig(2.0, PowerSchedule(), 10_000, 1e-12, record_every=10**9)
    result = run(ops, config, record_at=[100], track_path=True)
    at = {rec.n: rec.wedge_to_path for rec in result.trace}
    elapsed = time.perf_counter() - start
    passed = at[10_000] < at[100]
    return passed, f"wedge(1e2)={at[100]:.3e}, wedge(1e4)={at[10_000]:.3e}", elapsed


# --------------------------------------------------------------------------
# 9. CLI determinism
# --------------------------------------------------------------------------


def criterion_9(workdir):
    start = time.perf_counter()
    outputs = []
    for k in range(2):
        config = {
            "problem": "cubic-green",
            "max_iter": 3000,
            "residual_tol": 1e-6,
            "record_every": 250,
            "track_path": True,
            "seed": 11,
            "output": {
                "trace_csv": os.path.join(workdir, f"trace{k}.csv"),
                "summary_json": os.path.join(workdir, f"summary{k}.json"),
            },
        }
        path = os.path.join(workdir, f"config{k}.json")
        with open(path, "w") as handle:
            json.dump(config, handle)
        proc = subprocess.run([sys.executable, "-m", "hkit.cli", "run", path], capture_output=True)
        with open(config["output"]["trace_csv"], "rb") as a, open(config["output"]["summary_json"], "rb") as b:
            outputs.append((proc.returncode, a.read(), b.read()))
    elapsed = time.perf_counter() - start
    same = outputs[0] == outputs[1]
    return same, f"exit codes {outputs[0][0]}/{outputs[1][0]}, byte-identical={same}", elapsed


# --------------------------------------------------------------------------
# pytest entry points
# --------------------------------------------------------------------------


def _check(number, outcome, log):
    passed, detail, elapsed = outcome
    line = _line(number, passed, detail, elapsed)
    log.append(line)
    print(line)
    assert passed, line


def test_criterion_1_duality(acceptance_log):
    _check(1, criterion_1(), acceptance_log)


def test_criterion_2_lyapunov_suite(acceptance_log):
    _check(2, criterion_2(), acceptance_log)


def test_criterion_3_resolvent_contracts(acceptance_log):
    _check(3, criterion_3(), acceptance_log)


def test_criterion_4_regularization_path(acceptance_log):
    _check(4, criterion_4(), acceptance_log)


def test_criterion_5_main_convergence(acceptance_log):
    _check(5, criterion_5(), acceptance_log)


def test_criterion_6_variant_equivalence(acceptance_log):
    _check(6, criterion_6(), acceptance_log)


def test_criterion_7_schedule_validator(acceptance_log):
    _check(7, criterion_7(), acceptance_log)


def test_criterion_8_path_tracking(acceptance_log):
    _check(8, criterion_8(), acceptance_log)


def test_criterion_9_cli_determinism(acceptance_log, tmp_path):
    _check(9, criterion_9(str(tmp_path)), acceptance_log)


if __name__ == "__main__":
    import tempfile

    runners = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]
    failed = 0
    for number, runner in enumerate(runners, start=1):
        passed, detail, elapsed = runner()
        failed += not passed
        print(_line(number, passed, detail, elapsed))
    with tempfile.TemporaryDirectory() as tmp:
        passed, detail, elapsed = criterion_9(tmp)
        failed += not passed
        print(_line(9, passed, detail, elapsed))
    sys.exit(1 if failed else 0)
