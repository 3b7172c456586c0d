"""Coupled primal-dual iteration for ``u + KFu = 0``.

One step maps ``(u_n, v_n)`` in ``W = E x E*`` to::

    u_{n+1} = J_q(J_p u_n - lam_n (F u_n - v_n + theta_n (J_p u_n - J_p u_1)))
    v_{n+1} = J_p(J_q v_n - lam_n (K v_n + u_n + theta_n (J_q v_n - J_q v_1)))

where ``(u_1, v_1)`` is both the starting point and the anchor of the
regularization terms. :func:`step_chidume_idu` is the Hilbert-space form
with the regularization term distributed; at ``p = 2`` it agrees with
:func:`step` up to rounding.

:func:`run` iterates until the Hammerstein residual ``||u_n + K F u_n||_p``
drops below ``residual_tol`` or ``max_iter`` is reached.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .exceptions import (
    DivergenceError,
    EvaluationError,
    InvalidConfigError,
    InvalidScheduleError,
    ProbeRejectedError,
    ResolventError,
    VariantMisuseError,
)
from .lp_space import GridFunction, ProductPoint, Side, gauge_power, weighted_norm
from .lyapunov import lyapunov_values
from .operators import DiscretizedOperators, monotonicity_probe
from .resolvent import ResolventConfig, product_duality, product_solve
from .schedules import PowerSchedule, validate
from .validation import check_count, check_exponent, check_positive

logger = logging.getLogger(__name__)

VARIANTS = ("general_p", "chidume_idu_p2")
TERMINATIONS = ("converged", "max_iter")
PROBE_SAMPLES = 256
BOUNDEDNESS_FACTOR = 10.0


@dataclass(frozen=True)
class SolverConfig:
    """Run controls.

    Parameters
    ----------
    p : float
        Exponent of ``E = L^p``.
    schedule : PowerSchedule or TabulatedSchedule
    max_iter : int
        Largest iteration index ``n`` reached before stopping.
    residual_tol : float
        Stop once ``||u_n + K F u_n||_p <= residual_tol``.
    variant : {"general_p", "chidume_idu_p2"}
    record_every : int
        Trace stride; the first and last records are always kept.
    """

    p: float = 2.0
    schedule: object = field(default_factory=PowerSchedule)
    max_iter: int = 100_000
    residual_tol: float = 1e-3
    variant: str = "general_p"
    record_every: int = 100

    def __post_init__(self):
        object.__setattr__(self, "p", check_exponent(self.p))
        check_count(self.max_iter, "max_iter")
        check_count(self.record_every, "record_every")
        check_positive(self.residual_tol, "residual_tol")
        if self.variant not in VARIANTS:
            raise InvalidConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "chidume_idu_p2" and self.p != 2.0:
            raise VariantMisuseError(f"variant chidume_idu_p2 requires p = 2, got p = {self.p}")


@dataclass(frozen=True)
class IterationState:
    """Iterate ``(u_n, v_n)`` at index ``n`` together with the anchors ``(u_1, v_1)``."""

    n: int
    u: GridFunction
    v: GridFunction
    u1: GridFunction
    v1: GridFunction

    def __post_init__(self):
        for f, side in ((self.u, Side.PRIMAL), (self.u1, Side.PRIMAL), (self.v, Side.DUAL), (self.v1, Side.DUAL)):
            if f.side is not side:
                raise InvalidConfigError("state components are on the wrong side")
        if self.n < 1:
            raise InvalidConfigError("iteration indices start at 1")

    @classmethod
    def initial(cls, ops: DiscretizedOperators, u1=None, v1=None) -> "IterationState":
        """State at ``n = 1``; missing anchors default to zero."""
        u1 = ops.primal(0.0 if u1 is None else u1)
        v1 = ops.dual(0.0 if v1 is None else v1)
        return cls(1, u1, v1, u1, v1)

    @property
    def point(self) -> ProductPoint:
        return ProductPoint(self.u, self.v)


@dataclass(frozen=True)
class TraceRecord:
    n: int
    residual_norm: float
    err_u: Optional[float] = None
    phi_u: Optional[float] = None
    wedge_to_path: Optional[float] = None
    lambda_n: Optional[float] = None
    theta_n: Optional[float] = None


@dataclass
class RunResult:
    state: IterationState
    trace: list
    termination: str
    max_product_norm: float
    bound_exceeded: bool = False

    @property
    def iterations(self) -> int:
        return self.state.n

    @property
    def final(self) -> TraceRecord:
        return self.trace[-1]


# --------------------------------------------------------------------------
# steps
# --------------------------------------------------------------------------


def step_arrays(ops, u, v, u1, v1, lam, theta, fu=None, ju1=None, jv1=None):
    """One general step on raw value arrays; returns ``(u_next, v_next)``.

    ``fu = F(u)``, ``ju1 = J_p u1`` and ``jv1 = J_q v1`` may be passed in when
    the caller already has them.
    """
    p, q = ops.p, ops.q
    fu = ops.F(u) if fu is None else fu
    ju1 = gauge_power(u1, p) if ju1 is None else ju1
    jv1 = gauge_power(v1, q) if jv1 is None else jv1
    ju, jv = gauge_power(u, p), gauge_power(v, q)
    u_next = gauge_power(ju - lam * (fu - v + theta * (ju - ju1)), q)
    v_next = gauge_power(jv - lam * (ops.K(v) + u + theta * (jv - jv1)), p)
    return u_next, v_next


def step_chidume_idu_arrays(ops, u, v, x1, y1, lam, theta, fu=None, ju1=None, jv1=None):
    """Hilbert-space step with the normalized duality map and distributed ``lam``."""
    if ops.p != 2.0:
        raise VariantMisuseError(f"the Hilbert-space variant needs p = 2, got p = {ops.p}")
    fu = ops.F(u) if fu is None else fu
    jx1 = gauge_power(x1, 2.0) if ju1 is None else ju1
    jy1 = gauge_power(y1, 2.0) if jv1 is None else jv1
    ju, jv = gauge_power(u, 2.0), gauge_power(v, 2.0)
    u_next = gauge_power(ju - lam * (fu - v) - lam * theta * (ju - jx1), 2.0)
    v_next = gauge_power(jv - lam * (ops.K(v) + u) - lam * theta * (jv - jy1), 2.0)
    return u_next, v_next


def _advance(state, ops, config, stepper):
    if state.u.exponent != ops.p or state.u.grid != ops.grid:
        raise InvalidConfigError("state does not match the operators' grid and exponent")
    lam = config.schedule.lambda_at(state.n)
    theta = config.schedule.theta_at(state.n)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            u, v = stepper(ops, state.u.values, state.v.values, state.u1.values, state.v1.values, lam, theta)
    except EvaluationError as exc:
        raise DivergenceError(str(exc), state.n) from exc
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise DivergenceError(f"non-finite iterate after step {state.n}", state.n)
    return replace(state, n=state.n + 1, u=state.u.with_values(u), v=state.v.with_values(v))


def step(state: IterationState, config: SolverConfig, ops: DiscretizedOperators) -> IterationState:
    """Apply one general step."""
    return _advance(state, ops, config, step_arrays)


def step_chidume_idu(state: IterationState, config: SolverConfig, ops: DiscretizedOperators) -> IterationState:
    """Apply one Hilbert-space step; raises :class:`VariantMisuseError` unless ``p = 2``."""
    if config.p != 2.0 or ops.p != 2.0:
        raise VariantMisuseError("the Hilbert-space variant needs p = 2")
    return _advance(state, ops, config, step_chidume_idu_arrays)


# --------------------------------------------------------------------------
# diagnostics
# --------------------------------------------------------------------------


def _product_norm(ops, u, v) -> float:
    w = ops.weights
    return float((weighted_norm(u, w, ops.p) ** ops.p + weighted_norm(v, w, ops.q) ** ops.p) ** (1.0 / ops.p))


def _wedge(ops, x, u, v) -> float:
    w = ops.weights
    return float(lyapunov_values(x[0], u, w, ops.p) + lyapunov_values(x[1], v, w, ops.q))


def diagnostics(
    ops: DiscretizedOperators,
    state: IterationState,
    oracle_solution=None,
    path_point: ProductPoint | None = None,
    schedule=None,
) -> TraceRecord:
    """Trace quantities for ``state``.

    ``err_u`` and ``phi_u`` need ``oracle_solution`` (``phi_u`` only for
    ``p <= 2``, where the functional is defined); ``wedge_to_path`` needs the
    path point ``x_{n-1}``.
    """
    u, v = state.u.values, state.v.values
    w = ops.weights
    residual = float(weighted_norm(ops.residual(u), w, ops.p))
    err_u = phi_u = wedge = None
    if oracle_solution is not None:
        ustar = np.asarray(getattr(oracle_solution, "values", oracle_solution), dtype=float)
        err_u = float(weighted_norm(u - ustar, w, ops.p))
        if ops.p <= 2.0:
            phi_u = float(lyapunov_values(ustar, u, w, ops.p))
    if path_point is not None:
        x = np.stack([path_point.u.values, path_point.v.values])
        wedge = _wedge(ops, x, u, v)
    lam = theta = None
    if schedule is not None:
        lam, theta = schedule.lambda_at(state.n), schedule.theta_at(state.n)
    return TraceRecord(state.n, residual, err_u, phi_u, wedge, lam, theta)


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------


def check_problem(ops: DiscretizedOperators, seed: int = 0, samples: int = PROBE_SAMPLES):
    """Reject operators whose monotonicity is refuted by random sampling."""
    for which in ("F", "K"):
        report = monotonicity_probe(ops, which, samples=samples, radius=1.0, seed=seed)
        if report.violations:
            raise ProbeRejectedError(
                f"{which} failed the monotonicity probe ({report.violations} of {samples} pairs)", report
            )


def run(
    ops: DiscretizedOperators,
    config: SolverConfig,
    u1=None,
    v1=None,
    oracle_solution=None,
    record_at: Sequence[int] | None = None,
    track_path: bool = False,
    probe: bool = True,
    seed: int = 0,
) -> RunResult:
    """Iterate from ``(u1, v1)`` until convergence or ``max_iter``.

    Parameters
    ----------
    ops : DiscretizedOperators
    config : SolverConfig
    u1, v1 : array_like, optional
        Starting point and anchor; both default to zero.
    oracle_solution : array_like or GridFunction, optional
        Reference solution for ``err_u`` and ``phi_u``.
    record_at : sequence of int, optional
        Extra indices recorded in addition to the ``record_every`` stride.
    track_path : bool
        Compute ``wedge_to_path`` at recorded indices ``n >= 2`` (one
        product-resolvent solve per record).
    probe : bool
        Run the monotonicity probe first.
    seed : int
        Seed of the probe.

    Returns
    -------
    RunResult

    Raises
    ------
    InvalidScheduleError
        If the schedule fails validation.
    ProbeRejectedError
        If ``F`` or ``K`` is refuted as monotone.
    DivergenceError
        On non-finite iterates; carries the index and the partial trace.
    """
    if ops.p != config.p:
        raise InvalidConfigError(f"operators use p={ops.p} but the config has p={config.p}")
    report = validate(config.schedule, horizon=max(1000, config.max_iter))
    if not report.passed:
        raise InvalidScheduleError(f"schedule failed validation: {report.failures}")
    if probe:
        check_problem(ops, seed)

    state = IterationState.initial(ops, u1, v1)
    u, v = state.u.values.copy(), state.v.values.copy()
    anchor_u, anchor_v = state.u1.values, state.v1.values
    anchor = np.stack([anchor_u, anchor_v])
    stepper = step_chidume_idu_arrays if config.variant == "chidume_idu_p2" else step_arrays
    indices = np.arange(1, config.max_iter + 1)
    lambdas = config.schedule.lambdas(indices)
    thetas = config.schedule.thetas(indices)
    extra = set(record_at or ())
    weights, p = ops.weights, ops.p
    ustar = None
    if oracle_solution is not None:
        ustar = np.asarray(getattr(oracle_solution, "values", oracle_solution), dtype=float)

    w1_norm = _product_norm(ops, anchor_u, anchor_v)
    max_norm = w1_norm
    trace: list = []
    path_cache = {"theta": None, "point": None}

    def path_point(theta):
        start = path_cache["point"]
        point = product_solve(ops, product_duality(ops, anchor), 1.0 / theta, ResolventConfig(1.0 / theta), "auto", start)
        path_cache["point"] = point
        return point

    def record(n, u, v, residual):
        lam, theta = float(lambdas[n - 1]), float(thetas[n - 1])
        err = phi = wedge = None
        if ustar is not None:
            err = float(weighted_norm(u - ustar, weights, p))
            if p <= 2.0:
                phi = float(lyapunov_values(ustar, u, weights, p))
        if track_path and n >= 2:
            try:
                wedge = _wedge(ops, path_point(float(thetas[n - 2])), u, v)
            except ResolventError as exc:
                logger.warning("path point at n=%d failed: %s", n, exc)
        trace.append(TraceRecord(n, residual, err, phi, wedge, lam, theta))

    ju1, jv1 = gauge_power(anchor_u, p), gauge_power(anchor_v, ops.q)
    n = 1
    termination = "max_iter"
    while True:
        try:
            fu = ops.F(u)
            with np.errstate(over="ignore", invalid="ignore"):
                residual = float(weighted_norm(u + ops.K(fu), weights, p))
        except EvaluationError as exc:
            raise DivergenceError(str(exc), n, trace) from exc
        if not math.isfinite(residual):
            raise DivergenceError(f"non-finite residual at n={n}", n, trace)
        done = residual <= config.residual_tol
        if done or n >= config.max_iter or n == 1 or n % config.record_every == 0 or n in extra:
            record(n, u, v, residual)
        if done:
            termination = "converged"
            break
        if n >= config.max_iter:
            break
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                u, v = stepper(ops, u, v, anchor_u, anchor_v, lambdas[n - 1], thetas[n - 1], fu, ju1, jv1)
        except EvaluationError as exc:
            raise DivergenceError(str(exc), n, trace) from exc
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise DivergenceError(f"non-finite iterate after step {n}", n, trace)
        n += 1
        norm = _product_norm(ops, u, v)
        if norm > max_norm:
            max_norm = norm

    bound = None
    exceeded = False
    if ustar is not None:
        vstar = ops.F(ustar)
        bound = BOUNDEDNESS_FACTOR * (w1_norm + _product_norm(ops, ustar, vstar) + 1.0)
        exceeded = max_norm > bound
        if exceeded:
            logger.warning("iterates left the empirical bound: max |w_n| = %.3e > %.3e", max_norm, bound)

    final = IterationState(n, state.u.with_values(u), state.v.with_values(v), state.u1, state.v1)
    logger.info("run finished: %s after n=%d, residual %.3e", termination, n, trace[-1].residual_norm)
    return RunResult(final, trace, termination, max_norm, exceeded)
