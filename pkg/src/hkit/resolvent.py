"""Resolvents ``(J + tA)^{-1} J`` of the Nemytskii, integral and product operators.

Every solver works on right-hand sides that already live on the dual side:

* :func:`nemytskii_solve` returns ``u`` with ``J_p u + t F u = b``,
* :func:`integral_solve` returns ``v`` with ``J_q v + t K v = b``,
* :func:`product_solve` returns ``z = (u, v)`` with ``J^W z + t A z = b``.

The resolvents themselves (:func:`resolvent_nemytskii`, :func:`resolvent_integral`,
:func:`resolvent_product`) first map their argument through the duality map.

Product points are handled as arrays of shape ``(..., 2, N)``: slot 0 holds
the ``E`` component and slot 1 the ``E*`` component. All array-level solvers
broadcast over leading batch axes.

The product resolvent has two algorithms. ``"contraction"`` iterates the
splitting map ``(u, v) -> (R_F(b1 + t v), R_K(b2 - t u))``, a contraction for
``t < 1``, at a base parameter ``t0 = 0.5`` and reaches larger ``t`` with
:func:`resolvent_extend`. ``"newton"`` runs damped Newton on the coupled
system directly and stays cheap for very large ``t``, which the
regularization path needs (``t = 1/theta``). For ``p != 2`` the splitting
map need not contract at all, so Newton is the default there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ContractionFactorError, DimensionError, NoRootError, ResolventError
from .lp_space import GridFunction, ProductPoint, Side, conjugate, gauge_power, gauge_power_derivative
from .validation import check_positive, check_side

BASE_T0 = 0.5
CASCADE_FACTOR = 1.9
MAX_BRACKET_DOUBLINGS = 200
STALL_PATIENCE = 10
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ResolventConfig:
    """Resolvent parameter ``t`` and inner-solver controls.

    Tolerances are relative: a solve stops when its residual is below
    ``inner_tol * max(1, |rhs|_inf)``.
    """

    t: float
    inner_tol: float = 1e-12
    max_inner_iter: int = 200

    def __post_init__(self):
        check_positive(self.t, "t")
        check_positive(self.inner_tol, "inner_tol")
        if int(self.max_inner_iter) < 1:
            raise ValueError("max_inner_iter must be >= 1")

    def with_t(self, t: float) -> "ResolventConfig":
        return ResolventConfig(t, self.inner_tol, self.max_inner_iter)


def _scale(values) -> float:
    values = np.asarray(values)
    return max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0


def _sup(values) -> float:
    return float(np.max(np.abs(values))) if np.size(values) else 0.0


# --------------------------------------------------------------------------
# scalar monotone equations
# --------------------------------------------------------------------------


def monotone_root(p, t, func, h, dfunc=None, tol=1e-12, max_iter=200) -> np.ndarray:
    """Solve ``|s|^(p-1) sgn(s) + t func(s) = h`` elementwise.

    ``func`` must act elementwise and make the left side nondecreasing.
    The bracket around the ``t = 0`` solution ``J_q h`` is widened by
    doubling; inside it, Newton steps are taken when ``dfunc`` is given and
    the step stays in the bracket, bisection otherwise.

    Raises
    ------
    NoRootError
        If some bracket cannot be closed within 200 doublings.
    """
    h = np.asarray(h, dtype=float)

    def g(s):
        with np.errstate(all="ignore"):
            return gauge_power(s, p) + t * func(s) - h

    s = gauge_power(h, conjugate(p))
    gs = g(s)
    if np.any(np.isnan(gs)):
        raise NoRootError("equation is not finite at the starting point")
    lo, hi = s.copy(), s.copy()
    for sign in (-1.0, 1.0):
        need = gs > 0 if sign < 0 else gs < 0
        width = np.maximum(1.0, np.abs(s))
        for _ in range(MAX_BRACKET_DOUBLINGS):
            if not need.any():
                break
            if sign < 0:
                hi = np.where(need, lo, hi)
                lo = np.where(need, lo - width, lo)
                value = g(lo)
                need = need & ~(value <= 0)
            else:
                lo = np.where(need, hi, lo)
                hi = np.where(need, hi + width, hi)
                value = g(hi)
                need = need & ~(value >= 0)
            if np.any(np.isnan(value) & need):
                raise NoRootError("equation became non-finite while bracketing")
            width = 2.0 * width
        else:
            raise NoRootError(
                f"no sign change after {MAX_BRACKET_DOUBLINGS} bracket doublings; "
                "the nonlinearity is not coercive"
            )

    threshold = tol * np.maximum(1.0, np.abs(h))
    previous = np.full(s.shape, np.inf)
    for _ in range(max(max_iter, 300)):
        gs = g(s)
        small = np.abs(gs) <= threshold
        collapsed = hi - lo <= 4.0 * _EPS * np.maximum(np.maximum(np.abs(lo), np.abs(hi)), 1e-300)
        if np.all(small | collapsed):
            return s
        lo = np.where(gs < 0, s, lo)
        hi = np.where(gs > 0, s, hi)
        candidate = 0.5 * (lo + hi)
        if dfunc is not None:
            with np.errstate(all="ignore"):
                slope = gauge_power_derivative(s, p) + t * dfunc(s)
                newton = s - gs / slope
            good = np.isfinite(newton) & (newton > lo) & (newton < hi) & (np.abs(gs) < 0.5 * previous)
            candidate = np.where(good, newton, candidate)
        previous = np.abs(gs)
        s = np.where(small | collapsed, s, candidate)
    raise ResolventError("monotone scalar solve did not converge")


def scalar_monotone_solve(
    p: float, t: float, f: Callable, h: float, df: Callable | None = None, tol: float = 1e-12
) -> float:
    """Root ``z`` of ``|z|^(p-1) sgn(z) + t f(z) = h`` for a nondecreasing scalar ``f``.

    Examples
    --------
    >>> round(scalar_monotone_solve(2.0, 1.0, lambda s: s, 2.0), 12)
    1.0
    """
    check_positive(t, "t")
    return float(monotone_root(p, t, f, np.asarray(float(h)), df, tol))


# --------------------------------------------------------------------------
# component solvers on arrays
# --------------------------------------------------------------------------


def _nemytskii_funcs(ops):
    f, df = ops.nonlinearity.f, ops.nonlinearity.df_ds
    nodes = ops.nodes

    def func(s):
        return np.broadcast_to(f(nodes, s), np.shape(s))

    if df is None:
        return func, None

    def dfunc(s):
        return np.broadcast_to(df(nodes, s), np.shape(s))

    return func, dfunc


def nemytskii_solve(ops, rhs, t: float, cfg: ResolventConfig | None = None) -> np.ndarray:
    """Values ``u`` with ``J_p u + t F u = rhs`` (componentwise scalar solves)."""
    cfg = cfg or ResolventConfig(t)
    func, dfunc = _nemytskii_funcs(ops)
    return monotone_root(ops.p, t, func, rhs, dfunc, cfg.inner_tol, cfg.max_inner_iter)


def _batched_newton(residual, jacobian, x0, tol, max_iter, what):
    """Damped Newton for a batch of systems with ``x`` of shape ``(B, n)``.

    ``residual(x, rows)`` and ``jacobian(x, rows)`` receive the batch rows
    being evaluated so that row-dependent right-hand sides can be selected.
    """
    x = np.array(x0, dtype=float)
    all_rows = np.arange(x.shape[0])
    r = residual(x, all_rows)
    norm = np.max(np.abs(r), axis=-1)
    for _ in range(max_iter):
        idx = np.flatnonzero(norm > tol)
        if idx.size == 0:
            return x
        jac = jacobian(x[idx], idx)
        try:
            step = np.linalg.solve(jac, r[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = (np.linalg.pinv(jac) @ r[idx][..., None])[..., 0]
        alpha = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        xi, ni = x[idx], norm[idx]
        for _ in range(50):
            trial = xi - alpha[:, None] * step
            with np.errstate(all="ignore"):
                rt = residual(trial, idx)
            nt = np.max(np.abs(rt), axis=-1)
            ok = pending & np.isfinite(nt) & (nt < ni)
            x[idx[ok]] = trial[ok]
            r[idx[ok]] = rt[ok]
            norm[idx[ok]] = nt[ok]
            pending &= ~ok
            if not pending.any():
                break
            alpha = np.where(pending, 0.5 * alpha, alpha)
        if pending.all():
            break
    if np.all(norm <= tol):
        return x
    raise ResolventError(
        f"{what}: Newton did not reach tolerance {tol:.1e} (worst residual {np.max(norm):.3e})"
    )


def integral_solve(ops, rhs, t: float, cfg: ResolventConfig | None = None) -> np.ndarray:
    """Values ``v`` with ``J_q v + t K v = rhs``.

    ``q = 2`` is a linear solve and identity-scaled kernels reduce to scalar
    equations. Otherwise damped Newton runs in whichever variable keeps the
    Jacobian finite: ``v`` itself when ``q > 2`` and ``z = J_q v`` when
    ``q < 2``.
    """
    cfg = cfg or ResolventConfig(t)
    p, q = ops.p, ops.q
    rhs = np.asarray(rhs, dtype=float)
    if ops.kernel.is_identity:
        c = ops.kernel.identity_scale
        return monotone_root(
            q, t, lambda s: c * s, rhs, lambda s: np.full(np.shape(s), c), cfg.inner_tol, cfg.max_inner_iter
        )
    M, n = ops.matrix, ops.size
    eye = np.eye(n)
    if q == 2.0:
        return np.linalg.solve(eye + t * M, rhs.reshape(-1, n).T).T.reshape(rhs.shape)
    flat = rhs.reshape(-1, n)
    tol = cfg.inner_tol * _scale(rhs)
    if q > 2.0:

        def residual(v, rows):
            return gauge_power(v, q) + t * v @ M.T - flat[rows]

        def jacobian(v, rows):
            return gauge_power_derivative(v, q)[:, :, None] * eye + t * M

        solution = _batched_newton(residual, jacobian, gauge_power(flat, p), tol, cfg.max_inner_iter, "integral resolvent")
    else:

        def residual(z, rows):
            return z + t * gauge_power(z, p) @ M.T - flat[rows]

        def jacobian(z, rows):
            return eye + t * M[None, :, :] * gauge_power_derivative(z, p)[:, None, :]

        z = _batched_newton(residual, jacobian, flat.copy(), tol, cfg.max_inner_iter, "integral resolvent")
        solution = gauge_power(z, p)
    return solution.reshape(rhs.shape)


# --------------------------------------------------------------------------
# product space
# --------------------------------------------------------------------------


def product_duality(ops, z) -> np.ndarray:
    """``J^W`` on stacked product arrays: ``(J_p u, J_q v)``."""
    z = np.asarray(z, dtype=float)
    return np.stack([gauge_power(z[..., 0, :], ops.p), gauge_power(z[..., 1, :], ops.q)], axis=-2)


def product_inverse_duality(ops, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    return np.stack([gauge_power(b[..., 0, :], ops.q), gauge_power(b[..., 1, :], ops.p)], axis=-2)


def product_apply(ops, z) -> np.ndarray:
    """``A(u, v) = (Fu - v, Kv + u)`` on stacked product arrays."""
    z = np.asarray(z, dtype=float)
    first, second = ops.A(z[..., 0, :], z[..., 1, :])
    return np.stack([first, second], axis=-2)


def product_equation_residual(ops, z, rhs, t) -> float:
    """Sup norm of ``J^W z + t A z - rhs``."""
    return _sup(product_duality(ops, z) + t * product_apply(ops, z) - rhs)


def splitting_solve(ops, rhs, t, cfg: ResolventConfig | None = None, start=None) -> np.ndarray:
    """Solve ``J^W z + t A z = rhs`` by iterating the splitting map (``t < 1``).

    With ``b = (b1, b2)`` the two equations decouple into
    ``u = R_F(b1 + t v)`` and ``v = R_K(b2 - t u)`` where ``R_F``, ``R_K``
    invert ``J_p + tF`` and ``J_q + tK``. For ``p = 2`` the map is a
    contraction with factor ``t``; for other exponents it can settle into a
    cycle, which ends in :class:`ResolventError`.

    Raises
    ------
    ResolventError
        On stalled progress or when ``max_inner_iter`` sweeps do not reach
        the tolerance.
    """
    cfg = cfg or ResolventConfig(t)
    if not t < 1.0:
        raise ContractionFactorError(f"the splitting map needs t < 1, got {t}")
    rhs = np.asarray(rhs, dtype=float)
    b1, b2 = rhs[..., 0, :], rhs[..., 1, :]
    z = product_inverse_duality(ops, rhs) if start is None else np.array(start, dtype=float)
    tol = cfg.inner_tol * _scale(rhs)
    previous, stalled = math.inf, 0
    for _ in range(cfg.max_inner_iter):
        u, v = z[..., 0, :], z[..., 1, :]
        new = np.stack(
            [nemytskii_solve(ops, b1 + t * v, t, cfg), integral_solve(ops, b2 - t * u, t, cfg)], axis=-2
        )
        step = _sup(new - z)
        z = new
        if step <= tol:
            return z
        stalled = stalled + 1 if step >= previous * (1.0 - 1e-16) else 0
        if stalled >= STALL_PATIENCE:
            raise ResolventError(f"splitting iteration stalled at step size {step:.3e}")
        previous = step
    raise ResolventError(f"splitting iteration did not converge in {cfg.max_inner_iter} sweeps")


def resolvent_extend(solve_at_t0, rhs, t, t0, duality, cfg: ResolventConfig | None = None, start=None):
    """Solve ``J x + t A x = rhs`` given a solver for parameter ``t0``.

    Iterates ``x <- S_t0((t0/t) rhs + (1 - t0/t) J x)``, where
    ``S_t0(b, start)`` returns the solution of ``J x + t0 A x = b``. In the
    Hilbert case the map contracts with factor ``|1 - t0/t|``.

    Parameters
    ----------
    solve_at_t0 : callable ``(b, start) -> x``
    rhs : ndarray
        Dual-side right-hand side.
    t, t0 : float
    duality : callable
        The duality map ``J`` on points.
    cfg : ResolventConfig, optional
        Supplies the tolerance; the iteration cap is derived from the
        contraction factor.
    start : ndarray, optional
        Initial guess.

    Raises
    ------
    ContractionFactorError
        If ``t <= t0/2``.
    ResolventError
        If the iteration stalls or exhausts its budget.
    """
    cfg = cfg or ResolventConfig(t)
    if t <= t0 / 2.0:
        raise ContractionFactorError(f"extension needs t > t0/2 (t={t}, t0={t0})")
    if t == t0:
        return solve_at_t0(rhs, start)
    rhs = np.asarray(rhs, dtype=float)
    ratio = t0 / t
    factor = abs(1.0 - ratio)
    budget = cfg.max_inner_iter + int(math.ceil(2.0 * math.log(cfg.inner_tol) / math.log(factor)))
    x = solve_at_t0(rhs, start)
    tol = cfg.inner_tol * _scale(rhs)
    previous, stalled = math.inf, 0
    for _ in range(budget):
        new = solve_at_t0(ratio * rhs + (1.0 - ratio) * duality(x), x)
        step = _sup(new - x)
        x = new
        if step <= tol:
            return x
        stalled = stalled + 1 if step >= previous * (1.0 - 1e-16) else 0
        if stalled >= STALL_PATIENCE:
            raise ResolventError(f"extension iteration stalled at step size {step:.3e}")
        previous = step
    raise ResolventError(f"extension iteration did not converge in {budget} steps")


def resolvent_cascade(solve_at_t0, rhs, t, t0, duality, cfg: ResolventConfig | None = None, factor=CASCADE_FACTOR):
    """Reach any ``t > 0`` from ``t0`` through a chain of extensions.

    Parameters move by ``factor < 2`` per level, so every link satisfies the
    ``t > t0/2`` requirement of :func:`resolvent_extend`. Each level calls the
    previous one as its inner solver, so cost grows geometrically with depth.
    """
    if not 1.0 < factor < 2.0:
        raise ValueError(f"cascade factor must lie in (1, 2), got {factor}")
    levels, current = [], t0
    if t >= t0:
        while current * factor < t:
            current *= factor
            levels.append(current)
    else:
        while current / factor > t:
            current /= factor
            levels.append(current)
    levels.append(t)

    solver, base = solve_at_t0, t0
    for level in levels:
        if level == base:
            continue
        solver = _extension(solver, level, base, duality, cfg)
        base = level
    return solver(np.asarray(rhs, dtype=float), None)


def _extension(inner, t, t0, duality, cfg):
    def solve(b, start=None):
        return resolvent_extend(inner, b, t, t0, duality, cfg, start)

    return solve


def newton_product_solve(ops, rhs, t, cfg: ResolventConfig | None = None, start=None) -> np.ndarray:
    """Solve ``J^W z + t A z = rhs`` by damped Newton on the coupled system.

    Each slot is solved in the variable that keeps its duality map smooth:
    for ``p <= 2`` the unknowns are ``(J_p u, v)``, for ``p > 2`` they are
    ``(u, J_q v)``. Equations are divided by ``1 + t`` so the stopping test
    stays meaningful for large ``t``. Needs ``df_ds``; a central difference
    is used when it is missing.
    """
    cfg = cfg or ResolventConfig(t)
    p, q, n = ops.p, ops.q, ops.size
    rhs = np.asarray(rhs, dtype=float)
    flat = rhs.reshape(-1, 2, n)
    M = ops.K(np.eye(n)).T  # column j is K e_j
    eye = np.eye(n)
    scale = 1.0 + t
    func, dfunc = _nemytskii_funcs(ops)
    if dfunc is None:

        def dfunc(s):
            h = 1e-6 * np.maximum(1.0, np.abs(s))
            return (func(s + h) - func(s - h)) / (2.0 * h)

    init = product_inverse_duality(ops, flat) if start is None else np.array(start, dtype=float).reshape(-1, 2, n)
    if p <= 2.0:
        x0 = np.concatenate([gauge_power(init[:, 0], p), init[:, 1]], axis=-1)

        def unpack(x):
            a, v = x[:, :n], x[:, n:]
            return gauge_power(a, q), v, a

        def residual(x, rows):
            u, v, a = unpack(x)
            b = flat[rows]
            r1 = a + t * (func(u) - v) - b[:, 0]
            r2 = gauge_power(v, q) + t * (v @ M.T + u) - b[:, 1]
            return np.concatenate([r1, r2], axis=-1) / scale

        def jacobian(x, rows):
            u, v, a = unpack(x)
            du_da = gauge_power_derivative(a, q)
            jac = np.zeros((x.shape[0], 2 * n, 2 * n))
            jac[:, :n, :n] = eye * (1.0 + t * dfunc(u) * du_da)[:, :, None]
            jac[:, :n, n:] = -t * eye
            jac[:, n:, :n] = eye * (t * du_da)[:, :, None]
            jac[:, n:, n:] = eye * gauge_power_derivative(v, q)[:, :, None] + t * M
            return jac / scale

        def finish(x):
            u, v, _ = unpack(x)
            return np.stack([u, v], axis=-2)

    else:
        x0 = np.concatenate([init[:, 0], gauge_power(init[:, 1], q)], axis=-1)

        def unpack(x):
            u, c = x[:, :n], x[:, n:]
            return u, gauge_power(c, p), c

        def residual(x, rows):
            u, v, c = unpack(x)
            b = flat[rows]
            r1 = gauge_power(u, p) + t * (func(u) - v) - b[:, 0]
            r2 = c + t * (v @ M.T + u) - b[:, 1]
            return np.concatenate([r1, r2], axis=-1) / scale

        def jacobian(x, rows):
            u, v, c = unpack(x)
            dv_dc = gauge_power_derivative(c, p)
            jac = np.zeros((x.shape[0], 2 * n, 2 * n))
            jac[:, :n, :n] = eye * (gauge_power_derivative(u, p) + t * dfunc(u))[:, :, None]
            jac[:, :n, n:] = eye * (-t * dv_dc)[:, :, None]
            jac[:, n:, :n] = t * eye
            jac[:, n:, n:] = eye + t * M[None, :, :] * dv_dc[:, None, :]
            return jac / scale

        def finish(x):
            u, v, _ = unpack(x)
            return np.stack([u, v], axis=-2)

    tol = cfg.inner_tol * _scale(rhs)
    x = _batched_newton(residual, jacobian, x0, tol, cfg.max_inner_iter, "product resolvent")
    return finish(x).reshape(rhs.shape)


def product_solve(ops, rhs, t, cfg: ResolventConfig | None = None, method: str = "auto", start=None, t0: float = BASE_T0):
    """Solve ``J^W z + t A z = rhs`` on stacked product arrays.

    ``method="contraction"`` uses the splitting map directly when ``t <= t0``
    and :func:`resolvent_extend` from ``t0`` otherwise. ``"newton"`` calls
    :func:`newton_product_solve`. ``"auto"`` picks the contraction only for
    ``p = 2`` and ``t <= t0``, where it needs no extension; for ``p != 2`` the
    splitting map can cycle instead of contracting, and for larger ``t`` the
    extension factor ``1 - t0/t`` makes it slow.
    """
    cfg = cfg or ResolventConfig(t)
    if method == "auto":
        method = "contraction" if ops.p == 2.0 and t <= t0 else "newton"
    if method == "newton":
        return newton_product_solve(ops, rhs, t, cfg, start)
    if method != "contraction":
        raise ValueError(f"unknown method {method!r}")
    if t <= t0:
        return splitting_solve(ops, rhs, t, cfg, start)
    base_cfg = cfg.with_t(t0)

    def solve_at_t0(b, init=None):
        return splitting_solve(ops, b, t0, base_cfg, init)

    return resolvent_extend(solve_at_t0, rhs, t, t0, lambda z: product_duality(ops, z), cfg, start)


# --------------------------------------------------------------------------
# typed resolvents
# --------------------------------------------------------------------------


def _check_grid(ops, f):
    if f.grid != ops.grid:
        raise DimensionError("function lives on a different grid than the operator")


def resolvent_nemytskii(ops, x: GridFunction, cfg: ResolventConfig) -> GridFunction:
    """``(J_p + tF)^{-1} J_p x`` for a primal ``x``."""
    check_side(x, Side.PRIMAL)
    _check_grid(ops, x)
    return ops.primal(nemytskii_solve(ops, gauge_power(x.values, ops.p), cfg.t, cfg))


def resolvent_integral(ops, y: GridFunction, cfg: ResolventConfig) -> GridFunction:
    """``(J_q + tK)^{-1} J_q y`` for a dual ``y``."""
    check_side(y, Side.DUAL)
    _check_grid(ops, y)
    return ops.dual(integral_solve(ops, gauge_power(y.values, ops.q), cfg.t, cfg))


def _stack(w: ProductPoint) -> np.ndarray:
    return np.stack([w.u.values, w.v.values])


def _unstack(ops, z) -> ProductPoint:
    return ProductPoint(ops.primal(z[0]), ops.dual(z[1]))


def resolvent_product(ops, w: ProductPoint, cfg: ResolventConfig, method: str = "auto") -> ProductPoint:
    """``(J^W + tA)^{-1} J^W w`` for a point ``w = (u, v)`` of ``W``.

    See :func:`product_solve` for the choice of ``method``.
    """
    if w.is_dual_side:
        raise ValueError("resolvent_product takes a point of W, not of its dual")
    _check_grid(ops, w.u)
    rhs = product_duality(ops, _stack(w))
    return _unstack(ops, product_solve(ops, rhs, cfg.t, cfg, method))


def regularization_path(ops, w1: ProductPoint, theta: float, cfg: ResolventConfig | None = None, method: str = "auto") -> ProductPoint:
    """Path point ``x(theta) = (J^W + A/theta)^{-1} J^W w1`` for ``0 < theta <= 1``."""
    theta = check_positive(theta, "theta")
    if theta > 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    cfg = ResolventConfig(1.0 / theta) if cfg is None else cfg.with_t(1.0 / theta)
    return resolvent_product(ops, w1, cfg, method)


def path_point_values(ops, w1_stack, theta, cfg: ResolventConfig | None = None, start=None) -> np.ndarray:
    """Array form of :func:`regularization_path` on a stacked anchor."""
    t = 1.0 / theta
    cfg = ResolventConfig(t) if cfg is None else cfg.with_t(t)
    return product_solve(ops, product_duality(ops, w1_stack), t, cfg, "auto", start)


def path_residuals(ops, x: ProductPoint, w1: ProductPoint, theta: float):
    """Sup norms of the two optimality conditions of a path point ``x = (y, z)``.

    ``theta (J_p y - J_p u1) + F y - z`` and ``theta (J_q z - J_q v1) + K z + y``.
    """
    y, z = x.u.values, x.v.values
    u1, v1 = w1.u.values, w1.v.values
    first = theta * (gauge_power(y, ops.p) - gauge_power(u1, ops.p)) + ops.F(y) - z
    second = theta * (gauge_power(z, ops.q) - gauge_power(v1, ops.q)) + ops.K(z) + y
    return _sup(first), _sup(second)
