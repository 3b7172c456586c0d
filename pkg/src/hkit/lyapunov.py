"""Lyapunov-type functionals on the discretized spaces and their inequality checks.

For ``x, y`` in ``E = L^p`` with conjugate ``q``::

    phi_p(x, y) = (p/q) ||x||^q - p <x, J_p y> + ||y||^p
    V_p(x, x*)  = (p/q) ||x||^q - p <x, x*>    + ||x*||^p

The functionals are only defined for ``1 < p <= 2``. For the product space
``W = E x E*`` the v-component uses the same formula on ``E*`` with the roles
of the exponents swapped, which keeps the sum well defined for every ``p``.

The ``*_gap`` functions return ``right - left`` of each inequality so callers
can report margins; the ``check_*`` functions compare a gap to ``-tol``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import BallMembershipError, InvalidConfigError
from .lp_space import (
    GridFunction,
    ProductPoint,
    Side,
    are_conjugate,
    conjugate,
    gauge_power,
    weighted_norm,
    weighted_pairing,
)
from .validation import check_same_grid, check_side

INEQUALITY_TOL = 1e-9


@dataclass(frozen=True)
class LyapunovConfig:
    """Exponent pair ``(p, q)`` with ``1 < p <= 2`` and ``1/p + 1/q = 1``."""

    p: float
    q: float | None = None

    def __post_init__(self):
        p = float(self.p)
        if not 1.0 < p <= 2.0:
            raise InvalidConfigError(
                f"the functionals need 1 < p <= 2 (q >= p), got p={p}"
            )
        q = conjugate(p) if self.q is None else float(self.q)
        if not are_conjugate(p, q):
            raise InvalidConfigError(f"p={p} and q={q} are not conjugate")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def for_space(cls, p: float) -> "LyapunovConfig":
        """Config usable with a solver running at space exponent ``p``.

        For ``p > 2`` the conjugate exponent is returned and the functionals
        are evaluated on the dual side.
        """
        return cls(p) if p <= 2.0 else cls(conjugate(p))


def lyapunov_values(x, y, weights, r: float) -> np.ndarray:
    """Array form of ``phi`` on ``L^r``: ``(r/s)||x||^s - r<x, J_r y> + ||y||^r``.

    Broadcasts over leading axes; ``s`` is the conjugate of ``r``.
    """
    s = conjugate(r)
    nx = weighted_norm(x, weights, r)
    ny = weighted_norm(y, weights, r)
    return (r / s) * nx**s - r * weighted_pairing(x, gauge_power(y, r), weights) + ny**r


def _check_primal(cfg, *functions):
    check_same_grid(*functions)
    for f in functions:
        check_side(f, Side.PRIMAL)
        if abs(f.exponent - cfg.p) > 1e-12 * cfg.p:
            raise InvalidConfigError(
                f"function exponent {f.exponent} does not match config p={cfg.p}"
            )


def phi_p(x: GridFunction, y: GridFunction, cfg: LyapunovConfig) -> float:
    """``(p/q)||x||^q - p<x, J_p y> + ||y||^p`` for primal ``x, y``."""
    _check_primal(cfg, x, y)
    return float(lyapunov_values(x.values, y.values, x.grid.weights, cfg.p))


def v_p(x: GridFunction, xstar: GridFunction, cfg: LyapunovConfig) -> float:
    """``(p/q)||x||^q - p<x, x*> + ||x*||^p`` for primal ``x`` and dual ``x*``."""
    _check_primal(cfg, x)
    check_side(xstar, Side.DUAL)
    check_same_grid(x, xstar)
    w = x.grid.weights
    nx = weighted_norm(x.values, w, cfg.p)
    nxs = weighted_norm(xstar.values, w, cfg.q)
    pair = weighted_pairing(x.values, xstar.values, w)
    return float((cfg.p / cfg.q) * nx**cfg.q - cfg.p * pair + nxs**cfg.p)


def wedge_p(w1: ProductPoint, w2: ProductPoint, cfg: LyapunovConfig) -> float:
    """Sum of the component functionals on ``W = E x E*``.

    The u-part is ``phi`` on ``E`` (exponent ``p``), the v-part the same
    functional on ``E*`` (exponent ``q``). ``cfg.p`` must equal one of the
    two space exponents; for a space exponent above 2 pass the conjugate.
    """
    for w in (w1, w2):
        if w.is_dual_side:
            raise InvalidConfigError("wedge_p takes points of W, not of its dual")
    check_same_grid(w1.u, w2.u)
    p_space = w1.u.exponent
    if abs(w2.u.exponent - p_space) > 1e-12 * p_space:
        raise InvalidConfigError("points belong to different product spaces")
    q_space = w1.v.exponent
    if not (np.isclose(cfg.p, p_space, rtol=1e-12) or np.isclose(cfg.p, q_space, rtol=1e-12)):
        raise InvalidConfigError(
            f"config p={cfg.p} matches neither space exponent {p_space} nor {q_space}"
        )
    weights = w1.grid.weights
    u_part = lyapunov_values(w1.u.values, w2.u.values, weights, p_space)
    v_part = lyapunov_values(w1.v.values, w2.v.values, weights, q_space)
    return float(u_part + v_part)


# --------------------------------------------------------------------------
# inequality suite
# --------------------------------------------------------------------------


def phi_bounds_gaps(x: GridFunction, y: GridFunction, cfg: LyapunovConfig):
    """Margins of ``| ||x||-||y|| |^p <= phi_p(x, y) <= (||x||+||y||)^p``.

    Returns ``(lower_gap, upper_gap)``; both are nonnegative when the bounds hold.
    """
    value = phi_p(x, y, cfg)
    nx, ny = (float(weighted_norm(f.values, f.grid.weights, cfg.p)) for f in (x, y))
    return value - abs(nx - ny) ** cfg.p, (nx + ny) ** cfg.p - value


def vp_identity_gap(x: GridFunction, xstar: GridFunction, cfg: LyapunovConfig) -> float:
    """``V_p(x, x*) - phi_p(x, J_q x*)``; zero when the identity holds."""
    inverse = GridFunction(x.grid, gauge_power(xstar.values, cfg.q), cfg.p, Side.PRIMAL)
    return v_p(x, xstar, cfg) - phi_p(x, inverse, cfg)


def three_point_gap(x, y, z, cfg: LyapunovConfig) -> float:
    """``phi(y,x) - phi(y,z) - p<z - y, J_p x - J_p z>``."""
    _check_primal(cfg, x, y, z)
    w = x.grid.weights
    rhs = cfg.p * weighted_pairing(
        z.values - y.values, gauge_power(x.values, cfg.p) - gauge_power(z.values, cfg.p), w
    )
    return phi_p(y, x, cfg) - phi_p(y, z, cfg) - float(rhs)


def check_three_point(x, y, z, cfg: LyapunovConfig, tol: float = INEQUALITY_TOL) -> bool:
    return three_point_gap(x, y, z, cfg) >= -tol


def vp_perturbation_gap(x, xstar, ystar, cfg: LyapunovConfig) -> float:
    """``V_p(x, x*+y*) - V_p(x, x*) - p<J_q x* - x, y*>``."""
    _check_primal(cfg, x)
    check_side(ystar, Side.DUAL)
    check_same_grid(x, xstar, ystar)
    w = x.grid.weights
    shift = cfg.p * weighted_pairing(gauge_power(xstar.values, cfg.q) - x.values, ystar.values, w)
    return v_p(x, xstar + ystar, cfg) - v_p(x, xstar, cfg) - float(shift)


def check_vp_perturbation(x, xstar, ystar, cfg: LyapunovConfig, tol: float = INEQUALITY_TOL) -> bool:
    return vp_perturbation_gap(x, xstar, ystar, cfg) >= -tol


def norm_lower_bound_gap(x, y, d: float, cfg: LyapunovConfig) -> float:
    """``||x-y||^p - phi_p(x,y) + (p/q)||x||^q`` for ``x, y`` in the ball of radius ``d``."""
    _check_primal(cfg, x, y)
    w = x.grid.weights
    nx = float(weighted_norm(x.values, w, cfg.p))
    ny = float(weighted_norm(y.values, w, cfg.p))
    if nx > d or ny > d:
        raise BallMembershipError(f"norms ({nx:g}, {ny:g}) exceed ball radius {d:g}")
    dist = float(weighted_norm(x.values - y.values, w, cfg.p))
    return dist**cfg.p - phi_p(x, y, cfg) + (cfg.p / cfg.q) * nx**cfg.q


def check_norm_lower_bound(x, y, d: float, cfg: LyapunovConfig, tol: float = INEQUALITY_TOL) -> bool:
    return norm_lower_bound_gap(x, y, d, cfg) >= -tol
