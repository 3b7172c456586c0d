"""Discretized L^p spaces on a one-dimensional quadrature grid.

A :class:`QuadratureGrid` turns the integral over ``[a, b]`` into a weighted
sum, so ``E = L^p`` becomes ``R^N`` with the norm ``(sum w_i |f_i|^p)^(1/p)``
and the dual ``E* = L^q`` pairs with ``E`` through ``sum w_i g_i u_i``.
Under that pairing the generalized duality mapping with gauge ``t^(p-1)`` is
the componentwise power ``|u_i|^(p-1) sgn(u_i)``; its inverse is the same
map with the conjugate exponent.

The module has two layers. The array kernels (:func:`gauge_power`,
:func:`weighted_norm`, :func:`weighted_pairing`) work on raw ``ndarray``
values and broadcast over leading batch axes; the solver and resolvents use
them directly. The typed layer (:class:`GridFunction`, :class:`ProductPoint`
and the functions taking them) checks sides, exponents and grids.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, InvalidExponentError

DEFAULT_GRID_SIZE = 33
EXPONENT_RTOL = 1e-12


def conjugate(p: float) -> float:
    """Return the conjugate exponent ``q = p / (p - 1)``."""
    p = float(p)
    if not p > 1.0:
        raise InvalidExponentError(f"exponent must be > 1, got {p}")
    return p / (p - 1.0)


def are_conjugate(p: float, q: float) -> bool:
    return abs(1.0 / p + 1.0 / q - 1.0) <= EXPONENT_RTOL


# --------------------------------------------------------------------------
# array kernels
# --------------------------------------------------------------------------


def gauge_power(values, r: float) -> np.ndarray:
    """Componentwise ``|x|^(r-1) sgn(x)``: the duality map of weighted L^r."""
    values = np.asarray(values, dtype=float)
    if r == 2.0:
        return values.copy()
    return np.sign(values) * np.abs(values) ** (r - 1.0)


def gauge_power_derivative(values, r: float) -> np.ndarray:
    """Derivative ``(r-1)|x|^(r-2)`` of :func:`gauge_power` (``inf`` at 0 for r < 2)."""
    values = np.asarray(values, dtype=float)
    if r == 2.0:
        return np.ones_like(values)
    with np.errstate(divide="ignore"):
        return (r - 1.0) * np.abs(values) ** (r - 2.0)


def weighted_norm(values, weights, r: float) -> np.ndarray:
    """``(sum_i w_i |x_i|^r)^(1/r)`` along the last axis."""
    values = np.asarray(values, dtype=float)
    if r == 2.0:
        if values.ndim == 1:
            return np.sqrt(np.dot(weights, values * values))
        return np.sqrt(np.sum(weights * values * values, axis=-1))
    return np.sum(weights * np.abs(values) ** r, axis=-1) ** (1.0 / r)


def weighted_pairing(a, b, weights) -> np.ndarray:
    """``sum_i w_i a_i b_i`` along the last axis."""
    return np.sum(weights * np.asarray(a, dtype=float) * np.asarray(b, dtype=float), axis=-1)


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and strictly positive weights realizing ``int_a^b f(y) dy``.

    Parameters
    ----------
    nodes : array_like
        Strictly increasing nodes inside ``domain``.
    weights : array_like
        Positive quadrature weights, one per node.
    domain : tuple of float
        Interval ``(a, b)``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple = (0.0, 1.0)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).ravel()
        weights = np.array(self.weights, dtype=float).ravel()
        a, b = (float(self.domain[0]), float(self.domain[1]))
        if nodes.size != weights.size:
            raise DimensionError(
                f"{nodes.size} nodes but {weights.size} weights"
            )
        if nodes.size == 0:
            raise DimensionError("a grid needs at least one node")
        if not b > a:
            raise ValueError(f"domain must satisfy a < b, got {(a, b)}")
        if not np.all(weights > 0):
            raise ValueError("quadrature weights must be strictly positive")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if nodes[0] < a or nodes[-1] > b:
            raise ValueError(f"nodes must lie in [{a}, {b}]")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "domain", (a, b))

    @property
    def size(self) -> int:
        return self.nodes.size

    def __len__(self):
        return self.nodes.size

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, QuadratureGrid):
            return NotImplemented
        return (
            self.domain == other.domain
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = object.__hash__

    @classmethod
    def trapezoid(cls, n: int = DEFAULT_GRID_SIZE, domain=(0.0, 1.0)) -> "QuadratureGrid":
        """Composite trapezoid rule on ``n`` equispaced nodes (endpoints included)."""
        if n < 2:
            raise ValueError(f"trapezoid rule needs n >= 2, got {n}")
        a, b = map(float, domain)
        nodes = np.linspace(a, b, n)
        h = (b - a) / (n - 1)
        weights = np.full(n, h)
        weights[0] = weights[-1] = h / 2
        return cls(nodes, weights, (a, b))

    @classmethod
    def gauss_legendre(cls, n: int = DEFAULT_GRID_SIZE, domain=(0.0, 1.0)) -> "QuadratureGrid":
        """Gauss-Legendre rule with ``n`` interior nodes."""
        if n < 1:
            raise ValueError(f"Gauss-Legendre rule needs n >= 1, got {n}")
        a, b = map(float, domain)
        ref_nodes, ref_weights = np.polynomial.legendre.leggauss(n)
        half = (b - a) / 2
        return cls(a + half * (ref_nodes + 1.0), half * ref_weights, (a, b))

    def to_dict(self) -> dict:
        return {
            "domain": list(self.domain),
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuadratureGrid":
        return cls(data["nodes"], data["weights"], tuple(data["domain"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "QuadratureGrid":
        return cls.from_dict(json.loads(text))


GRID_RULES = {
    "trapezoid": QuadratureGrid.trapezoid,
    "gauss": QuadratureGrid.gauss_legendre,
}


def make_grid(rule: str = "trapezoid", n: int = DEFAULT_GRID_SIZE, domain=(0.0, 1.0)) -> QuadratureGrid:
    try:
        builder = GRID_RULES[rule]
    except KeyError:
        raise ValueError(f"unknown quadrature rule {rule!r}; choose from {sorted(GRID_RULES)}") from None
    return builder(n, domain)


# --------------------------------------------------------------------------
# grid functions
# --------------------------------------------------------------------------


class Side(enum.Enum):
    PRIMAL = "primal"
    DUAL = "dual"

    @property
    def other(self) -> "Side":
        return Side.DUAL if self is Side.PRIMAL else Side.PRIMAL


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a function on a grid, living in ``E = L^p`` or ``E* = L^q``.

    ``exponent`` is the Lebesgue exponent of the space the function lives
    in: ``p`` for primal functions, ``q = p / (p - 1)`` for dual ones.
    """

    grid: QuadratureGrid
    values: np.ndarray
    exponent: float
    side: Side = Side.PRIMAL

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 0:
            values = np.full(self.grid.size, float(values))
        if values.shape != (self.grid.size,):
            raise DimensionError(
                f"expected {self.grid.size} values, got shape {values.shape}"
            )
        exponent = float(self.exponent)
        if not exponent > 1.0:
            raise InvalidExponentError(f"exponent must be > 1, got {exponent}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "side", Side(self.side))

    @classmethod
    def primal(cls, grid, values, p) -> "GridFunction":
        return cls(grid, values, p, Side.PRIMAL)

    @classmethod
    def dual(cls, grid, values, p) -> "GridFunction":
        """Dual function paired with primal exponent ``p`` (stored exponent is ``q``)."""
        return cls(grid, values, conjugate(p), Side.DUAL)

    @classmethod
    def from_function(cls, grid, func, p, side=Side.PRIMAL) -> "GridFunction":
        """Sample ``func(nodes)``; ``p`` is the primal exponent of the pair."""
        side = Side(side)
        exponent = p if side is Side.PRIMAL else conjugate(p)
        return cls(grid, np.broadcast_to(func(grid.nodes), grid.nodes.shape), exponent, side)

    @property
    def conjugate_exponent(self) -> float:
        return conjugate(self.exponent)

    @property
    def p(self) -> float:
        """Primal exponent of the (E, E*) pair this function belongs to."""
        return self.exponent if self.side is Side.PRIMAL else self.conjugate_exponent

    def __len__(self):
        return self.values.size

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values, self.exponent, self.side)

    def _check_compatible(self, other):
        if not isinstance(other, GridFunction):
            return False
        if other.side is not self.side or other.grid != self.grid:
            raise DimensionError("grid functions live in different spaces")
        if abs(other.exponent - self.exponent) > EXPONENT_RTOL * self.exponent:
            raise InvalidExponentError("grid functions have different exponents")
        return True

    def __add__(self, other):
        if not self._check_compatible(other):
            return NotImplemented
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        if not self._check_compatible(other):
            return NotImplemented
        return self.with_values(self.values - other.values)

    def __neg__(self):
        return self.with_values(-self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, GridFunction):
            return NotImplemented
        return self.with_values(float(scalar) * self.values)

    __rmul__ = __mul__

    def __repr__(self):
        return (
            f"GridFunction(side={self.side.value}, exponent={self.exponent:g}, "
            f"n={self.values.size})"
        )


@dataclass(frozen=True, eq=False)
class ProductPoint:
    """A pair ``(u, v)`` in ``W = E x E*`` (or, dual side, in ``W* = E* x E``)."""

    u: GridFunction
    v: GridFunction

    def __post_init__(self):
        if self.u.side is self.v.side:
            raise DimensionError("product components must live on opposite sides")
        if self.u.grid != self.v.grid:
            raise DimensionError("product components must share one grid")
        if not are_conjugate(self.u.exponent, self.v.exponent):
            raise InvalidExponentError(
                f"component exponents {self.u.exponent} and {self.v.exponent} are not conjugate"
            )

    @classmethod
    def from_arrays(cls, grid, u_values, v_values, p) -> "ProductPoint":
        return cls(GridFunction.primal(grid, u_values, p), GridFunction.dual(grid, v_values, p))

    @property
    def grid(self) -> QuadratureGrid:
        return self.u.grid

    @property
    def p(self) -> float:
        return self.u.p

    @property
    def is_dual_side(self) -> bool:
        return self.u.side is Side.DUAL

    def __sub__(self, other):
        return ProductPoint(self.u - other.u, self.v - other.v)

    def __add__(self, other):
        return ProductPoint(self.u + other.u, self.v + other.v)


# --------------------------------------------------------------------------
# typed operations
# --------------------------------------------------------------------------


def lp_norm(f: GridFunction, r: float | None = None) -> float:
    """Weighted ``L^r`` norm of ``f`` (``r`` defaults to the space exponent)."""
    r = f.exponent if r is None else float(r)
    if not r > 1.0:
        raise InvalidExponentError(f"norm exponent must be > 1, got {r}")
    return float(weighted_norm(f.values, f.grid.weights, r))


def pairing(g: GridFunction, u: GridFunction) -> float:
    """Duality pairing ``<g, u> = sum_i w_i g_i u_i`` of a dual and a primal function."""
    if g.side is u.side:
        raise DimensionError("pairing needs one dual and one primal function")
    if g.grid != u.grid:
        raise DimensionError("pairing across different grids")
    if not are_conjugate(g.exponent, u.exponent):
        raise InvalidExponentError(
            f"exponents {g.exponent} and {u.exponent} are not conjugate"
        )
    return float(weighted_pairing(g.values, u.values, g.grid.weights))


def duality_map(f: GridFunction) -> GridFunction:
    """Duality map of the space ``f`` lives in, landing on the opposite side."""
    return GridFunction(
        f.grid, gauge_power(f.values, f.exponent), f.conjugate_exponent, f.side.other
    )


def duality_map_p(u: GridFunction) -> GridFunction:
    """``J_p : E -> E*``, componentwise ``|u_i|^(p-1) sgn(u_i)``."""
    if u.side is not Side.PRIMAL:
        raise DimensionError("duality_map_p expects a primal function")
    return duality_map(u)


def duality_map_q(v: GridFunction) -> GridFunction:
    """``J_q : E* -> E``, the inverse of :func:`duality_map_p`."""
    if v.side is not Side.DUAL:
        raise DimensionError("duality_map_q expects a dual function")
    return duality_map(v)


def product_norm(w: ProductPoint) -> float:
    """``(||u||^p + ||v||^p)^(1/p)`` for ``w = (u, v)`` in ``W``.

    Dual-side pairs use the dual norm of that, the same sum with exponent ``q``.
    """
    r = w.u.exponent
    nu, nv = lp_norm(w.u), lp_norm(w.v)
    return float((nu**r + nv**r) ** (1.0 / r))


def product_duality_map(w: ProductPoint) -> ProductPoint:
    """Componentwise duality map ``(J_p u, J_q v)``; inverts itself on the dual side."""
    return ProductPoint(duality_map(w.u), duality_map(w.v))
