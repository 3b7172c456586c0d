"""Nemytskii and integral operators of a Hammerstein equation ``u + KFu = 0``.

``F`` maps a primal function to a dual one pointwise, ``(Fu)_i = f(x_i, u_i)``.
``K`` maps a dual function to a primal one through the Nystrom matrix
``M_ij = w_j k(x_i, x_j)``, or as ``c * I`` for the identity-scaled kernel
that the exactly solvable test problems use. The product operator
``A(u, v) = (Fu - v, Kv + u)`` on ``W = E x E*`` vanishes exactly at
``(u*, Fu*)`` for solutions ``u*``.

Nonlinearities and kernels take numpy-vectorized callables: ``f(x, s)`` and
``k(x, y)`` must broadcast over arrays.
"""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import DimensionError, EvaluationError, InvalidConfigError, ProbeRejectedError
from .lp_space import (
    DEFAULT_GRID_SIZE,
    GridFunction,
    ProductPoint,
    QuadratureGrid,
    Side,
    conjugate,
    make_grid,
    weighted_norm,
    weighted_pairing,
)
from .validation import check_count, check_exponent, check_positive, check_side

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-9


@dataclass(frozen=True)
class ScalarNonlinearity:
    """Pointwise nonlinearity ``f(x, s)`` with optional ``df/ds`` and monotonicity floor.

    ``monotonicity_floor`` is a claimed ``r`` with ``<Fu - Fv, u - v> >= r ||u - v||``;
    it is probed, never trusted, when the operator is discretized.
    """

    f: Callable
    df_ds: Optional[Callable] = None
    monotonicity_floor: Optional[float] = None
    name: str = "custom"

    def __call__(self, x, s):
        return self.f(x, s)

    @classmethod
    def zero(cls) -> "ScalarNonlinearity":
        return cls(lambda x, s: np.zeros_like(s), lambda x, s: np.zeros_like(s), name="zero")

    @classmethod
    def identity(cls) -> "ScalarNonlinearity":
        return cls(lambda x, s: s + 0.0 * x, lambda x, s: np.ones_like(s) + 0.0 * x, name="identity")


@dataclass(frozen=True)
class IntegralKernel:
    """Kernel ``k(x, y)`` of the linear integral operator.

    Parameters
    ----------
    k : callable or None
        Vectorized kernel; ``None`` for the identity-scaled kernel.
    symmetric, psd_claimed : bool
        Claims checked on the default grid at construction.
    identity_scale : float, optional
        Represents ``K = c I`` exactly (no quadrature).
    monotonicity_floor : float, optional
        Claimed ``r`` with ``<Kv - Kw, v - w> >= r ||v - w||``.
    """

    k: Optional[Callable] = None
    symmetric: bool = False
    psd_claimed: bool = False
    identity_scale: Optional[float] = None
    monotonicity_floor: Optional[float] = None
    name: str = "custom"

    def __post_init__(self):
        if self.k is None and self.identity_scale is None:
            raise InvalidConfigError("a kernel needs either k or identity_scale")
        if self.identity_scale is not None:
            return
        grid = QuadratureGrid.trapezoid(DEFAULT_GRID_SIZE)
        kmat = self.kernel_values(grid)
        if not np.all(np.isfinite(kmat)):
            raise InvalidConfigError("kernel is not finite on the default grid")
        if self.symmetric and np.max(np.abs(kmat - kmat.T)) > SYMMETRY_TOL:
            raise InvalidConfigError(f"kernel {self.name!r} claimed symmetric but is not")
        if self.psd_claimed:
            sw = np.sqrt(grid.weights)
            sym = sw[:, None] * kmat * sw[None, :]
            lam_min = np.linalg.eigvalsh(0.5 * (sym + sym.T)).min()
            if lam_min < -PSD_TOL:
                raise InvalidConfigError(
                    f"kernel {self.name!r} claimed PSD but has eigenvalue {lam_min:.3e}"
                )

    @classmethod
    def identity(cls, c: float = 1.0) -> "IntegralKernel":
        return cls(identity_scale=float(c), symmetric=True, psd_claimed=c >= 0, name=f"identity*{c:g}")

    @classmethod
    def zero(cls) -> "IntegralKernel":
        return cls.identity(0.0)

    @property
    def is_identity(self) -> bool:
        return self.identity_scale is not None

    def kernel_values(self, grid: QuadratureGrid) -> np.ndarray:
        x = grid.nodes
        if self.is_identity:
            return self.identity_scale * np.eye(x.size)
        with np.errstate(all="ignore"):
            values = self.k(x[:, None], x[None, :])
        return np.broadcast_to(values, (x.size, x.size)).astype(float)

    def matrix(self, grid: QuadratureGrid) -> np.ndarray:
        """``M_ij = w_j k(x_i, x_j)``; ``c I`` for identity-scaled kernels."""
        if self.is_identity:
            return self.identity_scale * np.eye(grid.size)
        return self.kernel_values(grid) * grid.weights[None, :]


@dataclass
class HammersteinProblem:
    """``u(x) + int k(x, y) f(y, u(y)) dy = 0`` on ``domain``.

    ``known_solution`` is a vectorized callable of ``x`` when a closed form exists.
    """

    nonlinearity: ScalarNonlinearity
    kernel: IntegralKernel
    p: float = 2.0
    domain: tuple = (0.0, 1.0)
    known_solution: Optional[Callable] = None

    def discretize(self, grid: QuadratureGrid | None = None, rule="trapezoid", n=DEFAULT_GRID_SIZE, p=None):
        if grid is None:
            grid = make_grid(rule, n, self.domain)
        return DiscretizedOperators(self.nonlinearity, self.kernel, grid, self.p if p is None else p)


class DiscretizedOperators:
    """``F``, ``K`` and the product operator on a fixed grid and exponent.

    The array methods (``F``, ``K``, ``F_prime``) take values whose last axis
    runs over grid nodes and broadcast over leading axes.
    """

    def __init__(self, nonlinearity, kernel, grid, p=2.0, check_claims=True, seed=0):
        self.nonlinearity = nonlinearity
        self.kernel = kernel
        self.grid = grid
        self.p = check_exponent(p)
        self.q = conjugate(self.p)
        self.nodes = grid.nodes
        self.weights = grid.weights
        self.matrix = kernel.matrix(grid)
        self.matrix.flags.writeable = False
        if check_claims:
            self._check_claims(seed)

    def _check_claims(self, seed):
        for which, floor in (("F", self.nonlinearity.monotonicity_floor), ("K", self.kernel.monotonicity_floor)):
            if floor is None:
                continue
            report = monotonicity_probe(self, which, samples=256, radius=1.0, seed=seed, floor=floor)
            if report.floor_violations:
                raise ProbeRejectedError(
                    f"claimed monotonicity floor {floor:g} for {which} refuted by sampling", report
                )

    @property
    def size(self) -> int:
        return self.grid.size

    @property
    def has_derivative(self) -> bool:
        return self.nonlinearity.df_ds is not None

    def F(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self.nonlinearity.f(self.nodes, u), dtype=float)
            if out.shape != u.shape:
                out = np.broadcast_to(out, u.shape).copy()
            total = out.sum()
        if not np.isfinite(total) and not np.all(np.isfinite(out)):
            bad = ~np.isfinite(out)
            index = int(np.argwhere(bad)[0][-1])
            raise EvaluationError(
                f"nonlinearity {self.nonlinearity.name!r} is not finite at node {index}", index
            )
        return out

    def F_prime(self, u) -> np.ndarray:
        if self.nonlinearity.df_ds is None:
            raise InvalidConfigError(f"nonlinearity {self.nonlinearity.name!r} has no derivative")
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(self.nonlinearity.df_ds(self.nodes, u), u.shape).astype(float)

    def K(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.kernel.is_identity:
            return self.kernel.identity_scale * v
        return v @ self.matrix.T

    def residual(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float) + self.K(self.F(u))

    def A(self, u, v):
        """Product operator on arrays: ``(Fu - v, Kv + u)``."""
        return self.F(u) - v, self.K(v) + u

    # typed helpers ---------------------------------------------------------

    def primal(self, values) -> GridFunction:
        return GridFunction(self.grid, values, self.p, Side.PRIMAL)

    def dual(self, values) -> GridFunction:
        return GridFunction(self.grid, values, self.q, Side.DUAL)

    def _check(self, f, side):
        check_side(f, side)
        if f.grid != self.grid:
            raise DimensionError("function lives on a different grid than the operator")
        return f.values


def apply_nemytskii(ops: DiscretizedOperators, u: GridFunction) -> GridFunction:
    """``(Fu)_i = f(x_i, u_i)``, a dual function."""
    return ops.dual(ops.F(ops._check(u, Side.PRIMAL)))


def apply_integral(ops: DiscretizedOperators, v: GridFunction) -> GridFunction:
    """``(Kv)_i = sum_j w_j k(x_i, x_j) v_j``, a primal function."""
    return ops.primal(ops.K(ops._check(v, Side.DUAL)))


def hammerstein_residual(ops: DiscretizedOperators, u: GridFunction) -> GridFunction:
    """``u + K(F(u))``; zero exactly at solutions."""
    return ops.primal(ops.residual(ops._check(u, Side.PRIMAL)))


def product_operator_apply(ops: DiscretizedOperators, w: ProductPoint) -> ProductPoint:
    """``A(u, v) = (Fu - v, Kv + u)`` as a dual-side pair in ``E* x E``."""
    u = ops._check(w.u, Side.PRIMAL)
    v = ops._check(w.v, Side.DUAL)
    first, second = ops.A(u, v)
    return ProductPoint(ops.dual(first), ops.primal(second))


# --------------------------------------------------------------------------
# monotonicity probes
# --------------------------------------------------------------------------

PROBE_CHUNK = 512
_OPERATORS = {"F": "F", "nemytskii": "F", "K": "K", "integral": "K", "A": "A", "product": "A"}


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of sampling ``<op(x) - op(y), x - y>`` over random pairs.

    ``ratio`` is the inner product divided by ``||x - y||`` (for ``A`` the
    distance is ``||u1 - u2|| + ||v1 - v2||``). ``violations`` counts negative
    inner products; ``floor_violations`` counts pairs below a claimed linear
    floor. For ``A``, ``implied_modulus`` is ``min(r1, r2)`` from the
    component floors when both are known.
    """

    operator: str
    samples: int
    min_ratio: float
    violations: int
    max_image_norm: float
    floor: Optional[float] = None
    floor_violations: int = 0
    implied_modulus: Optional[float] = None
    modulus_violations: int = 0

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "samples": self.samples,
            "min_ratio": self.min_ratio,
            "violations": self.violations,
            "max_image_norm": self.max_image_norm,
            "floor": self.floor,
            "floor_violations": self.floor_violations,
            "implied_modulus": self.implied_modulus,
            "modulus_violations": self.modulus_violations,
        }


def _ball_samples(rng, count, size, weights, r, radius):
    direction = rng.standard_normal((count, size))
    direction /= weighted_norm(direction, weights, r)[:, None]
    scale = radius * rng.uniform(0.0, 1.0, count)
    return direction * scale[:, None]


def _probe_chunk(ops, which, count, radius, seed_seq):
    with np.errstate(over="ignore", invalid="ignore"):
        return _probe_chunk_values(ops, which, count, radius, seed_seq)


def _probe_chunk_values(ops, which, count, radius, seed_seq):
    rng = np.random.default_rng(seed_seq)
    w, p, q, n = ops.weights, ops.p, ops.q, ops.size
    if which == "F":
        x, y = (_ball_samples(rng, count, n, w, p, radius) for _ in range(2))
        fx, fy = ops.F(x), ops.F(y)
        inner = weighted_pairing(fx - fy, x - y, w)
        dist = weighted_norm(x - y, w, p)
        scale = weighted_norm(fx - fy, w, q) * dist
        image = np.maximum(weighted_norm(fx, w, q), weighted_norm(fy, w, q))
        return inner, dist, scale, image, None, None
    if which == "K":
        x, y = (_ball_samples(rng, count, n, w, q, radius) for _ in range(2))
        kx, ky = ops.K(x), ops.K(y)
        inner = weighted_pairing(kx - ky, x - y, w)
        dist = weighted_norm(x - y, w, q)
        scale = weighted_norm(kx - ky, w, p) * dist
        image = np.maximum(weighted_norm(kx, w, p), weighted_norm(ky, w, p))
        return inner, dist, scale, image, None, None
    u1, u2 = (_ball_samples(rng, count, n, w, p, radius) for _ in range(2))
    v1, v2 = (_ball_samples(rng, count, n, w, q, radius) for _ in range(2))
    a1, b1 = ops.A(u1, v1)
    a2, b2 = ops.A(u2, v2)
    du, dv = u1 - u2, v1 - v2
    inner_f = weighted_pairing(ops.F(u1) - ops.F(u2), du, w)
    inner_k = weighted_pairing(ops.K(v1) - ops.K(v2), dv, w)
    inner = weighted_pairing(a1 - a2, du, w) + weighted_pairing(b1 - b2, dv, w)
    nu, nv = weighted_norm(du, w, p), weighted_norm(dv, w, q)
    dist = nu + nv
    scale = (weighted_norm(a1 - a2, w, q) + weighted_norm(b1 - b2, w, p)) * dist
    image = np.maximum(
        weighted_norm(a1, w, q) + weighted_norm(b1, w, p),
        weighted_norm(a2, w, q) + weighted_norm(b2, w, p),
    )
    return inner, dist, scale, image, (inner_f, nu), (inner_k, nv)


def monotonicity_probe(
    ops: DiscretizedOperators,
    side: str = "F",
    samples: int = 1000,
    radius: float = 1.0,
    seed: int = 0,
    floor: float | None = None,
    n_jobs: int | None = None,
) -> ProbeReport:
    """Sample random pairs in a ball and test monotonicity of ``F``, ``K`` or ``A``.

    Pairs are drawn in fixed chunks, each from its own child of
    ``SeedSequence(seed)``, so the report does not depend on ``n_jobs``.

    Parameters
    ----------
    ops : DiscretizedOperators
    side : {"F", "K", "A"}
        Operator to probe (aliases "nemytskii", "integral", "product").
    samples : int
        Number of random pairs.
    radius : float
        Ball radius in the norm of the operator's domain.
    seed : int
    floor : float, optional
        Linear floor ``r`` to test ``inner >= r * dist``. Defaults to the
        claimed floor of the probed component.
    n_jobs : int, optional
        Worker threads; ``None`` or 1 runs serially.
    """
    try:
        which = _OPERATORS[side]
    except KeyError:
        raise ValueError(f"unknown operator {side!r}; choose from F, K, A") from None
    samples = check_count(samples, "samples")
    radius = check_positive(radius, "radius")
    if floor is None:
        floor = {
            "F": ops.nonlinearity.monotonicity_floor,
            "K": ops.kernel.monotonicity_floor,
            "A": None,
        }[which]

    counts = [PROBE_CHUNK] * (samples // PROBE_CHUNK)
    if samples % PROBE_CHUNK:
        counts.append(samples % PROBE_CHUNK)
    seeds = np.random.SeedSequence(seed).spawn(len(counts))
    tasks = list(zip(counts, seeds))
    if n_jobs is not None and n_jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda t: _probe_chunk(ops, which, t[0], radius, t[1]), tasks))
    else:
        parts = [_probe_chunk(ops, which, c, radius, s) for c, s in tasks]

    inner = np.concatenate([part[0] for part in parts])
    dist = np.concatenate([part[1] for part in parts])
    scale = np.concatenate([part[2] for part in parts])
    image = np.concatenate([part[3] for part in parts])
    negative = inner < -1e-12 * np.maximum(scale, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dist > 0, inner / dist, np.inf)

    floor_violations = 0
    if floor is not None:
        floor_violations = int(np.count_nonzero(inner < floor * dist - 1e-9))

    implied = None
    modulus_violations = 0
    if which == "A":
        r1 = ops.nonlinearity.monotonicity_floor
        r2 = ops.kernel.monotonicity_floor
        if r1 is not None and r2 is not None:
            implied = min(r1, r2)
            modulus_violations = int(np.count_nonzero(inner < implied * dist - 1e-9))

    return ProbeReport(
        operator=which,
        samples=samples,
        min_ratio=float(np.min(ratio)),
        violations=int(np.count_nonzero(negative)),
        max_image_norm=float(np.max(image)),
        floor=floor,
        floor_violations=floor_violations,
        implied_modulus=implied,
        modulus_violations=modulus_violations,
    )


def sample_component_ratios(ops, samples=1000, radius=1.0, seed=0):
    """Per-pair ``(inner_A, dist_A, inner_F, ||du||, inner_K, ||dv||)`` for product-operator probes."""
    seq = np.random.SeedSequence(seed)
    inner, dist, _, _, (inner_f, nu), (inner_k, nv) = _probe_chunk(ops, "A", samples, radius, seq)
    return inner, dist, inner_f, nu, inner_k, nv
