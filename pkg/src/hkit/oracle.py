"""Reference solutions and the built-in problem gallery.

:func:`newton_solve` is deliberately independent of the iterative solver: it
attacks the discretized system ``u + M F(u) = 0`` with damped Newton, so its
answers can serve as ground truth for the iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import OracleFailureError
from .lp_space import DEFAULT_GRID_SIZE, GridFunction, QuadratureGrid, make_grid
from .operators import DiscretizedOperators, HammersteinProblem, IntegralKernel, ScalarNonlinearity


def newton_solve(problem, grid: QuadratureGrid | None = None, tol: float = 1e-12, max_iter: int = 50, u0=None) -> GridFunction:
    """Solve ``u + M F(u) = 0`` by damped Newton with backtracking.

    Parameters
    ----------
    problem : HammersteinProblem or DiscretizedOperators
    grid : QuadratureGrid, optional
        Used when ``problem`` is not discretized yet (default: trapezoid, 33 nodes).
    tol : float
        Target for ``max_i |R(u)_i|``.
    max_iter : int
    u0 : array_like, optional
        Starting guess, zero by default.

    Raises
    ------
    OracleFailureError
        If the tolerance is not met within ``max_iter`` Newton steps, or the
        nonlinearity has no derivative.
    """
    ops = problem if isinstance(problem, DiscretizedOperators) else problem.discretize(grid)
    if not ops.has_derivative:
        raise OracleFailureError("the Newton oracle needs df_ds")
    M = ops.matrix
    n = ops.size
    u = np.zeros(n) if u0 is None else np.array(u0, dtype=float)

    def residual(u):
        return u + M @ ops.F(u)

    r = residual(u)
    norm = np.max(np.abs(r))
    for _ in range(max_iter):
        if norm <= tol:
            return ops.primal(u)
        jac = np.eye(n) + M * ops.F_prime(u)[None, :]
        delta = np.linalg.solve(jac, r)
        alpha = 1.0
        while alpha > 1e-10:
            trial = u - alpha * delta
            try:
                rt = residual(trial)
            except ArithmeticError:
                rt = None
            if rt is not None and np.max(np.abs(rt)) < norm:
                break
            alpha *= 0.5
        else:
            raise OracleFailureError(f"line search failed at residual {norm:.3e}")
        u, r = trial, rt
        norm = np.max(np.abs(r))
    if norm <= tol:
        return ops.primal(u)
    raise OracleFailureError(f"Newton oracle stopped at residual {norm:.3e} after {max_iter} steps")


@dataclass
class GalleryProblem(HammersteinProblem):
    """A named problem with provenance notes for its monotonicity claims."""

    name: str = ""
    notes: str = ""
    strongly_monotone: bool = False

    def solution(self, grid: QuadratureGrid | None = None, tol: float = 1e-12) -> GridFunction:
        """Closed-form solution on ``grid`` when known, otherwise the Newton oracle."""
        grid = grid or make_grid("trapezoid", DEFAULT_GRID_SIZE, self.domain)
        if self.known_solution is not None:
            return GridFunction.from_function(grid, self.known_solution, self.p)
        return newton_solve(self.discretize(grid), tol=tol)


def _sin_forcing(x):
    return np.sin(np.pi * x)


def _linear_affine(p: float, name: str) -> GalleryProblem:
    return GalleryProblem(
        nonlinearity=ScalarNonlinearity(
            lambda x, s: s - _sin_forcing(x), lambda x, s: np.ones_like(s) + 0.0 * x, 0.0, "s - sin(pi x)"
        ),
        kernel=IntegralKernel.identity(1.0),
        p=p,
        known_solution=lambda x: 0.5 * _sin_forcing(x),
        name=name,
        notes="f increasing with slope 1 and K = I: both parts strongly monotone; u* = sin(pi x)/2 exactly.",
        strongly_monotone=True,
    )


def _min_kernel() -> IntegralKernel:
    return IntegralKernel(np.minimum, symmetric=True, psd_claimed=True, monotonicity_floor=0.0, name="min(x,y)")


def gallery() -> list:
    """Built-in problems, in a fixed order."""
    return [
        _linear_affine(2.0, "linear-affine"),
        _linear_affine(1.5, "linear-affine-p1.5"),
        GalleryProblem(
            nonlinearity=ScalarNonlinearity(
                lambda x, s: s**3 + s - 1.0 + 0.0 * x, lambda x, s: 3.0 * s**2 + 1.0 + 0.0 * x, 0.0, "s^3 + s - 1"
            ),
            kernel=_min_kernel(),
            name="cubic-green",
            notes=(
                "f strictly increasing with f' >= 1; min(x,y) is the Green kernel of -u'' with "
                "u(0) = u'(1) = 0 and is positive semidefinite. The constant forcing keeps the "
                "solution away from zero; the solution comes from the Newton oracle."
            ),
            strongly_monotone=True,
        ),
        GalleryProblem(
            nonlinearity=ScalarNonlinearity(
                lambda x, s: x * np.exp(s), lambda x, s: x * np.exp(s), 0.0, "x exp(s)"
            ),
            kernel=_min_kernel(),
            name="exp-paper",
            notes="x exp(s) is increasing in s but not strongly (slope tends to 0 as s -> -inf).",
        ),
        GalleryProblem(
            nonlinearity=ScalarNonlinearity(
                lambda x, s: s + np.arctan(s) - x, lambda x, s: 1.0 + 1.0 / (1.0 + s**2) + 0.0 * x, 0.0,
                "s + atan(s) - x",
            ),
            kernel=IntegralKernel(
                lambda x, y: np.exp(-((x - y) ** 2)), symmetric=True, psd_claimed=True,
                monotonicity_floor=0.0, name="exp(-(x-y)^2)",
            ),
            name="hilbert-smooth",
            notes="f' >= 1 and the Gaussian kernel is positive definite; smooth p = 2 baseline.",
            strongly_monotone=True,
        ),
        GalleryProblem(
            nonlinearity=ScalarNonlinearity(lambda x, s: s + 0.0 * x, lambda x, s: np.ones_like(s) + 0.0 * x, 0.0, "s"),
            kernel=IntegralKernel.identity(1.0),
            known_solution=lambda x: np.zeros_like(x),
            name="zero",
            notes="Unforced linear problem; u* = 0.",
            strongly_monotone=True,
        ),
    ]


def gallery_names() -> list:
    return [problem.name for problem in gallery()]


def get_problem(name: str) -> GalleryProblem:
    for problem in gallery():
        if problem.name == name:
            return problem
    raise KeyError(f"unknown gallery problem {name!r}; available: {', '.join(gallery_names())}")
