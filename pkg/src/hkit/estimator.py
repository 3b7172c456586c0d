"""scikit-learn style wrapper around :func:`hkit.solver.run`."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .lp_space import make_grid
from .operators import HammersteinProblem
from .oracle import get_problem
from .schedules import PowerSchedule
from .solver import SolverConfig, run


class HammersteinSolver(BaseEstimator):
    """Solve ``u + KFu = 0`` with the coupled iteration.

    ``fit`` takes the problem (a :class:`~hkit.operators.HammersteinProblem`
    or a gallery name) in place of training data; ``predict`` evaluates the
    computed solution at arbitrary points by linear interpolation between
    grid nodes.

    Parameters
    ----------
    p : float
    a, b : float
        Exponents of the power schedule.
    max_iter : int
    residual_tol : float
    variant : {"general_p", "chidume_idu_p2"}
    record_every : int
    grid_rule : {"trapezoid", "gauss"}
    n_nodes : int
    seed : int
        Seed of the monotonicity probe.

    Attributes
    ----------
    grid_ : QuadratureGrid
    u_, v_ : ndarray
        Final iterate on the grid.
    trace_ : list of TraceRecord
    n_iter_ : int
    termination_ : str
    """

    def __init__(self, p=2.0, a=0.6, b=0.3, max_iter=100_000, residual_tol=1e-3, variant="general_p",
                 record_every=100, grid_rule="trapezoid", n_nodes=33, seed=0):
        self.p = p
        self.a = a
        self.b = b
        self.max_iter = max_iter
        self.residual_tol = residual_tol
        self.variant = variant
        self.record_every = record_every
        self.grid_rule = grid_rule
        self.n_nodes = n_nodes
        self.seed = seed

    def fit(self, problem, y=None, u1=None, v1=None):
        if isinstance(problem, str):
            problem = get_problem(problem)
        if not isinstance(problem, HammersteinProblem):
            raise TypeError("fit expects a HammersteinProblem or a gallery name")
        grid = make_grid(self.grid_rule, self.n_nodes, problem.domain)
        ops = problem.discretize(grid, p=self.p)
        config = SolverConfig(self.p, PowerSchedule(self.a, self.b), self.max_iter, self.residual_tol,
                              self.variant, self.record_every)
        result = run(ops, config, u1, v1, seed=self.seed)
        self.grid_ = grid
        self.u_ = result.state.u.values.copy()
        self.v_ = result.state.v.values.copy()
        self.trace_ = result.trace
        self.n_iter_ = result.iterations
        self.termination_ = result.termination
        return self

    def predict(self, X):
        if not hasattr(self, "u_"):
            raise NotFittedError("call fit before predict")
        X = np.asarray(X, dtype=float)
        return np.interp(X.ravel(), self.grid_.nodes, self.u_).reshape(X.shape)
