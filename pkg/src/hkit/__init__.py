"""Tools for Hammerstein integral equations ``u + KFu = 0`` in discretized L^p spaces.

The main entry points are :func:`hkit.solver.run` for the coupled iteration,
:mod:`hkit.resolvent` for resolvents and regularization paths, and
:mod:`hkit.oracle` for reference solutions and the problem gallery.
"""
from .estimator import HammersteinSolver
from .lp_space import GridFunction, ProductPoint, QuadratureGrid, Side, make_grid
from .operators import DiscretizedOperators, HammersteinProblem, IntegralKernel, ScalarNonlinearity
from .oracle import gallery, get_problem, newton_solve
from .schedules import PowerSchedule, validate
from .solver import SolverConfig, run

__version__ = "0.1.0"

__all__ = [
    "DiscretizedOperators",
    "GridFunction",
    "HammersteinProblem",
    "HammersteinSolver",
    "IntegralKernel",
    "PowerSchedule",
    "ProductPoint",
    "QuadratureGrid",
    "ScalarNonlinearity",
    "Side",
    "SolverConfig",
    "gallery",
    "get_problem",
    "make_grid",
    "newton_solve",
    "run",
    "validate",
]
