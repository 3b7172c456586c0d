"""Step-size schedules ``lambda_n`` and regularization schedules ``theta_n``.

The iteration needs ``theta_n`` decreasing to zero, ``sum lambda_n theta_n``
divergent, and ``((theta_{n-1}/theta_n) - 1) / (lambda_n theta_n) -> 0``.
Power schedules ``lambda_n = (n+1)^-a``, ``theta_n = (n+1)^-b`` with
``0 < b < a < 1`` satisfy all three exactly when ``a + b < 1``; the ratio
then decays like ``b n^(a+b-1)``.

:func:`validate` checks these conditions numerically over a finite horizon.
It is evidence, not proof.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidScheduleError

MIN_HORIZON = 1000
GROWTH_THRESHOLD = 0.01

WARN_SUM_LAMBDA = "sum_lambda_finite_clause_ignored"
FAIL_THETA = "theta_not_decreasing"
FAIL_GROWTH = "divergence_growth_below_threshold"
FAIL_RATIO = "ratio_condition_not_decreasing"
FAIL_RANGE = "values_outside_unit_interval"
WARNINGS = frozenset({WARN_SUM_LAMBDA})


def _check_index(n) -> np.ndarray:
    n = np.asarray(n)
    if not np.issubdtype(n.dtype, np.integer):
        if not np.all(n == np.floor(n)):
            raise ValueError("schedule indices must be integers")
    if np.any(n < 1):
        raise ValueError("schedule indices start at n = 1")
    return n.astype(float)


@dataclass(frozen=True)
class PowerSchedule:
    """``lambda_n = (n+1)^-a`` and ``theta_n = (n+1)^-b`` with ``0 < b < a < 1``.

    Examples
    --------
    >>> PowerSchedule(0.5, 0.25).lambda_at(3)
    0.5
    """

    a: float = 0.6
    b: float = 0.3

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b) and 0.0 < b < a < 1.0):
            raise InvalidScheduleError(f"power schedule needs 0 < b < a < 1, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def lambdas(self, n) -> np.ndarray:
        return (_check_index(n) + 1.0) ** (-self.a)

    def thetas(self, n) -> np.ndarray:
        return (_check_index(n) + 1.0) ** (-self.b)

    def lambda_at(self, n: int) -> float:
        return float(self.lambdas(n))

    def theta_at(self, n: int) -> float:
        return float(self.thetas(n))

    def ratio_at(self, n: int) -> float:
        """``((theta_{n-1}/theta_n) - 1) / (lambda_n theta_n)``, evaluated without cancellation."""
        if n < 2:
            raise ValueError("the ratio condition needs n >= 2")
        return float(np.expm1(self.b * np.log1p(1.0 / (n))) * (n + 1.0) ** (self.a + self.b))

    def to_dict(self) -> dict:
        return {"kind": "power", "a": self.a, "b": self.b}


@dataclass(frozen=True, eq=False)
class TabulatedSchedule:
    """Schedules given as arrays; entry ``k`` holds the value at ``n = k + 1``."""

    lambda_values: np.ndarray
    theta_values: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lambda_values, dtype=float)
        theta = np.array(self.theta_values, dtype=float)
        if lam.ndim != 1 or lam.shape != theta.shape or lam.size < 2:
            raise InvalidScheduleError("tabulated schedules need two 1-d arrays of equal length >= 2")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(theta))):
            raise InvalidScheduleError("tabulated schedule values must be finite")
        lam.flags.writeable = False
        theta.flags.writeable = False
        object.__setattr__(self, "lambda_values", lam)
        object.__setattr__(self, "theta_values", theta)

    @property
    def length(self) -> int:
        return self.lambda_values.size

    def _lookup(self, table, n):
        idx = _check_index(n).astype(int) - 1
        if np.any(idx >= table.size):
            raise IndexError(f"schedule has only {table.size} entries")
        return table[idx]

    def lambdas(self, n) -> np.ndarray:
        return self._lookup(self.lambda_values, n)

    def thetas(self, n) -> np.ndarray:
        return self._lookup(self.theta_values, n)

    def lambda_at(self, n: int) -> float:
        return float(self.lambdas(n))

    def theta_at(self, n: int) -> float:
        return float(self.thetas(n))

    def ratio_at(self, n: int) -> float:
        if n < 2:
            raise ValueError("the ratio condition needs n >= 2")
        th_prev, th, lam = self.theta_at(n - 1), self.theta_at(n), self.lambda_at(n)
        return (th_prev / th - 1.0) / (lam * th)

    def to_dict(self) -> dict:
        return {"kind": "tabulated", "length": self.length}


@dataclass(frozen=True)
class ScheduleReport:
    """Finite-horizon evidence for the three schedule conditions.

    ``flags`` lists every raised flag; ``passed`` is true when none of them
    is a failure (warnings alone do not fail a schedule).
    """

    horizon: int
    theta_decreasing: bool
    divergence_partial_sum: float
    divergence_growth: float
    ratio_condition_early: float
    ratio_condition_value: float
    flags: tuple = field(default_factory=tuple)

    @property
    def warnings(self) -> list:
        return [f for f in self.flags if f in WARNINGS]

    @property
    def failures(self) -> list:
        return [f for f in self.flags if f not in WARNINGS]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "theta_decreasing": self.theta_decreasing,
            "divergence_partial_sum": self.divergence_partial_sum,
            "divergence_growth": self.divergence_growth,
            "ratio_condition_early": self.ratio_condition_early,
            "ratio_condition_value": self.ratio_condition_value,
            "flags": list(self.flags),
            "passed": self.passed,
        }


def validate(schedule, horizon: int = 10**6) -> ScheduleReport:
    """Check the schedule conditions up to ``horizon``.

    * monotone decay of ``theta``: exact for power schedules (``b > 0``),
      checked entrywise for tabulated ones;
    * divergence of ``sum lambda_n theta_n``: relative growth of the partial
      sum between ``horizon // 2`` and ``horizon`` must reach 1%;
    * the ratio condition: its value at ``horizon`` must be below its value
      at ``horizon // 10``.

    A warning flag is always raised for the summability clause on
    ``lambda_n``, which contradicts divergence of ``sum lambda_n theta_n``
    and is not checked.

    Raises
    ------
    ValueError
        If ``horizon < 1000`` or exceeds a tabulated schedule's length.
    """
    if isinstance(horizon, bool) or int(horizon) != horizon or horizon < MIN_HORIZON:
        raise ValueError(f"horizon must be an integer >= {MIN_HORIZON}, got {horizon}")
    horizon = int(horizon)
    if isinstance(schedule, TabulatedSchedule) and horizon > schedule.length:
        raise ValueError(f"horizon {horizon} exceeds the table length {schedule.length}")

    flags = [WARN_SUM_LAMBDA]
    n = np.arange(1, horizon + 1)
    lam, theta = schedule.lambdas(n), schedule.thetas(n)

    if isinstance(schedule, PowerSchedule):
        theta_decreasing = schedule.b > 0.0
    else:
        theta_decreasing = bool(np.all(np.diff(theta) < 0) and theta[-1] < theta[0])
    if not theta_decreasing:
        flags.append(FAIL_THETA)
    if np.any((lam <= 0) | (lam >= 1) | (theta <= 0) | (theta >= 1)):
        flags.append(FAIL_RANGE)

    partial = np.cumsum(lam * theta)
    total, half = float(partial[-1]), float(partial[horizon // 2 - 1])
    growth = (total - half) / half
    if growth < GROWTH_THRESHOLD:
        flags.append(FAIL_GROWTH)

    early = schedule.ratio_at(horizon // 10)
    late = schedule.ratio_at(horizon)
    if not late < early:
        flags.append(FAIL_RATIO)

    return ScheduleReport(
        horizon=horizon,
        theta_decreasing=bool(theta_decreasing),
        divergence_partial_sum=total,
        divergence_growth=float(growth),
        ratio_condition_early=float(early),
        ratio_condition_value=float(late),
        flags=tuple(flags),
    )
