"""Instances, schedule simulation and the metered penalized-score objective.

A tour is a permutation of all cities. It is not anchored at the depot: the
schedule always starts at the first city of the permutation with arrival
time 0, and the closing leg back to that city adds travel cost only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "BudgetExhausted",
    "InvalidInstanceError",
    "InvalidTourError",
    "Instance",
    "MeteredEvaluator",
    "Schedule",
    "Tour",
    "constraint_violation",
    "evaluate_tour",
    "penalized_score",
    "simulate_schedule",
    "tour_cost",
]

DEFAULT_BUDGET = 100_000


class InvalidInstanceError(ValueError):
    pass


class InvalidTourError(ValueError):
    pass


class BudgetExhausted(Exception):
    """Raised when a score is requested from an evaluator with no budget left.

    This is a stop signal, not a failure: solvers catch it and return the best
    tour seen so far.
    """


@dataclass(frozen=True, eq=False)
class Instance:
    """A TSPTW instance: travel-time matrix plus one [a, b] window per city."""

    d: np.ndarray
    a: np.ndarray
    b: np.ndarray
    depot: int = 0
    name: str = ""

    def __post_init__(self):
        if isinstance(self.d, np.ndarray) and self.d.dtype == np.float64 and not self.d.flags.writeable:
            d = self.d  # already frozen; share it between related tasks
        else:
            d = np.array(self.d, dtype=float)
        a = np.array(self.a, dtype=float).reshape(-1)
        b = np.array(self.b, dtype=float).reshape(-1)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidInstanceError(f"travel-time matrix must be square, got shape {d.shape}")
        n = d.shape[0]
        if n < 2:
            raise InvalidInstanceError("an instance needs at least 2 cities")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InvalidInstanceError("travel times must be finite and non-negative")
        if np.any(np.diag(d) != 0):
            raise InvalidInstanceError("travel time from a city to itself must be 0")
        if a.shape != (n,) or b.shape != (n,):
            raise InvalidInstanceError(f"expected {n} time windows, got {a.shape[0]} / {b.shape[0]}")
        if np.any(np.isnan(a)) or np.any(np.isnan(b)):
            raise InvalidInstanceError("time windows must not contain NaN")
        if np.any(a < 0) or np.any(a > b):
            bad = int(np.flatnonzero((a < 0) | (a > b))[0])
            raise InvalidInstanceError(f"invalid window for city {bad}: [{a[bad]}, {b[bad]}]")
        if not 0 <= self.depot < n:
            raise InvalidInstanceError(f"depot index {self.depot} out of range")
        for arr in (d, a, b):
            arr.flags.writeable = False
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "depot", int(self.depot))

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def windows(self) -> list[tuple[float, float]]:
        return list(zip(self.a.tolist(), self.b.tolist()))

    @cached_property
    def penalty(self) -> float:
        """Sum of all matrix entries; one unit of lateness costs this much."""
        return float(self.d.sum())

    @cached_property
    def _lists(self):
        # plain lists are much faster than ndarray indexing in the scalar loop
        return self.d.tolist(), self.a.tolist(), self.b.tolist()

    def with_windows(self, a, b, name: str | None = None) -> "Instance":
        """Same cities and matrix (shared, not copied) with new windows."""
        return Instance(self.d, a, b, depot=self.depot, name=self.name if name is None else name)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.depot == other.depot
            and np.array_equal(self.d, other.d)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )

    __hash__ = None

    def __repr__(self):
        return f"Instance(name={self.name!r}, n={self.n}, depot={self.depot})"


@dataclass(frozen=True)
class Schedule:
    arrivals: tuple[float, ...]
    service_starts: tuple[float, ...]


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    cost: float
    cv: float
    score: float

    @property
    def feasible(self) -> bool:
        return self.cv == 0


def _check_order(instance: Instance, order: Sequence[int]) -> list[int]:
    try:
        order = [int(c) for c in order]
    except (TypeError, ValueError) as exc:
        raise InvalidTourError(f"tour must be a sequence of city indices: {exc}") from None
    n = instance.n
    if len(order) != n or set(order) != set(range(n)):
        raise InvalidTourError(f"tour is not a permutation of 0..{n - 1}: {order}")
    return order


def _cost_cv(instance: Instance, order: Sequence[int]) -> tuple[float, float]:
    rows, a, b = instance._lists
    first = order[0]
    s = a[first]  # arrival at the first city is 0 and windows start at >= 0
    cv = s - b[first] if s > b[first] else 0.0
    cost = 0.0
    prev = first
    for i in range(1, len(order)):
        c = order[i]
        dt = rows[prev][c]
        cost += dt
        t = s + dt
        ac = a[c]
        s = t if t > ac else ac
        bc = b[c]
        if s > bc:
            cv += s - bc
        prev = c
    cost += rows[prev][first]
    return cost, cv


def simulate_schedule(instance: Instance, order: Sequence[int]) -> Schedule:
    """Arrival and service-start times for each tour position."""
    order = _check_order(instance, order)
    rows, a, _ = instance._lists
    arrivals, starts = [0.0], [max(0.0, a[order[0]])]
    for prev, c in zip(order, order[1:]):
        t = starts[-1] + rows[prev][c]
        arrivals.append(t)
        starts.append(max(t, a[c]))
    return Schedule(tuple(arrivals), tuple(starts))


def constraint_violation(instance: Instance, order: Sequence[int]) -> float:
    """Total lateness of the tour; 0 exactly when every service start meets its deadline."""
    order = _check_order(instance, order)
    return _cost_cv(instance, order)[1]


def tour_cost(instance: Instance, order: Sequence[int]) -> float:
    """Travel time around the closed tour. Does not consume budget."""
    order = _check_order(instance, order)
    return _cost_cv(instance, order)[0]


def evaluate_tour(instance: Instance, order: Sequence[int]) -> Tour:
    """Unmetered evaluation, for reporting only."""
    order = _check_order(instance, order)
    cost, cv = _cost_cv(instance, order)
    return Tour(tuple(order), cost, cv, cost + cv * instance.penalty)


@dataclass(eq=False)
class MeteredEvaluator:
    """Penalized-score oracle with a hard function-evaluation budget.

    Every call to :meth:`score` costs one evaluation. The evaluator also keeps
    the best tour it has ever scored, so a solver's outcome can never be
    worse than anything it looked at.
    """

    instance: Instance
    budget: int = DEFAULT_BUDGET
    used: int = 0
    best_order: tuple[int, ...] | None = None
    best_score: float = math.inf
    best_cost: float = math.inf
    best_cv: float = math.inf
    trajectory: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        self.penalty = self.instance.penalty

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def _charge(self, order, validate):
        if self.used >= self.budget:
            raise BudgetExhausted(f"budget of {self.budget} evaluations exhausted")
        if validate:
            order = _check_order(self.instance, order)
        cost, cv = _cost_cv(self.instance, order)
        self.used += 1
        value = cost + cv * self.penalty
        if value < self.best_score:
            self.best_score, self.best_cost, self.best_cv = value, cost, cv
            self.best_order = tuple(order)
            self.trajectory.append((self.used, value))
        return order, cost, cv, value

    def score(self, order: Sequence[int], validate: bool = True) -> float:
        return self._charge(order, validate)[3]

    def evaluate(self, order: Sequence[int], validate: bool = True) -> Tour:
        """Like :meth:`score` (one evaluation) but returns the full breakdown."""
        order, cost, cv, value = self._charge(order, validate)
        return Tour(tuple(order), cost, cv, value)

    __call__ = score

    def best_tour(self) -> Tour | None:
        if self.best_order is None:
            return None
        return Tour(self.best_order, self.best_cost, self.best_cv, self.best_score)


def penalized_score(evaluator: MeteredEvaluator, order: Sequence[int]) -> float:
    """Tour cost plus total lateness times the instance penalty; costs one evaluation."""
    return evaluator.score(order)
