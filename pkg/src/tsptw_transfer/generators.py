"""Five-task sequences built from one base instance.

Two environments are supported:

* ``expansion``: each task widens the windows of a small random subset of
  non-depot cities of its predecessor.
* ``swap``: each task rebuilds every window around the arrival times of a
  feasible reference tour after a few random position swaps.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Instance, InvalidTourError, constraint_violation, simulate_schedule

__all__ = [
    "DegenerateInstanceError",
    "ExpansionParams",
    "ExpansionResult",
    "GenerationFailed",
    "PreconditionError",
    "SwapParams",
    "SwapResult",
    "TaskSequence",
    "build_sequence",
    "expand_windows",
    "selection_bounds",
    "sequence_from_json",
    "sequence_to_json",
    "swap_additive_windows",
]

ENVIRONMENTS = ("expansion", "swap")
N_TASKS = 5


class DegenerateInstanceError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class GenerationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class ExpansionParams:
    rho: float = 0.3
    select_lo: float = 0.10
    select_hi: float = 0.15

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        if not 0 < self.select_lo <= self.select_hi < 1:
            raise ValueError("need 0 < select_lo <= select_hi < 1")


def population_std(times: np.ndarray) -> float:
    return float(np.std(times))


@dataclass(frozen=True)
class SwapParams:
    """``delta`` overrides the half-width; by default it is the population
    standard deviation of the swapped tour's arrival times."""

    k: int = 1
    delta: float | None = None
    wait: bool = True

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be non-negative")

    def half_width(self, times: np.ndarray) -> float:
        return population_std(times) if self.delta is None else float(self.delta)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def selection_bounds(n: int, params: ExpansionParams) -> tuple[int, int]:
    """Inclusive range for the number of non-depot cities widened per step."""
    # round first: 0.1 * 30 == 3.0000000000000004 would otherwise ceil to 4
    lo = max(1, math.ceil(round(params.select_lo * n, 9)))
    hi = max(lo, math.floor(round(params.select_hi * n, 9)))
    return min(lo, n - 1), min(hi, n - 1)


def completion_time(instance: Instance, order: Sequence[int]) -> float:
    """Time at which the tour gets back to its first city."""
    sched = simulate_schedule(instance, order)
    return sched.service_starts[-1] + float(instance.d[order[-1], order[0]])


@dataclass(frozen=True)
class ExpansionResult:
    instance: Instance
    selected: tuple[int, ...]
    # new depot closing time minus old; None when no reference tour was given
    depot_adjustment: float | None


def expand_windows(
    prev: Instance,
    params: ExpansionParams = ExpansionParams(),
    rng_seed=None,
    reference: Sequence[int] | None = None,
) -> ExpansionResult:
    """Widen the windows of a random subset of non-depot cities.

    If a reference tour is given, the depot closing time is raised (never
    lowered) to the time that tour returns to its first city under the new
    windows.
    """
    n = prev.n
    if n < 3:
        raise DegenerateInstanceError("window expansion needs at least 3 cities")
    rng = _rng(rng_seed)
    lo, hi = selection_bounds(n, params)
    size = int(rng.integers(lo, hi + 1))
    candidates = np.array([i for i in range(n) if i != prev.depot])
    chosen = rng.choice(candidates, size=size, replace=False)

    a = prev.a.copy()
    b = prev.b.copy()
    width = b[chosen] - a[chosen]
    # ell and u drawn as U(0, 1) then scaled, so rho = 0 leaves windows intact
    ell = rng.uniform(0.0, 1.0, size) * params.rho * width
    u = rng.uniform(0.0, 1.0, size) * params.rho * width
    a[chosen] = np.maximum(0.0, a[chosen] - ell)
    b[chosen] = b[chosen] + u

    adjustment = None
    if reference is not None:
        widened = prev.with_windows(a, b)
        closing = max(b[prev.depot], completion_time(widened, reference))
        adjustment = float(closing - b[prev.depot])
        b[prev.depot] = closing
    return ExpansionResult(prev.with_windows(a, b), tuple(sorted(int(c) for c in chosen)), adjustment)


@dataclass(frozen=True)
class SwapResult:
    instance: Instance
    swapped: tuple[int, ...]
    times: tuple[float, ...]
    delta: float


def swap_additive_windows(
    reference_tour: Sequence[int],
    instance: Instance,
    params: SwapParams = SwapParams(),
    rng_seed=None,
) -> SwapResult:
    """Rebuild every window around the arrival times of a perturbed tour.

    The reference tour is copied and ``params.k`` uniformly chosen pairs of
    positions are swapped. Arrival times of the swapped tour are taken
    under the *old* windows (with waiting unless ``params.wait`` is off, in
    which case they are plain cumulative travel times). City at position i
    gets ``[max(0, t_i - delta), t_i + delta]``.
    """
    order = [int(c) for c in getattr(reference_tour, "order", reference_tour)]
    try:
        cv = constraint_violation(instance, order)
    except InvalidTourError as exc:
        raise PreconditionError(str(exc)) from None
    if cv != 0:
        raise PreconditionError(f"reference tour is infeasible (CV={cv})")
    rng = _rng(rng_seed)
    n = instance.n
    for _ in range(params.k):
        i1, i2 = rng.choice(n, size=2, replace=False)
        order[i1], order[i2] = order[i2], order[i1]

    if params.wait:
        times = np.array(simulate_schedule(instance, order).arrivals)
    else:
        legs = [instance.d[p, c] for p, c in zip(order, order[1:])]
        times = np.concatenate([[0.0], np.cumsum(legs)])
    delta = params.half_width(times)
    a = np.empty(n)
    b = np.empty(n)
    a[order] = np.maximum(0.0, times - delta)
    b[order] = times + delta
    return SwapResult(instance.with_windows(a, b), tuple(order), tuple(times.tolist()), delta)


@dataclass(eq=False)
class TaskSequence:
    tasks: list[Instance]
    environment: str
    base_name: str
    seed: int | None
    params: dict = field(default_factory=dict)
    reference: tuple[int, ...] | None = None
    swap_tours: list[tuple[int, ...]] = field(default_factory=list)
    swap_deltas: list[float] = field(default_factory=list)
    depot_adjustments: list[float | None] = field(default_factory=list)

    def __post_init__(self):
        if self.environment not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {self.environment!r}")
        if len(self.tasks) != N_TASKS:
            raise ValueError(f"a task sequence has exactly {N_TASKS} tasks")
        first = self.tasks[0]
        for t in self.tasks[1:]:
            if t.n != first.n or t.depot != first.depot or not np.array_equal(t.d, first.d):
                raise ValueError("tasks must share the city set and travel-time matrix")

    @property
    def n(self) -> int:
        return self.tasks[0].n

    @property
    def name(self) -> str:
        return f"{self.base_name}.{self.environment}"


def build_sequence(
    base: Instance,
    environment: str,
    seed,
    reference: Sequence[int] | None = None,
    expansion: ExpansionParams = ExpansionParams(),
    swap: SwapParams = SwapParams(),
    reference_budget: int = 20_000,
    find_reference: Callable | None = None,
) -> TaskSequence:
    """T_1 is ``base``; T_2..T_5 are generated each from its predecessor.

    In the swap environment a feasible reference tour for T_1 is required.
    If none is given, a short seeded VNS run looks for one (override with
    ``find_reference``); :class:`GenerationFailed` is raised if it fails.
    """
    if environment not in ENVIRONMENTS:
        raise ValueError(f"unknown environment {environment!r}")
    seed_seq = np.random.SeedSequence(seed)
    step_seeds = seed_seq.spawn(N_TASKS)
    if reference is not None:
        reference = tuple(int(c) for c in getattr(reference, "order", reference))

    tasks = [base]
    swap_tours: list[tuple[int, ...]] = []
    deltas: list[float] = []
    adjustments: list[float | None] = []

    if environment == "expansion":
        for k in range(1, N_TASKS):
            res = expand_windows(tasks[-1], expansion, np.random.default_rng(step_seeds[k]), reference)
            tasks.append(res.instance)
            adjustments.append(res.depot_adjustment)
        params = {"expansion": asdict(expansion)}
    else:
        if reference is None:
            reference = _search_reference(base, step_seeds[0], reference_budget, find_reference)
        elif constraint_violation(base, reference) != 0:
            raise GenerationFailed("supplied reference tour is infeasible on the base instance")
        current = reference
        for k in range(1, N_TASKS):
            res = swap_additive_windows(current, tasks[-1], swap, np.random.default_rng(step_seeds[k]))
            tasks.append(res.instance)
            swap_tours.append(res.swapped)
            deltas.append(res.delta)
            current = res.swapped
        params = {"swap": asdict(swap)}

    named = [t.with_windows(t.a, t.b, name=f"{base.name}.T{k + 1}") for k, t in enumerate(tasks)]
    return TaskSequence(
        tasks=named,
        environment=environment,
        base_name=base.name,
        seed=None if seed is None else int(seed),
        params=params,
        reference=reference,
        swap_tours=swap_tours,
        swap_deltas=deltas,
        depot_adjustments=adjustments,
    )


def _search_reference(base: Instance, seed, budget: int, find_reference) -> tuple[int, ...]:
    if find_reference is None:
        from .core import MeteredEvaluator
        from .solvers import SolverConfig, vns_solve

        rs = int(np.random.default_rng(seed).integers(2**31))
        outcome = vns_solve(MeteredEvaluator(base, budget), SolverConfig(algorithm="vns", seed=rs))
        tour = outcome.best if outcome.feasible else None
    else:
        tour = find_reference(base)
    if tour is None:
        raise GenerationFailed(
            f"no feasible reference tour found for {base.name!r}; supply one explicitly"
        )
    order = tuple(int(c) for c in getattr(tour, "order", tour))
    if constraint_violation(base, order) != 0:
        raise GenerationFailed("reference tour is infeasible on the base instance")
    return order


FORMAT_VERSION = 1


def sequence_to_json(seq: TaskSequence) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "base_name": seq.base_name,
        "environment": seq.environment,
        "seed": seq.seed,
        "params": seq.params,
        "depot": seq.tasks[0].depot,
        "matrix": seq.tasks[0].d.tolist(),
        "windows": [[list(w) for w in t.windows] for t in seq.tasks],
        "reference_tour": None if seq.reference is None else list(seq.reference),
        "swap_tours": [list(t) for t in seq.swap_tours],
        "swap_deltas": list(seq.swap_deltas),
        "depot_adjustments": list(seq.depot_adjustments),
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def sequence_from_json(text: str) -> TaskSequence:
    doc = json.loads(text)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported sequence format version {doc.get('format_version')!r}")
    d = np.array(doc["matrix"], dtype=float)
    d.flags.writeable = False
    base = doc["base_name"]
    tasks = []
    for k, windows in enumerate(doc["windows"]):
        w = np.array(windows, dtype=float).reshape(-1, 2)
        tasks.append(Instance(d, w[:, 0], w[:, 1], depot=doc["depot"], name=f"{base}.T{k + 1}"))
    ref = doc.get("reference_tour")
    return TaskSequence(
        tasks=tasks,
        environment=doc["environment"],
        base_name=base,
        seed=doc["seed"],
        params=doc["params"],
        reference=None if ref is None else tuple(ref),
        swap_tours=[tuple(t) for t in doc["swap_tours"]],
        swap_deltas=list(doc["swap_deltas"]),
        depot_adjustments=list(doc["depot_adjustments"]),
    )
