"""Budget-metered LNS and VNS, plus an adapter for external solver processes.

All solvers draw randomness from a ``random.Random`` seeded by
``SolverConfig.seed``; scalar draws from the stdlib generator are much
cheaper than numpy's in these tight loops.
"""

from __future__ import annotations

import math
import random
import shlex
import subprocess
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .core import BudgetExhausted, InvalidTourError, MeteredEvaluator, Tour

__all__ = [
    "EmptyOutcomeError",
    "ProtocolError",
    "SolveOutcome",
    "SolverConfig",
    "external_adapter",
    "initialize",
    "lns_solve",
    "random_move",
    "relocate",
    "run_exchange",
    "solve",
    "two_opt",
    "vns_solve",
]

ALGORITHMS = ("lns", "vns")
VNS_ACCEPT = ("improving", "always")


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "lns"
    init_samples: int = 30
    lns_iters: int = 500
    lns_destroy_frac: float = 0.15
    vns_outer_iters: int = 1000
    vns_shake_moves: int = 1
    vns_local_samples: int = 200
    # "improving": the improved shaken tour replaces the current one only if
    # strictly better; "always": it replaces it unconditionally
    vns_accept: str = "improving"
    # probability that a random move is a relocate rather than a 2-opt
    relocate_prob: float = 0.5
    # with a warm start, also run the random-sample bootstrap and keep the better
    warm_start_sampling: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.init_samples < 1 or self.vns_local_samples < 0 or self.vns_shake_moves < 0:
            raise ValueError("sample and move counts must be positive")
        if self.lns_iters < 0 or self.vns_outer_iters < 0:
            raise ValueError("iteration limits must be non-negative")
        if not 0 < self.lns_destroy_frac < 1:
            raise ValueError("lns_destroy_frac must lie in (0, 1)")
        if self.vns_accept not in VNS_ACCEPT:
            raise ValueError(f"vns_accept must be one of {VNS_ACCEPT}")
        if not 0 <= self.relocate_prob <= 1:
            raise ValueError("relocate_prob must lie in [0, 1]")

    def with_seed(self, seed: int) -> "SolverConfig":
        return replace(self, seed=int(seed))


@dataclass
class SolveOutcome:
    best: Tour
    evaluations_used: int
    feasible: bool
    trajectory: list[tuple[int, float]] = field(default_factory=list)


def _outcome(evaluator: MeteredEvaluator) -> SolveOutcome:
    best = evaluator.best_tour()
    if best is None:
        raise BudgetExhausted("no tour was evaluated")
    return SolveOutcome(best, evaluator.used, best.feasible, list(evaluator.trajectory))


def _order_of(tour) -> list[int]:
    return [int(c) for c in getattr(tour, "order", tour)]


def relocate(order: Sequence[int], i: int, j: int) -> list[int]:
    """Move the city at position ``i`` so that it ends up at position ``j``."""
    out = list(order)
    out.insert(j, out.pop(i))
    return out


def two_opt(order: Sequence[int], i: int, j: int) -> list[int]:
    """Reverse positions ``i..j`` inclusive."""
    if i > j:
        i, j = j, i
    out = list(order)
    out[i : j + 1] = out[i : j + 1][::-1]
    return out


def random_move(order: Sequence[int], rng: random.Random, relocate_prob: float = 0.5) -> list[int]:
    n = len(order)
    if rng.random() < relocate_prob:
        i = rng.randrange(n)
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        return relocate(order, i, j)
    i, j = rng.sample(range(n), 2)
    return two_opt(order, i, j)


def initialize(
    evaluator: MeteredEvaluator,
    config: SolverConfig,
    warm_start=None,
    rng: random.Random | None = None,
) -> Tour:
    """Starting tour: the warm start re-scored on this task, or the best of
    ``init_samples`` uniformly random permutations."""
    if rng is None:
        rng = random.Random(config.seed)
    if evaluator.remaining < 1:
        raise BudgetExhausted("initialization needs at least one evaluation")
    best: Tour | None = None
    if warm_start is not None:
        order = _order_of(warm_start)
        best = evaluator.evaluate(order)
        if not config.warm_start_sampling:
            return best
    n = evaluator.instance.n
    try:
        for _ in range(config.init_samples):
            perm = list(range(n))
            rng.shuffle(perm)
            cand = evaluator.evaluate(perm, validate=False)
            if best is None or cand.score < best.score:
                best = cand
    except BudgetExhausted:
        if best is None:
            raise
    return best


def destroy_size(n: int, frac: float) -> int:
    return min(n, max(1, math.ceil(round(frac * n, 9))))


def lns_solve(evaluator: MeteredEvaluator, config: SolverConfig, warm_start=None) -> SolveOutcome:
    """Destroy-and-repair search.

    Each iteration removes ``destroy_size`` random cities from the current
    tour and greedily reinserts them in removal order. Every insertion
    position is scored as a complete tour, with the cities still waiting to
    be reinserted appended at the end. The repaired tour replaces the
    current one only if it is strictly better.
    """
    rng = random.Random(config.seed)
    start = initialize(evaluator, config, warm_start, rng)
    current, current_score = list(start.order), start.score
    n = len(current)
    k = destroy_size(n, config.lns_destroy_frac)
    score = evaluator.score
    try:
        for _ in range(config.lns_iters):
            removed = rng.sample(current, k)
            gone = set(removed)
            partial = [c for c in current if c not in gone]
            repaired_score = math.inf
            for idx, city in enumerate(removed):
                tail = removed[idx + 1 :]
                best_pos, best_val = 0, math.inf
                for pos in range(len(partial) + 1):
                    val = score(partial[:pos] + [city] + partial[pos:] + tail, False)
                    if val < best_val:
                        best_pos, best_val = pos, val
                partial.insert(best_pos, city)
                repaired_score = best_val
            if repaired_score < current_score:
                current, current_score = partial, repaired_score
    except BudgetExhausted:
        pass
    return _outcome(evaluator)


def vns_solve(evaluator: MeteredEvaluator, config: SolverConfig, warm_start=None) -> SolveOutcome:
    """Shake-then-improve search over relocate and 2-opt moves.

    Each outer iteration shakes the current tour with ``vns_shake_moves``
    random moves, then samples up to ``vns_local_samples`` neighbours,
    moving to any strictly better one immediately. The result replaces the
    current tour if it is better (or always, with ``vns_accept="always"``);
    the global best is kept by the evaluator either way.
    """
    rng = random.Random(config.seed)
    start = initialize(evaluator, config, warm_start, rng)
    current, cur_score = list(start.order), start.score
    p = config.relocate_prob
    accept_all = config.vns_accept == "always"
    score = evaluator.score
    try:
        for _ in range(config.vns_outer_iters):
            x = current
            for _ in range(config.vns_shake_moves):
                x = random_move(x, rng, p)
            x_score = score(x, False)
            for _ in range(config.vns_local_samples):
                y = random_move(x, rng, p)
                y_score = score(y, False)
                if y_score < x_score:
                    x, x_score = y, y_score
            if accept_all or x_score < cur_score:
                current, cur_score = x, x_score
    except BudgetExhausted:
        pass
    return _outcome(evaluator)


def solve(evaluator: MeteredEvaluator, config: SolverConfig, warm_start=None) -> SolveOutcome:
    if config.algorithm == "lns":
        return lns_solve(evaluator, config, warm_start)
    return vns_solve(evaluator, config, warm_start)


class ProtocolError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EmptyOutcomeError(RuntimeError):
    pass


def _parse_candidate(lineno: int, line: str, n: int) -> list[int]:
    head, sep, body = line.partition(":")
    if not sep or head.strip() != "perm":
        raise ProtocolError(lineno, f"expected 'perm: i1 ... in', got {line!r}")
    try:
        order = [int(tok) for tok in body.split()]
    except ValueError:
        raise ProtocolError(lineno, f"non-integer city index in {line!r}") from None
    if len(order) != n or set(order) != set(range(n)):
        raise ProtocolError(lineno, f"not a permutation of 0..{n - 1}")
    return order


def run_exchange(
    lines: Iterable[str],
    evaluator: MeteredEvaluator,
    send: Callable[[str], None],
) -> SolveOutcome:
    """Score candidate tours read from ``lines`` until the stream ends or the
    budget is spent. Replies go through ``send``; see the README for the
    wire format."""
    n = evaluator.instance.n
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if evaluator.remaining <= 0:
            break
        order = _parse_candidate(lineno, line, n)
        try:
            value = evaluator.score(order, validate=False)
        except InvalidTourError as exc:  # pragma: no cover - parse already checks
            raise ProtocolError(lineno, str(exc)) from None
        send(f"score: {value!r}\n")
        if evaluator.remaining <= 0:
            break
    send("stop\n")
    if evaluator.best_order is None:
        raise EmptyOutcomeError("external solver produced no candidate tours")
    return _outcome(evaluator)


def external_adapter(command, evaluator: MeteredEvaluator, timeout: float = 10.0) -> SolveOutcome:
    """Run an external solver process and meter every tour it proposes.

    ``command`` is an argv list or a shell-style string. The process writes
    candidates to stdout and reads scores from stdin.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    proc = subprocess.Popen(
        argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
    )

    def send(msg: str) -> None:
        try:
            proc.stdin.write(msg)
            proc.stdin.flush()
        except (BrokenPipeError, OSError):
            pass

    try:
        return run_exchange(proc.stdout, evaluator, send)
    finally:
        try:
            proc.stdin.close()
        except (BrokenPipeError, OSError):
            pass
        try:
            proc.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
        proc.stdout.close()
