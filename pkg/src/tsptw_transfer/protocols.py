"""Standard (from scratch) and iterative (warm-started) runs over a task sequence."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import DEFAULT_BUDGET, MeteredEvaluator
from .generators import TaskSequence
from .solvers import SolverConfig, solve

__all__ = [
    "PROTOCOLS",
    "ProtocolPlan",
    "RunRecord",
    "read_records_csv",
    "records_to_csv",
    "run_iterative",
    "run_plan",
    "run_repetition",
    "run_standard",
    "seed_plan",
]

PROTOCOLS = ("standard", "iterative")
_PROTOCOL_CODE = {"standard": 1, "iterative": 2}


@dataclass(frozen=True)
class RunRecord:
    sequence_id: str
    task: int
    protocol: str
    algorithm: str
    repetition: int
    seed: int
    score: float
    feasible: bool
    evaluations_used: int
    wall_time: float = 0.0

    def sort_key(self):
        return (self.sequence_id, self.algorithm, PROTOCOLS.index(self.protocol), self.repetition, self.task)


@dataclass
class ProtocolPlan:
    sequence: TaskSequence
    config: SolverConfig
    repetitions: int = 30
    budget: int = DEFAULT_BUDGET
    seed_root: int = 0
    sequence_id: str | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.sequence_id is None:
            self.sequence_id = self.sequence.name


def seed_plan(seed_root: int, protocol: str, task: int, repetition: int) -> int:
    """Seed for one solver run.

    The four indices are hashed together with ``numpy.random.SeedSequence``
    into a 64-bit value. On T_1 the protocol is left out of the hash, so both
    protocols solve T_1 with the same seed and produce identical runs; on the
    transfer tasks every protocol gets its own independent stream.
    """
    if protocol not in _PROTOCOL_CODE:
        raise ValueError(f"unknown protocol {protocol!r}")
    code = 0 if task == 1 else _PROTOCOL_CODE[protocol]
    ss = np.random.SeedSequence([int(seed_root), code, int(task), int(repetition)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_repetition(plan: ProtocolPlan, protocol: str, repetition: int) -> list[RunRecord]:
    """All five tasks of one repetition. Iterative runs hand each task's best
    tour to the next task as its initial tour, feasible or not."""
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    records = []
    warm = None
    for k, task in enumerate(plan.sequence.tasks, 1):
        seed = seed_plan(plan.seed_root, protocol, k, repetition)
        evaluator = MeteredEvaluator(task, plan.budget)
        t0 = time.perf_counter()
        outcome = solve(evaluator, plan.config.with_seed(seed), warm)
        elapsed = time.perf_counter() - t0
        records.append(
            RunRecord(
                sequence_id=plan.sequence_id,
                task=k,
                protocol=protocol,
                algorithm=plan.config.algorithm,
                repetition=repetition,
                seed=seed,
                score=outcome.best.score,
                feasible=outcome.feasible,
                evaluations_used=outcome.evaluations_used,
                wall_time=elapsed,
            )
        )
        if protocol == "iterative":
            warm = outcome.best.order
    return records


def _run_unit(args):
    plan, protocol, rep = args
    return run_repetition(plan, protocol, rep)


def run_plan(
    plan: ProtocolPlan,
    protocols: Sequence[str] = PROTOCOLS,
    jobs: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> list[RunRecord]:
    """Run every (protocol, repetition) of a plan; repetitions are
    independent and may run in worker processes. Output order does not
    depend on ``jobs``."""
    units = [(plan, p, r) for p in protocols for r in range(1, plan.repetitions + 1)]
    records: list[RunRecord] = []
    if jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, recs in enumerate(pool.map(_run_unit, units), 1):
                records.extend(recs)
                if progress:
                    progress(i, len(units))
    else:
        for i, unit in enumerate(units, 1):
            records.extend(_run_unit(unit))
            if progress:
                progress(i, len(units))
    return sorted(records, key=RunRecord.sort_key)


def run_standard(plan: ProtocolPlan, jobs: int = 1) -> list[RunRecord]:
    return run_plan(plan, ("standard",), jobs)


def run_iterative(plan: ProtocolPlan, jobs: int = 1) -> list[RunRecord]:
    return run_plan(plan, ("iterative",), jobs)


CSV_FIELDS = [f.name for f in fields(RunRecord) if f.name != "wall_time"]


def records_to_csv(records: Iterable[RunRecord], include_time: bool = False) -> str:
    """One row per record. Wall time is left out unless asked for, since it
    is the only field that differs between otherwise identical runs."""
    header = CSV_FIELDS + (["wall_time"] if include_time else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in records:
        row = asdict(r)
        row["score"] = repr(float(r.score))
        row["feasible"] = int(r.feasible)
        if include_time:
            row["wall_time"] = f"{r.wall_time:.6f}"
        w.writerow([row[h] for h in header])
    return buf.getvalue()


def read_records_csv(text: str) -> list[RunRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(
            RunRecord(
                sequence_id=row["sequence_id"],
                task=int(row["task"]),
                protocol=row["protocol"],
                algorithm=row["algorithm"],
                repetition=int(row["repetition"]),
                seed=int(row["seed"]),
                score=float(row["score"]),
                feasible=bool(int(row["feasible"])),
                evaluations_used=int(row["evaluations_used"]),
                wall_time=float(row.get("wall_time") or 0.0),
            )
        )
    return out
