"""Per-cell summaries, Mann-Whitney U comparisons and figure aggregates."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "BETTER",
    "CellSummary",
    "FigureRow",
    "IncompleteDataError",
    "NO_DIFFERENCE",
    "StatVerdict",
    "TableRow",
    "WORSE",
    "comparison_table",
    "figure_aggregates",
    "figures_csv",
    "format_value",
    "mann_whitney",
    "summarize_cell",
    "table_csv",
]

BETTER, WORSE, NO_DIFFERENCE = "+", "-", "*"
TRANSFER_TASKS = (2, 3, 4, 5)
EXACT_BELOW = 8


class IncompleteDataError(ValueError):
    def __init__(self, gaps):
        self.gaps = list(gaps)
        listed = ", ".join(map(str, self.gaps[:10]))
        more = f" (+{len(self.gaps) - 10} more)" if len(self.gaps) > 10 else ""
        super().__init__(f"missing result cells: {listed}{more}")


@dataclass(frozen=True)
class CellSummary:
    mean: float
    std: float
    sr: float
    succ_mu: float | None
    succ_sigma: float | None
    runs: int


def _mean(x: np.ndarray) -> float:
    # centred on the first value so identical runs give that value exactly
    return float(x[0] + np.mean(x - x[0]))


def _std(x: np.ndarray, ddof: int) -> float:
    # a single run has no spread; report 0 rather than NaN
    return float(np.std(x - x[0], ddof=ddof)) if len(x) > ddof else 0.0


def summarize_cell(records, ddof: int = 1) -> CellSummary:
    """Mean/std of penalized scores, feasibility rate, and mean/std over
    feasible runs only (``None`` when no run was feasible)."""
    records = list(records)
    if not records:
        raise ValueError("cannot summarize an empty cell")
    scores = np.array([r.score for r in records], dtype=float)
    ok = np.array([bool(r.feasible) for r in records])
    succ = scores[ok]
    return CellSummary(
        mean=_mean(scores),
        std=_std(scores, ddof),
        sr=float(ok.mean()),
        succ_mu=_mean(succ) if len(succ) else None,
        succ_sigma=_std(succ, ddof) if len(succ) else None,
        runs=len(records),
    )


@dataclass(frozen=True)
class StatVerdict:
    verdict: str
    u_statistic: float
    p_value: float
    alpha: float
    method: str

    @property
    def label(self) -> str:
        return {BETTER: "iterative_better", WORSE: "iterative_worse", NO_DIFFERENCE: "no_difference"}[self.verdict]


def _exact_pvalue(doubled_ranks: np.ndarray, m: int, n: int, dev: int) -> float:
    """P(|2U - mn| >= dev) when ``m`` of the pooled (doubled, tie-averaged)
    ranks are drawn at random, by dynamic programming over rank sums."""
    ranks = [int(r) for r in doubled_ranks]
    top = sum(sorted(ranks)[-m:])
    dp = np.zeros((m + 1, top + 1))
    dp[0, 0] = 1.0
    for r in ranks:
        dp[1:, r:] += dp[:-1, : top + 1 - r].copy()
    sums = np.arange(top + 1)
    devs = np.abs(sums - m * (m + 1) - m * n)
    counts = dp[m]
    return float(min(1.0, counts[devs >= dev].sum() / counts.sum()))


def mann_whitney(sample_a, sample_b, alpha: float = 0.05, method: str = "auto") -> StatVerdict:
    """Two-sided Mann-Whitney U test of ``sample_a`` (iterative) against
    ``sample_b`` (standard); lower scores are better.

    ``method="auto"`` enumerates the exact null distribution (ties included)
    when either side has fewer than 8 observations and otherwise uses the
    normal approximation with tie and continuity corrections.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        raise ValueError("both samples must be non-empty")
    if method == "auto":
        method = "exact" if min(m, n) < EXACT_BELOW else "asymptotic"
    ranks = rankdata(np.concatenate([a, b]))
    u_a = float(ranks[:m].sum() - m * (m + 1) / 2)
    mu = m * n / 2
    if method == "exact":
        doubled = np.rint(2 * ranks).astype(int)
        # enumerate over the smaller side; |2U - mn| is the same for both
        if m <= n:
            p = _exact_pvalue(doubled, m, n, round(abs(2 * u_a - m * n)))
        else:
            p = _exact_pvalue(np.concatenate([doubled[m:], doubled[:m]]), n, m, round(abs(2 * u_a - m * n)))
    elif method == "asymptotic":
        big_n = m + n
        _, counts = np.unique(ranks, return_counts=True)
        ties = float((counts**3 - counts).sum())
        var = m * n / 12 * ((big_n + 1) - ties / (big_n * (big_n - 1)))
        if var <= 0:
            p = 1.0
        else:
            z = max(abs(u_a - mu) - 0.5, 0.0) / math.sqrt(var)
            p = min(1.0, math.erfc(z / math.sqrt(2)))
    else:
        raise ValueError(f"unknown method {method!r}")
    if p < alpha and u_a != mu:
        verdict = BETTER if u_a < mu else WORSE
    else:
        verdict = NO_DIFFERENCE
    return StatVerdict(verdict, u_a, p, alpha, method)


def _cells(records) -> dict:
    cells = defaultdict(list)
    for r in records:
        cells[(r.sequence_id, r.algorithm, r.task, r.protocol)].append(r)
    return cells


@dataclass(frozen=True)
class TableRow:
    sequence_id: str
    algorithm: str
    task: int
    iterative: CellSummary
    standard: CellSummary
    stat: StatVerdict


def comparison_table(records, sequence_id: str, algorithm: str, alpha: float = 0.05, ddof: int = 1) -> list[TableRow]:
    """Rows T_1..T_5 for one sequence and algorithm, iterative vs standard."""
    cells = _cells(records)
    gaps = [
        (sequence_id, algorithm, f"T{k}", p)
        for k in range(1, 6)
        for p in ("iterative", "standard")
        if not cells.get((sequence_id, algorithm, k, p))
    ]
    if gaps:
        raise IncompleteDataError(gaps)
    rows = []
    for k in range(1, 6):
        it = cells[(sequence_id, algorithm, k, "iterative")]
        st = cells[(sequence_id, algorithm, k, "standard")]
        rows.append(
            TableRow(
                sequence_id,
                algorithm,
                k,
                summarize_cell(it, ddof),
                summarize_cell(st, ddof),
                mann_whitney([r.score for r in it], [r.score for r in st], alpha),
            )
        )
    return rows


@dataclass(frozen=True)
class FigureRow:
    algorithm: str
    n: int
    better: float
    none: float
    worse: float
    sr_iter: float
    sr_std: float
    comparisons: int


def figure_aggregates(
    records,
    sizes: Mapping[str, int],
    alpha: float = 0.05,
    tasks: Sequence[int] = TRANSFER_TASKS,
) -> list[FigureRow]:
    """Per (algorithm, size): share of transfer-task comparisons where
    iterative is significantly better / not different / worse, and the mean
    feasibility rate of each protocol over the same cells."""
    records = list(records)
    cells = _cells(records)
    pairs = sorted({(r.sequence_id, r.algorithm) for r in records})
    unknown = sorted({s for s, _ in pairs if s not in sizes})
    if unknown:
        raise IncompleteDataError([(s, "size unknown") for s in unknown])
    gaps = [
        (s, alg, f"T{k}", p)
        for s, alg in pairs
        for k in tasks
        for p in ("iterative", "standard")
        if not cells.get((s, alg, k, p))
    ]
    if gaps:
        raise IncompleteDataError(gaps)

    groups = defaultdict(list)
    for s, alg in pairs:
        groups[(alg, sizes[s])].append(s)
    rows = []
    for (alg, n), seqs in sorted(groups.items()):
        verdicts, sr_it, sr_st = [], [], []
        for s in seqs:
            for k in tasks:
                it = cells[(s, alg, k, "iterative")]
                st = cells[(s, alg, k, "standard")]
                verdicts.append(mann_whitney([r.score for r in it], [r.score for r in st], alpha).verdict)
                sr_it.append(summarize_cell(it).sr)
                sr_st.append(summarize_cell(st).sr)
        total = len(verdicts)
        rows.append(
            FigureRow(
                algorithm=alg,
                n=n,
                better=verdicts.count(BETTER) / total,
                none=verdicts.count(NO_DIFFERENCE) / total,
                worse=verdicts.count(WORSE) / total,
                sr_iter=float(np.mean(sr_it)),
                sr_std=float(np.mean(sr_st)),
                comparisons=total,
            )
        )
    return rows


def format_value(x: float | None) -> str:
    """Compact number style: ``--`` for undefined, ``3.68e5`` for large
    magnitudes, otherwise at most two decimals without trailing zeros."""
    if x is None:
        return "--"
    if x == 0:
        return "0"
    if abs(x) >= 1e4:
        mant, exp = f"{x:.2e}".split("e")
        return f"{mant}e{int(exp)}"
    text = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text


TABLE_HEADER = [
    "instance", "task",
    "iter_mean", "iter_std", "iter_sr", "iter_succ_mu", "iter_succ_sigma",
    "std_mean", "std_std", "std_sr", "std_succ_mu", "std_succ_sigma",
    "stat",
]


def table_csv(rows: Iterable[TableRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for row in rows:
        out = [row.sequence_id, f"T{row.task}"]
        for c in (row.iterative, row.standard):
            out += [format_value(v) for v in (c.mean, c.std, c.sr, c.succ_mu, c.succ_sigma)]
        out.append(row.stat.verdict)
        w.writerow(out)
    return buf.getvalue()


FIGURE_HEADER = ["algorithm", "n", "better", "none", "worse", "sr_iter", "sr_std"]


def figures_csv(rows: Iterable[FigureRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIGURE_HEADER)
    for r in rows:
        w.writerow([r.algorithm, r.n] + [repr(round(v, 6)) for v in (r.better, r.none, r.worse, r.sr_iter, r.sr_std)])
    return buf.getvalue()
