"""Reading, writing and synthesizing TSPTW instances.

Classic benchmark files (Dumas / Langevin families) come in the Solomon
table layout::

    !! n20w20.001 16.75 391
    CUST NO.  XCOORD.  YCOORD.  DEMAND  READY TIME  DUE DATE  SERVICE TIME
        1      16.00    23.00    0.00      0.00      408.00      0.00
        ...
      999       0.00     0.00    0.00      0.00        0.00      0.00

Distances are Euclidean, truncated to integers by default because that is
how these families are usually evaluated: feasibility verdicts depend on it.
The first city listed is the depot. A row with id 999 ends the table.

A second, matrix-based variant is also accepted: a line with the city count,
then that many matrix rows, then one ``ready due`` line per city.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .core import Instance

__all__ = [
    "ParseError",
    "StructuralError",
    "distance_matrix",
    "instance_from_json",
    "instance_to_json",
    "load_instance",
    "parse_benchmark",
    "random_dumas_instance",
    "write_benchmark",
]

ROUNDING_MODES = ("truncate", "round", "exact")
SENTINEL_ID = 999


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class StructuralError(ValueError):
    pass


def distance_matrix(xy: np.ndarray, rounding: str = "truncate") -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    diff = xy[:, None, :] - xy[None, :, :]
    d = np.sqrt((diff**2).sum(axis=-1))
    if rounding == "truncate":
        d = np.floor(d)
    elif rounding == "round":
        d = np.floor(d + 0.5)
    elif rounding != "exact":
        raise ValueError(f"unknown rounding mode {rounding!r}; use one of {ROUNDING_MODES}")
    return d


def _numbers(lineno: int, tokens: list[str]) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ParseError(lineno, f"non-numeric field in {' '.join(tokens)!r}") from None


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_benchmark(path, rounding: str = "truncate", name: str | None = None) -> Instance:
    path = Path(path)
    text = path.read_text()
    name = name or path.stem
    lines = [(i, ln.split()) for i, ln in enumerate(text.splitlines(), 1)]
    lines = [(i, toks) for i, toks in lines if toks]
    if not lines:
        raise StructuralError(f"{path}: empty file")

    first = lines[0][1]
    if len(first) == 1 and first[0].isdigit() and _looks_like_matrix(lines, int(first[0])):
        return _parse_matrix_variant(lines, name)

    rows: list[tuple[int, list[float]]] = []
    declared = None
    in_table = False
    for lineno, toks in lines:
        if not _is_number(toks[0]):
            if in_table:
                raise ParseError(lineno, f"unexpected text inside the city table: {' '.join(toks)!r}")
            continue  # header or comment
        if not in_table and len(toks) == 1:
            declared = int(_numbers(lineno, toks)[0])
            continue
        in_table = True
        if len(toks) != 7:
            raise ParseError(lineno, f"expected 7 fields (id x y demand ready due service), got {len(toks)}")
        vals = _numbers(lineno, toks)
        if int(vals[0]) == SENTINEL_ID:
            break
        rows.append((lineno, vals))

    if len(rows) < 2:
        raise StructuralError(f"{path}: need at least 2 cities, found {len(rows)}")
    ids = [int(v[0]) for _, v in rows]
    start = ids[0]
    if ids != list(range(start, start + len(ids))):
        raise StructuralError(f"{path}: city ids are not consecutive: {ids}")
    if declared is not None and declared != len(rows):
        raise StructuralError(f"{path}: header declares {declared} cities, table has {len(rows)}")
    table = np.array([v for _, v in rows])
    d = distance_matrix(table[:, 1:3], rounding)
    return Instance(d, table[:, 4], table[:, 5], depot=0, name=name)


def _looks_like_matrix(lines, n: int) -> bool:
    # a lone count followed by 7-field rows is a Solomon table with a declared size
    return (len(lines) > 1 and len(lines[1][1]) != 7) or (n == 7 and len(lines) == 1 + 2 * n)


def _parse_matrix_variant(lines, name: str) -> Instance:
    lineno, toks = lines[0]
    n = int(toks[0])
    body = lines[1:]
    if len(body) < 2 * n:
        raise StructuralError(f"declared {n} cities but only {len(body)} data lines follow")
    matrix = []
    for lineno, toks in body[:n]:
        if len(toks) != n:
            raise ParseError(lineno, f"matrix row has {len(toks)} entries, expected {n}")
        matrix.append(_numbers(lineno, toks))
    windows = []
    for lineno, toks in body[n : 2 * n]:
        if len(toks) != 2:
            raise ParseError(lineno, f"expected 'ready due', got {len(toks)} fields")
        windows.append(_numbers(lineno, toks))
    if len(body) > 2 * n:
        raise StructuralError(f"{len(body) - 2 * n} unexpected trailing lines")
    w = np.array(windows)
    return Instance(np.array(matrix), w[:, 0], w[:, 1], depot=0, name=name)


def write_benchmark(instance: Instance, path) -> None:
    """Write the matrix-based variant, which keeps non-Euclidean matrices exact."""
    n = instance.n
    out = [str(n)]
    out += [" ".join(repr(float(x)) for x in row) for row in instance.d]
    out += [f"{a!r} {b!r}" for a, b in instance.windows]
    Path(path).write_text("\n".join(out) + "\n")


def instance_to_json(instance: Instance) -> str:
    doc = {
        "name": instance.name,
        "depot": instance.depot,
        "matrix": instance.d.tolist(),
        "windows": [list(w) for w in instance.windows],
    }
    return json.dumps(doc, sort_keys=True) + "\n"


def instance_from_json(text: str) -> Instance:
    doc = json.loads(text)
    w = np.array(doc["windows"], dtype=float).reshape(-1, 2)
    return Instance(np.array(doc["matrix"], dtype=float), w[:, 0], w[:, 1], depot=doc["depot"], name=doc["name"])


def load_instance(path, rounding: str = "truncate") -> Instance:
    path = Path(path)
    if path.suffix == ".json":
        return instance_from_json(path.read_text())
    return parse_benchmark(path, rounding)


def random_dumas_instance(
    n: int,
    width: float = 20.0,
    seed=None,
    grid: int = 50,
    name: str | None = None,
) -> tuple[Instance, tuple[int, ...]]:
    """Random instance built the way the Dumas family is: integer coordinates
    on a ``grid`` x ``grid`` square, truncated distances, and windows of
    width up to ``width`` placed around the arrival times of a hidden random
    tour that starts at the depot.

    Returns the instance and the hidden tour, which is feasible on it.
    """
    rng = np.random.default_rng(seed)
    xy = rng.integers(0, grid + 1, size=(n, 2))
    d = distance_matrix(xy, "truncate")
    tour = [0] + (1 + rng.permutation(n - 1)).tolist()
    arrival = np.zeros(n)
    t = 0.0
    for prev, city in zip(tour, tour[1:]):
        t += d[prev, city]
        arrival[city] = t
    half = rng.uniform(0.0, width / 2, size=(n, 2))
    a = np.floor(np.maximum(0.0, arrival - half[:, 0]))
    b = np.ceil(arrival + half[:, 1])
    horizon = math.ceil(t + d[tour[-1], 0])
    a[0], b[0] = 0.0, float(max(horizon, b[0]))
    inst = Instance(d, a, b, depot=0, name=name or f"rand{n}w{width:g}")
    return inst, tuple(tour)
