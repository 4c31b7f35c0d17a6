"""Command-line driver: ``generate`` task sequences, ``solve`` them under both
protocols, ``report`` tables and figure data.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 incomplete
results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import InvalidInstanceError
from .generators import (
    ExpansionParams,
    GenerationFailed,
    SwapParams,
    build_sequence,
    sequence_from_json,
    sequence_to_json,
)
from .instances import ROUNDING_MODES, ParseError, StructuralError, load_instance, random_dumas_instance
from .protocols import PROTOCOLS, ProtocolPlan, RunRecord, records_to_csv, run_plan
from .solvers import SolverConfig
from .stats import IncompleteDataError, comparison_table, figure_aggregates, figures_csv, table_csv

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INCOMPLETE = 0, 2, 3, 4
ENV_NAMES = {"expand": "expansion", "swap": "swap"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    out: str
    seed: int = 0
    environment: str | None = None
    instances: list[str] = field(default_factory=list)
    synthetic: list[int] = field(default_factory=list)
    synthetic_count: int = 2
    synthetic_width: float = 20.0
    rounding: str = "truncate"
    rho: float = 0.3
    swaps: int = 1
    references: str | None = None
    reference_budget: int = 20_000
    sequences: str | None = None
    algorithms: list[str] = field(default_factory=list)
    protocols: list[str] = field(default_factory=list)
    repetitions: int = 30
    budget: int = 100_000
    jobs: int = 1
    timing: bool = False
    results: str | None = None
    alpha: float = 0.05

    def validate(self) -> None:
        for p in self.instances:
            if not Path(p).is_file():
                raise ConfigError(f"instance file not found: {p}")
        for label, p in (("references", self.references), ("sequences", self.sequences), ("results", self.results)):
            if p is not None and not Path(p).exists():
                raise ConfigError(f"{label} path not found: {p}")
        if self.command == "generate" and not (self.instances or self.synthetic):
            raise ConfigError("give --instances and/or --synthetic")
        if self.command == "solve":
            init = SolverConfig().init_samples
            if self.budget < init:
                raise ConfigError(f"budget {self.budget} is below the {init} initialization samples")
            if self.repetitions < 1:
                raise ConfigError("--reps must be at least 1")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")

    def echo(self) -> dict:
        """Resolved config with paths relative to the output directory, so
        identical experiments in different places produce identical files."""
        doc = asdict(self)
        base = Path(self.out).resolve()

        def rel(p):
            return os.path.relpath(Path(p).resolve(), base)

        doc["out"] = "."
        doc["instances"] = [rel(p) for p in self.instances]
        for key in ("references", "sequences", "results"):
            if doc[key] is not None:
                doc[key] = rel(doc[key])
        return doc


def _derive_seed(*ints: int) -> int:
    return int(np.random.SeedSequence(list(ints)).generate_state(1, dtype=np.uint32)[0])


def _dump(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def cmd_generate(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    refs = json.loads(Path(cfg.references).read_text()) if cfg.references else {}
    bases = []
    for path in cfg.instances:
        inst = load_instance(path, cfg.rounding)
        bases.append((inst, refs.get(inst.name)))
    for n in cfg.synthetic:
        for i in range(cfg.synthetic_count):
            name = f"rand{n}.{i + 1}"
            inst, hidden = random_dumas_instance(n, cfg.synthetic_width, _derive_seed(cfg.seed, n, i), name=name)
            bases.append((inst, refs.get(name, hidden)))

    entries = []
    for idx, (base, ref) in enumerate(bases):
        seq_seed = _derive_seed(cfg.seed, 1_000_000 + idx)
        seq = build_sequence(
            base,
            cfg.environment,
            seq_seed,
            reference=ref,
            expansion=ExpansionParams(rho=cfg.rho),
            swap=SwapParams(k=cfg.swaps),
            reference_budget=cfg.reference_budget,
        )
        rel = f"sequences/{seq.name}.json"
        _dump(out / rel, sequence_to_json(seq))
        entries.append({"id": seq.name, "file": rel, "n": seq.n, "environment": seq.environment, "seed": seq_seed})
        _log(f"generate: wrote {rel}")
    manifest = {"config": cfg.echo(), "sequences": entries}
    _dump(out / "manifest.json", json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return EXIT_OK


def cmd_solve(cfg: ExperimentConfig) -> int:
    src = Path(cfg.sequences)
    manifest = json.loads((src / "manifest.json").read_text())
    out = Path(cfg.out)
    records: list[RunRecord] = []
    for idx, entry in enumerate(manifest["sequences"]):
        seq = sequence_from_json((src / entry["file"]).read_text())
        root = _derive_seed(cfg.seed, idx)
        for alg in cfg.algorithms:
            plan = ProtocolPlan(
                seq, SolverConfig(algorithm=alg), cfg.repetitions, cfg.budget, root, sequence_id=entry["id"]
            )

            def progress(i, total, _id=entry["id"], _alg=alg):
                _log(f"solve: {_id} {_alg} {i}/{total}")

            records += run_plan(plan, cfg.protocols, cfg.jobs, progress)
    records.sort(key=RunRecord.sort_key)
    _dump(out / "records.csv", records_to_csv(records, include_time=cfg.timing))
    rec_dicts = []
    for r in records:
        d = asdict(r)
        if not cfg.timing:
            d.pop("wall_time")
        rec_dicts.append(d)
    bundle = {
        "config": cfg.echo(),
        "generation": manifest["config"],
        "sequences": manifest["sequences"],
        "records": rec_dicts,
    }
    _dump(out / "results.json", json.dumps(bundle, sort_keys=True, indent=1) + "\n")
    return EXIT_OK


def cmd_report(cfg: ExperimentConfig) -> int:
    bundle = json.loads(Path(cfg.results).read_text())
    out = Path(cfg.out)
    records = [RunRecord(**{"wall_time": 0.0, **r}) for r in bundle["records"]]
    meta = {s["id"]: s for s in bundle["sequences"]}
    gaps = []
    pairs = sorted({(r.sequence_id, r.algorithm) for r in records})
    for sid, alg in pairs:
        try:
            rows = comparison_table(records, sid, alg, cfg.alpha)
        except IncompleteDataError as exc:
            gaps += exc.gaps
            continue
        _dump(out / "tables" / f"{sid}__{alg}.csv", table_csv(rows))
    for env in sorted({m["environment"] for m in meta.values()}):
        ids = {sid for sid, m in meta.items() if m["environment"] == env}
        subset = [r for r in records if r.sequence_id in ids]
        if not subset:
            continue
        try:
            rows = figure_aggregates(subset, {sid: meta[sid]["n"] for sid in ids}, cfg.alpha)
        except IncompleteDataError as exc:
            gaps += exc.gaps
            continue
        _dump(out / f"figures_{env}.csv", figures_csv(rows))
    missing = sorted({sid for sid in meta} - {r.sequence_id for r in records})
    gaps += [(sid, "no records") for sid in missing]
    if gaps:
        _log(f"report: incomplete results, {len(gaps)} missing cells:")
        for g in sorted(set(gaps), key=str):
            _log(f"  {g}")
        return EXIT_INCOMPLETE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsptw-transfer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build five-task sequences")
    g.add_argument("--instances", nargs="+", default=[], metavar="PATH", help="classic benchmark or JSON instance files")
    g.add_argument("--synthetic", nargs="+", type=int, default=[], metavar="N", help="sizes of random Dumas-style instances")
    g.add_argument("--synthetic-count", type=int, default=2, help="random instances per size")
    g.add_argument("--synthetic-width", type=float, default=20.0, help="maximum window width of random instances")
    g.add_argument("--env", choices=sorted(ENV_NAMES), required=True)
    g.add_argument("--rounding", choices=ROUNDING_MODES, default="truncate", help="distance rounding (default: truncate)")
    g.add_argument("--rho", type=float, default=0.3, help="window expansion rate")
    g.add_argument("--swaps", type=int, default=1, help="position swaps per swap-additive step")
    g.add_argument("--references", metavar="JSON", help="mapping instance name -> feasible tour for T_1")
    g.add_argument("--reference-budget", type=int, default=20_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run both protocols on generated sequences")
    s.add_argument("--sequences", required=True, metavar="DIR", help="output directory of 'generate'")
    s.add_argument("--algo", nargs="+", choices=["lns", "vns"], default=["lns", "vns"])
    s.add_argument("--protocol", choices=["standard", "iterative", "both"], default="both")
    s.add_argument("--budget", type=int, default=100_000, help="function evaluations per task")
    s.add_argument("--reps", type=int, default=30)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--timing", action="store_true", help="also record wall times (breaks byte-identical reruns)")
    s.add_argument("--out", required=True)

    r = sub.add_parser("report", help="tables and figure data from a results bundle")
    r.add_argument("--results", required=True, metavar="JSON")
    r.add_argument("--alpha", type=float, default=0.05)
    r.add_argument("--out", required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(command=args.command, out=args.out)
    if args.command == "generate":
        cfg.environment = ENV_NAMES[args.env]
        cfg.instances = list(args.instances)
        cfg.synthetic = list(args.synthetic)
        cfg.synthetic_count = args.synthetic_count
        cfg.synthetic_width = args.synthetic_width
        cfg.rounding = args.rounding
        cfg.rho = args.rho
        cfg.swaps = args.swaps
        cfg.references = args.references
        cfg.reference_budget = args.reference_budget
        cfg.seed = args.seed
    elif args.command == "solve":
        cfg.sequences = args.sequences
        cfg.algorithms = list(args.algo)
        cfg.protocols = list(PROTOCOLS) if args.protocol == "both" else [args.protocol]
        cfg.budget = args.budget
        cfg.repetitions = args.reps
        cfg.seed = args.seed
        cfg.jobs = args.jobs
        cfg.timing = args.timing
    else:
        cfg.results = args.results
        cfg.alpha = args.alpha
    return cfg


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except (
        ParseError,
        StructuralError,
        InvalidInstanceError,
        GenerationFailed,
        json.JSONDecodeError,
        KeyError,
        FileNotFoundError,
    ) as exc:
        _log(f"data error: {exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
