"""A small standard-vs-iterative comparison with the statistics table."""

# %%
from tsptw_transfer.generators import build_sequence
from tsptw_transfer.instances import random_dumas_instance
from tsptw_transfer.protocols import ProtocolPlan, run_plan
from tsptw_transfer.solvers import SolverConfig
from tsptw_transfer.stats import comparison_table, format_value, table_csv

base, ref = random_dumas_instance(40, width=20, seed=7, name="demo40")
seq = build_sequence(base, "expansion", seed=11, reference=ref)

# %%
# 8 repetitions at 5,000 FE per task keeps this under a minute
plan = ProtocolPlan(seq, SolverConfig(algorithm="lns"), repetitions=8, budget=5000, seed_root=1)
records = run_plan(plan)
print(len(records), "records")

# %%
rows = comparison_table(records, seq.name, "lns")
for r in rows:
    it, st = r.iterative, r.standard
    print(
        f"T{r.task}  iter {format_value(it.mean):>8} sr {format_value(it.sr):>4}"
        f"   std {format_value(st.mean):>8} sr {format_value(st.sr):>4}   ({r.stat.verdict}) p={r.stat.p_value:.3f}"
    )

# %%
print(table_csv(rows))
