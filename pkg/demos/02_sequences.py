"""Five-task sequences: widening windows, and windows moved by swaps."""

# %%
import numpy as np

from tsptw_transfer import constraint_violation
from tsptw_transfer.generators import build_sequence, sequence_to_json
from tsptw_transfer.instances import random_dumas_instance

base, ref = random_dumas_instance(20, width=20, seed=5, name="demo20")

# %%
# expansion: a few windows widen at every step, so a feasible tour stays feasible
seq = build_sequence(base, "expansion", seed=1, reference=ref)
for k, task in enumerate(seq.tasks, 1):
    widths = task.b - task.a
    print(f"T{k}: total width {widths[1:].sum():7.1f}  reference CV {constraint_violation(task, ref)}")
print("depot deadline adjustments:", seq.depot_adjustments)

# %%
# swap-additive: two positions of the carried tour swap, and windows are
# rebuilt around its arrival times with half-width = std of those times
swap = build_sequence(base, "swap", seed=1, reference=ref)
for k, (task, tour, delta) in enumerate(zip(swap.tasks[1:], swap.swap_tours, swap.swap_deltas), 2):
    print(f"T{k}: delta {delta:6.2f}  carried tour CV {constraint_violation(task, tour)}  old reference CV {constraint_violation(task, ref)}")

# %%
text = sequence_to_json(seq)
print(len(text), "bytes of JSON;", np.shares_memory(seq.tasks[0].d, seq.tasks[4].d))
