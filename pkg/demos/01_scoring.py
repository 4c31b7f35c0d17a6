"""Scoring tours: schedule, lateness, penalized score, and the FE meter."""

# %%
import itertools

import numpy as np

from tsptw_transfer import MeteredEvaluator, evaluate_tour, simulate_schedule
from tsptw_transfer.instances import random_dumas_instance

inst, hidden = random_dumas_instance(7, width=20, seed=3, name="demo7")
print(inst.name, "n =", inst.n, "penalty weight L =", inst.penalty)
print(np.column_stack([inst.a, inst.b]))

# %%
# the hidden tour is feasible by construction
sched = simulate_schedule(inst, hidden)
print("arrivals      ", sched.arrivals)
print("service starts", sched.service_starts)
print(evaluate_tour(inst, hidden))

# %%
# a reversed tour has the same travel cost on a symmetric matrix but is late
rev = evaluate_tour(inst, hidden[::-1])
print("reversed: cost", rev.cost, "cv", rev.cv, "score", rev.score)

# %%
# every score computation costs one FE; the meter keeps the best seen
ev = MeteredEvaluator(inst, budget=5040)
for perm in itertools.permutations(range(7)):
    ev.score(perm)
print("used", ev.used, "of", ev.budget)
print("exhaustive optimum", ev.best_tour())
