"""Metering a solver that runs in another process.

The adapter reads ``perm: i1 ... in`` lines (0-based) from the solver's
stdout, answers each with ``score: <value>`` and sends ``stop`` when the
budget runs out.
"""

# %%
import sys
import textwrap

from tsptw_transfer import MeteredEvaluator
from tsptw_transfer.instances import random_dumas_instance
from tsptw_transfer.solvers import external_adapter

# a toy random-restart solver: propose, read the score, keep going
SOLVER = textwrap.dedent(
    """
    import random, sys
    n = int(sys.argv[1])
    rng = random.Random(0)
    while True:
        perm = rng.sample(range(n), n)
        print("perm: " + " ".join(map(str, perm)), flush=True)
        reply = sys.stdin.readline().strip()
        if not reply or reply == "stop":
            break
    """
)

inst, _ = random_dumas_instance(10, width=40, seed=2)

# %%
ev = MeteredEvaluator(inst, budget=2000)
out = external_adapter([sys.executable, "-c", SOLVER, str(inst.n)], ev)
print("FE used", out.evaluations_used, "feasible", out.feasible)
print(out.best)
