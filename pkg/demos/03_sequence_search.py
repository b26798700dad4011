"""Plan a visiting order with UCT tree search and check it by brute force.

The leg costs come from a fixed random table, so the exhaustive answer is
cheap.  Pass a model file (for example ``runs/desk/model.json``) to price
legs with the trained surrogate on real orbits instead.
"""
import sys

import numpy as np

from sailtour import catalog as cat
from sailtour import mcts, net
from sailtour.astro import sample_pseudo_neas
from sailtour.units import CANONICAL

START = CANONICAL.mjd_to_tu(64329.0)
bodies = sample_pseudo_neas(6, 9, START)
targets = {f"PNEA{k:03d}": b for k, b in enumerate(bodies)}

if len(sys.argv) > 1:
    oracle = mcts.SurrogateOracle(net.load_model(sys.argv[1]))
    print(f"leg costs from the surrogate in {sys.argv[1]}")
else:
    rng = np.random.default_rng(0)
    ids = ["Earth", *targets]
    oracle = mcts.MatrixOracle({(a, b): float(rng.uniform(60, 400)) for a in ids for b in targets if a != b})
    print("leg costs from a random table")

problem = mcts.SequenceProblem("Earth", cat.earth_elements(), START, targets, oracle)
truth = mcts.brute_force(problem, 6, stay_days=10.0)
print(f"brute force over 720 orders: {' -> '.join(truth.target_ids)}  {truth.total_days:.1f} d")

for cp in (0.01, 0.5, 5.0):
    cfg = mcts.UctConfig(cp=cp, sims_per_layer=500, max_depth=6, restarts=3, seed=1)
    res = mcts.search_sequence(problem, cfg)
    tag = "optimal" if res.best.target_ids == truth.target_ids else "suboptimal"
    print(f"cp={cp:<5g} best of 3 runs {res.best.total_days:8.1f} d ({tag}); "
          f"runs: {', '.join(f'{t:.1f}' for t in res.restart_totals)}")
