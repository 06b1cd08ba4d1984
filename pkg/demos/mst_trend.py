"""Inner, outer and outer+equality inference on spanning trees of K_n.

Run: python3 demos/mst_trend.py [n_nodes] [n_train]
"""

import sys

from ilpmine.eval import evaluate, mst_is_tree
from ilpmine.miner import (InnerPolytope, build_outer, infer_inner, infer_outer, mine_equalities,
                           prune_redundant_cuts)
from ilpmine.tasks import mst

n = int(sys.argv[1]) if len(sys.argv) > 1 else 6
k = int(sys.argv[2]) if len(sys.argv) > 2 else 2000
train = mst.gen_mst_dataset(n, k, seed=1)
test = mst.gen_mst_dataset(n, 200, seed=2)
gold = [s.y for s in test]

eq = mine_equalities(train)
print("mined equalities:", [(row.tolist(), int(c)) for row, c in zip(eq.w_eq, eq.c)])

inner = InnerPolytope.from_samples(train)
outer = prune_redundant_cuts(build_outer(train))
outer_eq = prune_redundant_cuts(build_outer(train, eq=eq))
print(f"{len(inner)} distinct trees seen; {outer.n_cuts} and {outer_eq.n_cuts} cuts kept after pruning")

runs = {
    "inner": [infer_inner(inner, s.w) for s in test],
    "outer": [infer_outer(outer, s.w).assignment for s in test],
    "outer+eq": [infer_outer(outer_eq, s.w).assignment for s in test],
}
for name, pred in runs.items():
    rep = evaluate(pred, gold, mst_is_tree)
    print(f"{name:9s} exact {rep.exact_match:.3f}  edges {rep.element_accuracy:.3f}  feasible {rep.feasibility:.3f}")
