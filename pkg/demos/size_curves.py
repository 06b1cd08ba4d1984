"""Feasible-set sizes against the number of samples on K_5.

Prints the empirical inner/outer sizes next to their expectations, using
both the estimated win probabilities and the symmetric shortcut.

Run: python3 demos/size_curves.py
"""

from ilpmine import analysis
from ilpmine.tasks import mst

U = mst.edge_count_universe(5)
T = mst.enumerate_spanning_trees(5)
mask = mst.spanning_tree_mask(U, 5)
M, N = len(T), len(U)
ks = [0, 1, 5, 10, 50, 100, 200, 500, 1000, 2000]

curve = analysis.empirical_sizes(mst.gen_mst_dataset(5, ks[-1], seed=3), U, T, ks)
p = analysis.estimate_p(U, T, 20000, seed=4, sampler=analysis.mst_weight_sampler(5))
ei, eo = analysis.expected_sizes(M, p[mask], p[~mask], ks)
si, so = analysis.symmetric_expected_sizes(M, N, ks)

print(f"M={M} trees, N={N} edge sets of size 4")
print(f"{'k':>5} {'inner':>6} {'E[inner]':>9} {'outer':>6} {'E[outer]':>9} {'symmetric':>10}")
for row in zip(ks, curve.inner_sizes, ei, curve.outer_sizes, eo, so):
    print("{:5d} {:6d} {:9.1f} {:6d} {:9.1f} {:10.1f}".format(*row))
