"""Minimum spanning trees on complete graphs.

Weights are the negated edge distances, so the labelled tree is the
maximizer of ``w . y``. Distances are dyadic rationals on a ``2**-52`` grid
drawn from ``[-1, 1]``, which makes exact tie detection meaningful.
"""

from __future__ import annotations

from itertools import combinations, product
from math import comb

import numpy as np

from ..core import Sample

__all__ = [
    "edge_order",
    "edge_index",
    "MstInstance",
    "random_distances",
    "gen_mst_dataset",
    "mst_oracle",
    "enumerate_spanning_trees",
    "edge_count_universe",
    "is_spanning_tree",
    "spanning_tree_mask",
    "TREE_ENUM_LIMIT",
]

TREE_ENUM_LIMIT = 8
_GRID = 1 << 52


def edge_order(n: int) -> list[tuple[int, int]]:
    """Edges ``(i, j)``, ``i < j``, in lexicographic order."""
    return list(combinations(range(n), 2))


def edge_index(n: int) -> dict:
    return {e: k for k, e in enumerate(edge_order(n))}


def n_nodes_for(d: int) -> int:
    n = int(round((1 + (1 + 8 * d) ** 0.5) / 2))
    if n * (n - 1) // 2 != d:
        raise ValueError(f"{d} is not the edge count of a complete graph")
    return n


class MstInstance:
    """A complete graph with distinct edge distances."""

    def __init__(self, distances):
        D = np.asarray(distances, dtype=float)
        if D.ndim == 1:
            n = n_nodes_for(D.shape[0])
            M = np.zeros((n, n))
            iu = np.triu_indices(n, 1)
            M[iu] = D
            M.T[iu] = D
            D = M
        if D.ndim != 2 or D.shape[0] != D.shape[1] or not np.array_equal(D, D.T):
            raise ValueError("distances must be a symmetric square matrix or an edge vector")
        self.distances = D
        self.n_nodes = D.shape[0]

    @property
    def edge_vector(self) -> np.ndarray:
        return self.distances[np.triu_indices(self.n_nodes, 1)]


def random_distances(n: int, rng: np.random.Generator) -> np.ndarray:
    """Edge-distance vector with pairwise distinct dyadic entries in [-1, 1]."""
    d = n * (n - 1) // 2
    while True:
        v = rng.integers(-_GRID, _GRID, size=d, endpoint=True) / _GRID
        if np.unique(v).size == d:
            return v


def mst_oracle(distances) -> np.ndarray:
    """Edge indicator of the unique minimum spanning tree (Kruskal)."""
    inst = distances if isinstance(distances, MstInstance) else MstInstance(distances)
    n = inst.n_nodes
    dist = inst.edge_vector
    if np.unique(dist).size != dist.size:
        raise ValueError("tied edge distances: the minimum spanning tree is not unique")
    edges = edge_order(n)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    y = np.zeros(len(edges), dtype=np.int64)
    taken = 0
    for k in np.argsort(dist, kind="stable"):
        i, j = edges[k]
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            y[k] = 1
            taken += 1
            if taken == n - 1:
                break
    return y


def gen_mst_dataset(n_nodes: int, n_samples: int, seed: int, prefix="mst") -> list[Sample]:
    """Samples ``(w = -distances, y = MST)`` on ``K_n``; reproducible from ``seed``."""
    if n_nodes < 3:
        raise ValueError("n_nodes must be at least 3")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_samples):
        dist = random_distances(n_nodes, rng)
        out.append(Sample(-dist, mst_oracle(dist), f"{prefix}-{i}"))
    return out


def is_spanning_tree(y, n: int) -> bool:
    """Union-find check: ``n - 1`` edges, no cycle (hence connected)."""
    y = np.asarray(y)
    edges = edge_order(n)
    if y.shape != (len(edges),) or np.any((y != 0) & (y != 1)) or int(y.sum()) != n - 1:
        return False
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for k in np.flatnonzero(y):
        i, j = edges[k]
        ri, rj = find(i), find(j)
        if ri == rj:
            return False
        parent[ri] = rj
    return True


def edge_count_universe(n: int) -> np.ndarray:
    """All 0/1 edge vectors with exactly ``n - 1`` edges, lexicographic by support."""
    d = n * (n - 1) // 2
    size = comb(d, n - 1)
    if size > 10**6:
        raise ValueError(f"universe of {size} points exceeds the enumeration guard")
    idx = np.array(list(combinations(range(d), n - 1)), dtype=np.intp).reshape(size, n - 1)
    U = np.zeros((size, d), dtype=np.int64)
    np.put_along_axis(U, idx, 1, axis=1)
    return U


def enumerate_spanning_trees(n_nodes: int) -> np.ndarray:
    """Every spanning tree of ``K_n`` as an edge indicator row (``n**(n-2)`` rows)."""
    if n_nodes > TREE_ENUM_LIMIT:
        raise ValueError(f"enumeration is limited to n_nodes <= {TREE_ENUM_LIMIT}")
    if n_nodes < 2:
        raise ValueError("n_nodes must be at least 2")
    d = n_nodes * (n_nodes - 1) // 2
    if comb(d, n_nodes - 1) <= 10**6:
        U = edge_count_universe(n_nodes)
        return U[spanning_tree_mask(U, n_nodes)]
    return _prufer_trees(n_nodes)


def _prufer_trees(n: int) -> np.ndarray:
    index = edge_index(n)
    rows = []
    for seq in product(range(n), repeat=n - 2):
        degree = [1] * n
        for v in seq:
            degree[v] += 1
        y = np.zeros(len(index), dtype=np.int64)
        for v in seq:
            leaf = degree.index(1)
            y[index[(min(leaf, v), max(leaf, v))]] = 1
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = [i for i in range(n) if degree[i] == 1]
        y[index[(u, w)]] = 1
        rows.append(y)
    T = np.array(rows)
    # same row order as the universe filter: lexicographic by support
    return T[np.lexsort(T.T[::-1])[::-1]]


def spanning_tree_mask(U: np.ndarray, n: int) -> np.ndarray:
    """Which rows of ``U`` are spanning trees (rows must have ``n - 1`` edges)."""
    # vectorized union-find over all candidate edge sets at once
    edges = edge_order(n)
    m = U.shape[0]
    label = np.tile(np.arange(n), (m, 1))
    ok = np.ones(m, dtype=bool)
    rows = np.arange(m)
    for k, (i, j) in enumerate(edges):
        sel = U[:, k] == 1
        if not sel.any():
            continue
        li = label[rows, i]
        lj = label[rows, j]
        ok &= ~(sel & (li == lj))
        merge = sel & (li != lj)
        hit = merge[:, None] & (label == lj[:, None])
        label = np.where(hit, li[:, None], label)
    return ok
