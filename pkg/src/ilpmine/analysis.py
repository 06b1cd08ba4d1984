"""Feasible-set size study: empirical inner/outer sizes against expectations.

With ``p_i`` the probability that point ``i`` is the best feasible point
(for feasible ``i``) or beats every feasible point (for infeasible ``i``)
under a random weight draw, after ``k`` samples

    E|inner| = M - sum_{i feasible} (1 - p_i)**k
    E|outer| = M + sum_{j infeasible} (1 - p_j)**k

The data-symmetric approximation sets ``p = 1/M`` on feasible points and
``p = 1/(M + 1)`` on infeasible ones.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Sample, int_matmul, scaled_integers

__all__ = [
    "UNIVERSE_LIMIT",
    "estimate_p",
    "expected_sizes",
    "symmetric_expected_sizes",
    "SizeCurve",
    "empirical_sizes",
    "inner_band",
    "outer_band",
    "p_histogram",
    "write_curve_csv",
    "write_histogram_csv",
    "mst_weight_sampler",
    "simulate_inner_sizes",
]

UNIVERSE_LIMIT = 10**6


def mst_weight_sampler(n_nodes: int) -> Callable:
    """Draws of ``-distances`` for ``K_n`` on the same dyadic grid as the generator."""
    d = n_nodes * (n_nodes - 1) // 2
    grid = 1 << 52

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        return -(rng.integers(-grid, grid, size=(size, d), endpoint=True) / grid)

    return draw


def estimate_p(points, feasible, n_draws: int | None = None, seed: int = 0,
               sampler: Callable | None = None, weights=None, batch: int = 512,
               joint: bool = False):
    """Monte Carlo estimate of ``p`` for each row of ``points``.

    Weight draws come from ``sampler(rng, size)`` (``n_draws`` of them) or
    are given directly as ``weights``. A feasible point scores when it is
    the best feasible point, ties going to the lower feasible index; any
    other point scores when it is at least as good as every feasible point.

    With ``joint=True`` also returns the matrix of pairwise probabilities
    that two points score in the same draw (at most 5000 points).
    """
    P = np.asarray(points, dtype=np.float64)
    F = np.asarray(feasible, dtype=np.float64)
    if F.shape[0] == 0:
        raise ValueError("feasible set is empty")
    if weights is None:
        if sampler is None or n_draws is None or n_draws < 1:
            raise ValueError("give weights, or a sampler with n_draws >= 1")
        rng = np.random.default_rng(seed)
        chunks = (sampler(rng, min(batch, n_draws - s)) for s in range(0, n_draws, batch))
        total = n_draws
    else:
        W = np.asarray(weights, dtype=np.float64)
        chunks = (W[s:s + batch] for s in range(0, W.shape[0], batch))
        total = W.shape[0]
    fidx = {row.tobytes(): i for i, row in reversed(list(enumerate(np.asarray(feasible, dtype=np.int64))))}
    own = np.array([fidx.get(r.tobytes(), -1) for r in np.asarray(points, dtype=np.int64)])
    if joint and P.shape[0] > 5000:
        raise ValueError("joint probabilities are limited to 5000 points")
    wins = np.zeros(P.shape[0], dtype=np.int64)
    both = np.zeros((P.shape[0],) * 2, dtype=np.int64) if joint else None
    for Wb in chunks:
        fs = Wb @ F.T
        best = fs.max(axis=1)
        arg = fs.argmax(axis=1)  # first maximum: lower index wins ties
        ps = Wb @ P.T
        beat = ps >= best[:, None]
        is_f = own >= 0
        beat[:, is_f] = arg[:, None] == own[None, is_f]
        wins += beat.sum(axis=0)
        if joint:
            B = beat.astype(np.int64)
            both += B.T @ B
    if joint:
        return wins / total, both / total
    return wins / total


def expected_sizes(M: int, p_feasible, p_infeasible, k_values) -> tuple[np.ndarray, np.ndarray]:
    """Expected inner and outer sizes at each ``k``."""
    pf = np.asarray(p_feasible, dtype=float)
    pi = np.asarray(p_infeasible, dtype=float)
    if np.any((pf < 0) | (pf > 1)) or np.any((pi < 0) | (pi > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    ks = np.asarray(k_values, dtype=float)
    inner = np.array([M - _survival(pf, k).sum() for k in ks])
    outer = np.array([M + _survival(pi, k).sum() for k in ks])
    return inner, outer


def _survival(p, k):
    if k == 0:
        return np.ones_like(p)
    with np.errstate(divide="ignore"):
        return np.where(p >= 1, 0.0, np.exp(k * np.log1p(-np.minimum(p, 1.0))))


def symmetric_expected_sizes(M: int, N: int, k_values) -> tuple[np.ndarray, np.ndarray]:
    """Expected sizes with ``p = 1/M`` on feasible and ``1/(M+1)`` on infeasible points."""
    if not N >= M >= 1:
        raise ValueError("need N >= M >= 1")
    ks = np.asarray(k_values, dtype=float)
    inner = M - M * (1 - 1 / M) ** ks
    outer = M + (N - M) * (M / (M + 1)) ** ks
    return inner, outer


@dataclass
class SizeCurve:
    k_values: list
    inner_sizes: list
    outer_sizes: list
    M: int
    N: int
    inner_expect: list = field(default_factory=list)
    outer_expect: list = field(default_factory=list)
    inner_expect_symmetric: list = field(default_factory=list)
    outer_expect_symmetric: list = field(default_factory=list)

    def rows(self):
        for i, k in enumerate(self.k_values):
            yield {
                "k": k,
                "M": self.M,
                "inner_empirical": self.inner_sizes[i],
                "outer_empirical": self.outer_sizes[i],
                "inner_expected": _at(self.inner_expect, i),
                "outer_expected": _at(self.outer_expect, i),
                "outer_expected_symmetric": _at(self.outer_expect_symmetric, i),
            }


def _at(seq, i):
    return float(seq[i]) if len(seq) > i else ""


def empirical_sizes(samples: Iterable[Sample], universe, feasible, k_values,
                    batch: int = 256) -> SizeCurve:
    """Inner and outer sizes after the first ``k`` samples, for each ``k``.

    Inner size is the number of distinct solutions seen; outer size is the
    number of ``universe`` points satisfying every cut ``w_i . z <= w_i . y_i``
    so far, counted exactly.
    """
    U = np.asarray(universe, dtype=np.int64)
    if U.shape[0] > UNIVERSE_LIMIT:
        raise ValueError(f"universe of {U.shape[0]} points exceeds the limit of {UNIVERSE_LIMIT}")
    ks = sorted(set(int(k) for k in k_values))
    if ks and ks[0] < 0:
        raise ValueError("k values must be non-negative")
    samples = list(samples)
    if ks and ks[-1] > len(samples):
        raise ValueError(f"k={ks[-1]} exceeds the {len(samples)} available samples")
    alive = np.arange(U.shape[0])
    seen = set()
    inner_sizes, outer_sizes = [], []
    pos = 0
    for k in ks:
        while pos < k:
            chunk = samples[pos:min(k, pos + batch)]
            for s in chunk:
                seen.add(s.y.tobytes())
            if alive.size:
                W = np.vstack([s.w for s in chunk]) if all(s.w.dtype != object for s in chunk) \
                    else np.array([list(s.w) for s in chunk], dtype=object)
                Wi, _ = scaled_integers(W)
                Y = np.vstack([s.y for s in chunk])
                own = np.array([int_matmul(Wi[i], Y[i]) for i in range(len(chunk))], dtype=Wi.dtype)
                lhs = int_matmul(Wi, U[alive].T)
                ok = np.all(lhs <= own[:, None], axis=0)
                alive = alive[ok]
            pos += len(chunk)
        inner_sizes.append(len(seen))
        outer_sizes.append(int(alive.size))
    return SizeCurve(ks, inner_sizes, outer_sizes, int(np.asarray(feasible).shape[0]), int(U.shape[0]))


def inner_band(p_feasible, k) -> float:
    """Binomial standard deviation of the inner size at ``k``."""
    q = 1 - _survival(np.asarray(p_feasible, dtype=float), k)
    return float(np.sqrt(np.sum(q * (1 - q))))


def outer_band(p_infeasible, k, joint=None) -> float:
    """Standard deviation of the outer size at ``k``.

    Without ``joint`` the survivals are treated as independent. With the
    pairwise probabilities ``joint[j, l]`` that both points beat the
    feasible set in one draw, the covariance of surviving ``k`` draws is
    exact: ``(1 - p_j - p_l + joint[j, l])**k - s_j * s_l``.
    """
    p = np.asarray(p_infeasible, dtype=float)
    s = _survival(p, k)
    if joint is None:
        return float(np.sqrt(np.sum(s * (1 - s))))
    stay = 1 - p[:, None] - p[None, :] + np.asarray(joint, dtype=float)
    both = _survival(np.clip(1 - stay, 0.0, 1.0), k)
    var = float(np.sum(both - np.outer(s, s)))
    return float(np.sqrt(max(var, 0.0)))


def simulate_inner_sizes(p, k_values, n_runs: int, seed: int) -> np.ndarray:
    """Mean distinct-count after ``k`` independent categorical draws with probabilities ``p``."""
    p = np.asarray(p, dtype=float)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    ks = sorted(int(k) for k in k_values)
    out = np.zeros(len(ks))
    for _ in range(n_runs):
        draws = rng.choice(p.size, size=ks[-1] if ks else 0, p=p)
        first = np.full(p.size, np.iinfo(np.int64).max)
        np.minimum.at(first, draws, np.arange(draws.size))
        out += [np.sum(first < k) for k in ks]
    return out / n_runs


def p_histogram(p_values, M: int, bins: int = 20) -> list[dict]:
    """Histogram of ``p`` values with the symmetric reference ``1/(M+1)``."""
    p = np.asarray(p_values, dtype=float)
    hi = max(float(p.max(initial=0.0)), 2.0 / (M + 1))
    counts, edges = np.histogram(p, bins=bins, range=(0.0, hi))
    ref = 1.0 / (M + 1)
    return [{"bin_low": float(a), "bin_high": float(b), "count": int(c), "reference_value": ref}
            for a, b, c in zip(edges[:-1], edges[1:], counts)]


_CURVE_FIELDS = ["k", "M", "inner_empirical", "outer_empirical", "inner_expected",
                 "outer_expected", "outer_expected_symmetric"]


def write_curve_csv(path, curve: SizeCurve):
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=_CURVE_FIELDS, lineterminator="\n")
        wr.writeheader()
        for row in curve.rows():
            wr.writerow(row)


def write_histogram_csv(path, rows: Sequence[dict]):
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=["bin_low", "bin_high", "count", "reference_value"],
                            lineterminator="\n")
        wr.writeheader()
        wr.writerows(rows)
