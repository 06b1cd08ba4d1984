from fractions import Fraction
from math import comb

import numpy as np
import pytest

from ilpmine import analysis
from ilpmine.tasks import mst


def k_universe(n):
    U = mst.edge_count_universe(n)
    T = mst.enumerate_spanning_trees(n)
    return U, T, mst.spanning_tree_mask(U, n)


def test_universe_sizes():
    for n, M in [(4, 16), (5, 125)]:
        U, T, mask = k_universe(n)
        d = n * (n - 1) // 2
        assert len(U) == comb(d, n - 1)
        assert len(T) == M == mask.sum()


# --- expected sizes -----------------------------------------------------------------

def test_k_zero_gives_empty_inner_and_full_outer():
    ei, eo = analysis.expected_sizes(3, [0.2, 0.5, 0.3], [0.1, 0.4], [0])
    assert ei[0] == 0 and eo[0] == 5


def test_certain_points_fill_inner_at_once():
    ei, _ = analysis.expected_sizes(4, [1.0] * 4, [], [1])
    assert ei[0] == 4


def test_expected_sizes_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        analysis.expected_sizes(2, [0.5, 1.5], [], [1])


def test_expected_sizes_match_exact_formula():
    pf = [Fraction(1, 3), Fraction(1, 2), Fraction(1, 6)]
    pi = [Fraction(1, 5), Fraction(1, 10)]
    ks = [0, 1, 2, 7]
    ei, eo = analysis.expected_sizes(3, [float(p) for p in pf], [float(p) for p in pi], ks)
    for k, a, b in zip(ks, ei, eo):
        assert a == pytest.approx(float(3 - sum((1 - p) ** k for p in pf)), abs=1e-12)
        assert b == pytest.approx(float(3 + sum((1 - p) ** k for p in pi)), abs=1e-12)


def test_symmetric_small_case():
    ei, eo = analysis.symmetric_expected_sizes(1, 2, [1])
    assert ei[0] == 1 and eo[0] == 1.5


def test_symmetric_outer_decay_identity():
    M, N = 16807, 54264
    ks = np.array([0, 1, 10, 1000, 20000])
    _, eo = analysis.symmetric_expected_sizes(M, N, ks)
    np.testing.assert_allclose(eo - M, (N - M) * (M / (M + 1)) ** ks, rtol=1e-12)


def test_symmetric_equals_general_with_constant_p():
    ks = [0, 3, 40]
    a = analysis.symmetric_expected_sizes(5, 9, ks)
    b = analysis.expected_sizes(5, [1 / 5] * 5, [1 / 6] * 4, ks)
    np.testing.assert_allclose(a, b)


def test_symmetric_rejects_bad_sizes():
    with pytest.raises(ValueError):
        analysis.symmetric_expected_sizes(3, 2, [1])


def test_inner_expectation_matches_categorical_simulation():
    p = np.array([0.4, 0.3, 0.2, 0.05, 0.05])
    ks = [1, 2, 5, 20, 60]
    sim = analysis.simulate_inner_sizes(p, ks, n_runs=4000, seed=1)
    ei, _ = analysis.expected_sizes(len(p), p, [], ks)
    for k, s, e in zip(ks, sim, ei):
        # standard error of a mean of 4000 counts bounded by band / sqrt(runs)
        assert abs(s - e) <= 4 * analysis.inner_band(p, k) / np.sqrt(4000) + 1e-9


# --- estimate_p ---------------------------------------------------------------------

def test_single_feasible_point_always_wins():
    y = np.array([[1, 0, 1]])
    p = analysis.estimate_p(y, y, weights=np.random.default_rng(0).normal(size=(50, 3)))
    assert p.tolist() == [1.0]


def test_tie_goes_to_lower_index():
    F = np.array([[1, 0], [0, 1]])
    p = analysis.estimate_p(F, F, weights=[[1.0, 1.0]])
    assert p.tolist() == [1.0, 0.0]


def test_estimate_p_needs_draws():
    with pytest.raises(ValueError):
        analysis.estimate_p([[1]], [[1]], n_draws=0, sampler=analysis.mst_weight_sampler(2))
    with pytest.raises(ValueError):
        analysis.estimate_p([[1]], [], weights=[[1.0]])


def test_estimate_p_against_direct_count():
    U, T, mask = k_universe(4)
    W = analysis.mst_weight_sampler(4)(np.random.default_rng(3), 300)
    p = analysis.estimate_p(U, T, weights=W)
    # independent count: loop over draws and points
    want = np.zeros(len(U))
    for w in W:
        fs = [float(w @ t) for t in T]
        best = max(fs)
        win = fs.index(best)
        for i, u in enumerate(U):
            if mask[i]:
                want[i] += int(np.array_equal(u, T[win]))
            else:
                want[i] += float(w @ u) >= best
    np.testing.assert_allclose(p, want / len(W))


def test_feasible_probabilities_sum_to_one():
    U, T, mask = k_universe(5)
    n = 4000
    p = analysis.estimate_p(U, T, n, seed=5, sampler=analysis.mst_weight_sampler(5))
    s = p[mask].sum()
    # exactly one feasible winner per draw
    assert s == pytest.approx(1.0, abs=1e-12)


def test_joint_probabilities_are_consistent():
    U, T, mask = k_universe(4)
    p, J = analysis.estimate_p(U, T, 500, seed=2, sampler=analysis.mst_weight_sampler(4), joint=True)
    np.testing.assert_allclose(np.diag(J), p)
    assert np.all(J <= np.minimum.outer(p, p) + 1e-12)
    # feasible points never co-win
    F = J[np.ix_(mask, mask)]
    assert np.all(F[~np.eye(len(F), dtype=bool)] == 0)


# --- empirical sizes ----------------------------------------------------------------

def test_empirical_k_zero():
    U, T, _ = k_universe(4)
    curve = analysis.empirical_sizes(mst.gen_mst_dataset(4, 5, seed=0), U, T, [0])
    assert (curve.inner_sizes[0], curve.outer_sizes[0]) == (0, 20)


def test_k4_converges_to_ground_truth():
    U, T, _ = k_universe(4)
    data = mst.gen_mst_dataset(4, 600, seed=11)
    curve = analysis.empirical_sizes(data, U, T, [600])
    assert curve.inner_sizes == [16] and curve.outer_sizes == [16]


def test_empirical_matches_exact_rational_scan():
    U, T, _ = k_universe(4)
    data = mst.gen_mst_dataset(4, 12, seed=4)
    ks = [1, 3, 12]
    curve = analysis.empirical_sizes(data, U, T, ks)
    for k, o in zip(ks, curve.outer_sizes):
        cuts = [([Fraction(x) for x in s.w], sum(Fraction(x) * int(v) for x, v in zip(s.w, s.y)))
                for s in data[:k]]
        alive = sum(all(sum(a * int(v) for a, v in zip(w, u)) <= r for w, r in cuts) for u in U)
        assert o == alive


def test_k5_bracket_and_monotone():
    U, T, _ = k_universe(5)
    ks = [10, 50, 100, 500, 2000]
    curve = analysis.empirical_sizes(mst.gen_mst_dataset(5, 2000, seed=8), U, T, ks)
    M, N = 125, 210
    assert all(M <= o <= N for o in curve.outer_sizes)
    assert all(i <= M for i in curve.inner_sizes)
    assert curve.outer_sizes == sorted(curve.outer_sizes, reverse=True)
    assert curve.inner_sizes == sorted(curve.inner_sizes)


def test_empirical_guards():
    U, T, _ = k_universe(4)
    data = mst.gen_mst_dataset(4, 3, seed=0)
    with pytest.raises(ValueError, match="exceeds"):
        analysis.empirical_sizes(data, U, T, [4])
    with pytest.raises(ValueError):
        analysis.empirical_sizes(data, U, T, [-1])


def test_inner_curve_within_band_k5():
    U, T, mask = k_universe(5)
    ks = [10, 50, 200, 1000]
    curve = analysis.empirical_sizes(mst.gen_mst_dataset(5, 1000, seed=21), U, T, ks)
    p = analysis.estimate_p(U, T, 20000, seed=22, sampler=analysis.mst_weight_sampler(5))
    ei, _ = analysis.expected_sizes(125, p[mask], p[~mask], ks)
    for k, emp, e in zip(ks, curve.inner_sizes, ei):
        assert abs(emp - e) <= 3 * analysis.inner_band(p[mask], k) + 1


# --- bands and histogram -------------------------------------------------------------

def test_outer_band_reduces_to_independent_case():
    p = np.array([0.1, 0.2, 0.05])
    J = np.diag(p)
    # zero overlap off the diagonal is not independence; equal to product is
    J_ind = np.outer(p, p)
    np.fill_diagonal(J_ind, p)
    assert analysis.outer_band(p, 7, J_ind) == pytest.approx(analysis.outer_band(p, 7), rel=1e-12)
    assert analysis.outer_band(p, 7, J) < analysis.outer_band(p, 7)


def test_histogram_counts_and_reference(tmp_path):
    rows = analysis.p_histogram([0.0, 0.001, 0.002, 0.5], M=125, bins=4)
    assert sum(r["count"] for r in rows) == 4
    assert all(r["reference_value"] == 1 / 126 for r in rows)
    path = tmp_path / "h.csv"
    analysis.write_histogram_csv(path, rows)
    assert path.read_text().splitlines()[0] == "bin_low,bin_high,count,reference_value"
