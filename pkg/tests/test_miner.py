from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from ilpmine.core import EqualitySystem, Sample
from ilpmine.miner import (
    EqualityMiner,
    InnerPolytope,
    build_outer,
    compute_slacks,
    infer_inner,
    infer_outer,
    inner_insert,
    mine_equalities,
    prune_redundant_cuts,
    verify_implied,
)
from ilpmine.tasks import hmc
from ilpmine.tasks.mst import edge_count_universe, enumerate_spanning_trees, gen_mst_dataset

from conftest import all_binary, brute_force_max


def S(w, y, id=""):
    return Sample(np.array(w, dtype=object) if any(isinstance(x, Fraction) for x in w) else np.array(w), y, id)


# --- mine_equalities ------------------------------------------------------------

def test_single_sample_pins_point():
    eq = mine_equalities([S([0, 0, 0, 0], [1, 0, 1, 1])])
    assert eq.n_rows == 4 and eq.affine_dim == 0
    # the only 0/1 point satisfying the system is the sample
    sols = [tuple(p) for p in all_binary(4) if eq.satisfied_by(p)]
    assert sols == [(1, 0, 1, 1)]


def test_empty_sample_list_raises():
    with pytest.raises(ValueError):
        mine_equalities([])


def test_k4_trees_give_edge_count():
    trees = enumerate_spanning_trees(4)
    eq = mine_equalities([S(np.zeros(6), t) for t in trees])
    assert eq.rows() == [([1, 1, 1, 1, 1, 1], 3)]


def test_k7_trees_imply_edge_count():
    trees = enumerate_spanning_trees(7)
    eq = mine_equalities([S(np.zeros(21), t) for t in trees])
    assert eq.n_rows == 1
    rep = verify_implied(eq, [([1] * 21, 6)])
    assert rep.all_implied


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mined_kernel_matches_sympy(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 9))
    k = int(rng.integers(1, 12))
    Y = rng.integers(0, 2, size=(k, d))
    eq = mine_equalities([S(np.zeros(d), y) for y in Y])
    M = sympy.Matrix(np.hstack([Y, np.ones((k, 1), dtype=int)]).tolist())
    assert eq.n_rows == d + 1 - M.rank()
    assert eq.affine_dim == M.rank() - 1
    for y in Y:
        assert eq.satisfied_by(y)
    # the mined rows span the sympy nullspace
    if eq.n_rows:
        K = np.hstack([eq.w_eq, -eq.c[:, None]])
        assert sympy.Matrix(K.tolist()).rank() == eq.n_rows
        for v in M.nullspace():
            assert sympy.Matrix(K.tolist() + [list(v)]).rank() == eq.n_rows


def test_miner_saturates_and_skips():
    m = EqualityMiner(2)
    for y in [(0, 0), (1, 0), (0, 1), (1, 1), (1, 1)]:
        m.add(y)
    assert m.saturated and m.affine_dim == 2
    assert m.n_samples == 5
    assert m.system().n_rows == 0


def test_equality_soundness_on_held_out_trees():
    train = gen_mst_dataset(5, 300, seed=4)
    eq = mine_equalities(train)
    for t in enumerate_spanning_trees(5):
        assert eq.satisfied_by(t)


# --- slacks and outer polytope ---------------------------------------------------

def test_two_sample_toy_cuts():
    outer = build_outer([S([1, 0], [1, 0]), S([0, 1], [0, 1])])
    assert [list(map(Fraction, w)) for w, _ in outer.cuts] == [[1, 0], [0, 1]]
    assert list(outer.cut_rhs) == [1, 1]


def test_slack_hand_example():
    # w1 = (1, 0) labels (0, 1) although (1, 0) scores 1 more
    s1 = S([1, 0], [0, 1])
    s2 = S([0, 1], [1, 0])
    xi = compute_slacks([s1, s2])
    assert list(xi) == [1, 1]
    xi = compute_slacks([S([1, 0], [1, 0]), S([1, 0], [0, 1])])
    assert list(xi) == [0, 1]


def test_oracle_data_has_zero_slack():
    data = gen_mst_dataset(5, 200, seed=5)
    assert all(x == 0 for x in compute_slacks(data))
    a = build_outer(data, slack=False)
    b = build_outer(data, slack=True)
    assert np.array_equal(a.cut_rhs, b.cut_rhs)


def test_noisy_hmc_has_positive_slack():
    spec = hmc.HierarchySpec(3, 3)
    # a wrong path must outscore the labeled one, a 3.5 sigma event at 0.2
    data = hmc.gen_hmc_dataset(spec, 5000, 0.2, seed=1)
    assert any(x > 0 for x in compute_slacks(data))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_relaxed_cuts_admit_every_training_label(seed):
    rng = np.random.default_rng(seed)
    d, k = int(rng.integers(2, 7)), int(rng.integers(1, 10))
    data = [S(rng.integers(-5, 6, size=d) / 4, rng.integers(0, 2, size=d)) for _ in range(k)]
    outer = build_outer(data, slack=True)
    for s in data:
        assert outer.contains(s.y)
    xi = compute_slacks(data)
    for i, si in enumerate(data):
        own = sum(Fraction(a) * int(b) for a, b in zip(si.w, si.y))
        best = max(sum(Fraction(a) * int(b) for a, b in zip(si.w, sj.y)) for sj in data)
        assert xi[i] == best - own


def test_duplicates_collapse():
    s = S([1, -1, 0.5], [1, 0, 1])
    outer = build_outer([s, s, S([1, -1, 0.5], [1, 0, 1], "other")])
    assert outer.n_cuts == 1


def test_query_equal_training_w_recovers_value():
    data = gen_mst_dataset(5, 100, seed=9)
    outer = build_outer(data)
    for s in data[:10]:
        sol = infer_outer(outer, s.w)
        assert sol.objective_value == s.value()


def test_outer_tree_predictions_are_oracle_trees():
    train = gen_mst_dataset(5, 2000, seed=11)
    outer = build_outer(train)
    for s in gen_mst_dataset(5, 30, seed=12):
        y = infer_outer(outer, s.w).assignment
        if any(np.array_equal(y, t) for t in enumerate_spanning_trees(5)):
            assert np.array_equal(y, s.y)


def test_infer_outer_dimension_check():
    outer = build_outer([S([1, 0], [1, 0])])
    with pytest.raises(ValueError):
        infer_outer(outer, [1, 2, 3])


def test_fix_ones_applies_per_query():
    outer = build_outer([S([1, 1, 1], [1, 1, 0])], eq=mine_equalities([S([0, 0, 0], [1, 1, 0]), S([0, 0, 0], [0, 1, 1])]))
    sol = infer_outer(outer, [0, 0, 1], fix_ones=[2])
    assert sol.assignment.tolist() == [0, 1, 1]
    assert infer_outer(outer, [1, 0, 0]).assignment.tolist() == [1, 1, 0]


# --- nesting and monotonicity on enumerations ----------------------------------------

@pytest.mark.parametrize("n", [4, 5])
def test_nesting_and_monotonicity(n):
    d = n * (n - 1) // 2
    trees = enumerate_spanning_trees(n)
    cube = all_binary(d)
    data = gen_mst_dataset(n, 400, seed=n)
    eq = mine_equalities(data)
    prev_outer, prev_inner = len(cube) + 1, 0
    for k in (1, 5, 20, 100, 400):
        outer = build_outer(data[:k], eq=eq)
        inner = InnerPolytope.from_samples(data[:k])
        member = outer.count_members(cube)
        # S_I vertices and S* sit inside S_O
        pts = {p.tobytes() for p in cube[member]}
        assert all(v.tobytes() in pts for v in inner.vertices)
        assert all(t.tobytes() in pts for t in trees)
        # S_O lies inside the equality-reduced universe
        universe = {u.tobytes() for u in edge_count_universe(n)}
        assert pts <= universe
        assert member.sum() <= prev_outer and len(inner) >= prev_inner
        prev_outer, prev_inner = member.sum(), len(inner)


def test_count_members_agrees_with_contains(rng):
    data = gen_mst_dataset(4, 30, seed=2)
    outer = build_outer(data, eq=mine_equalities(data), slack=True)
    cube = all_binary(6)
    assert outer.count_members(cube).tolist() == [outer.contains(p) for p in cube]


def test_objective_bracket():
    n = 5
    trees = enumerate_spanning_trees(n)
    train = gen_mst_dataset(n, 500, seed=21)
    outer = build_outer(train, eq=mine_equalities(train))
    inner = InnerPolytope.from_samples(train)
    for s in gen_mst_dataset(n, 30, seed=22):
        w = [Fraction(x) for x in s.w]
        truth, _ = brute_force_max(w, points=trees)
        lo = sum(a * int(b) for a, b in zip(w, infer_inner(inner, s.w)))
        hi = infer_outer(outer, s.w).objective_value
        assert lo <= truth <= hi


def test_infer_outer_matches_brute_force_k5():
    train = gen_mst_dataset(5, 300, seed=31)
    outer = build_outer(train)
    # weights are dyadic, so scaling by 2**52 gives an exact integer oracle
    scale = 1 << 52
    A = [[int(Fraction(x) * scale) for x in w] for w in outer.cut_w]
    b = [int(Fraction(r) * scale) for r in outer.cut_rhs]
    feasible = [p for p in all_binary(10)
                if all(sum(a * int(v) for a, v in zip(row, p)) <= rhs for row, rhs in zip(A, b))]
    for s in gen_mst_dataset(5, 200, seed=32):
        best, arg = brute_force_max(list(map(Fraction, s.w)), points=feasible)
        sol = infer_outer(outer, s.w)
        assert sol.objective_value == best
        assert tuple(sol.assignment) in arg


@pytest.mark.parametrize("n,k", [(4, 300), (5, 2000)])
def test_integer_pruning_keeps_feasible_set(n, k):
    data = gen_mst_dataset(n, k, seed=41)
    outer = build_outer(data, eq=mine_equalities(data))
    pruned = prune_redundant_cuts(outer, method="integer")
    assert pruned.n_cuts < outer.n_cuts // 10
    cube = all_binary(n * (n - 1) // 2)
    assert np.array_equal(outer.count_members(cube), pruned.count_members(cube))
    for s in gen_mst_dataset(n, 20, seed=42):
        assert infer_outer(outer, s.w).objective_value == infer_outer(pruned, s.w).objective_value


def test_integer_pruning_with_given_universe():
    data = gen_mst_dataset(5, 500, seed=43)
    outer = build_outer(data)
    U = edge_count_universe(5)
    pruned = prune_redundant_cuts(outer, universe=U)
    assert np.array_equal(outer.count_members(U), pruned.count_members(U))


def test_lp_pruning_is_sound():
    data = gen_mst_dataset(4, 40, seed=3)
    outer = build_outer(data, eq=mine_equalities(data))
    pruned = prune_redundant_cuts(outer, method="lp")
    assert pruned.n_cuts < outer.n_cuts
    cube = all_binary(6)
    assert np.array_equal(outer.count_members(cube), pruned.count_members(cube))


# --- inner polytope ----------------------------------------------------------

def test_inner_examples():
    inner = InnerPolytope(2)
    inner_insert(inner, [1, 0])
    assert infer_inner(inner, [-5, 3]).tolist() == [1, 0]
    inner_insert(inner, [0, 1])
    inner_insert(inner, [1, 0])
    assert len(inner) == 2
    assert infer_inner(inner, [2, 1]).tolist() == [1, 0]
    # tie goes to the earliest vertex
    assert infer_inner(inner, [1, 1]).tolist() == [1, 0]


def test_inner_counts_k4_trees():
    inner = InnerPolytope(6)
    for t in enumerate_spanning_trees(4):
        inner_insert(inner, t)
        inner_insert(inner, t)
    assert len(inner) == 16


def test_inner_errors():
    with pytest.raises(ValueError):
        infer_inner(InnerPolytope(2), [1, 1])
    with pytest.raises(ValueError):
        inner_insert(InnerPolytope(2), [1, 0, 1])


def test_inner_predictions_are_feasible():
    train = gen_mst_dataset(5, 200, seed=51)
    inner = InnerPolytope.from_samples(train)
    trees = {t.tobytes() for t in enumerate_spanning_trees(5)}
    for s in gen_mst_dataset(5, 50, seed=52):
        assert infer_inner(inner, s.w).tobytes() in trees


# --- verify_implied ----------------------------------------------------------

def test_verify_mst_edge_count():
    eq = mine_equalities(gen_mst_dataset(5, 300, seed=61))
    rep = verify_implied(eq, [([1] * 10, 4)], expected_dim=1)
    assert rep.all_implied and rep.dim_match and rep.rank == 1 and rep.affine_dim == 9


def test_verify_two_samples_unrelated_constraint():
    eq = mine_equalities([S([0] * 4, [1, 0, 0, 1]), S([0] * 4, [0, 1, 0, 1])])
    rep = verify_implied(eq, [([1, 1, 1, 1], 3)])
    assert not rep.all_implied and rep.implied == [False]


def test_verify_dict_rows_and_fraction_rhs():
    eq = EqualitySystem(np.array([[2, 2, 0]]), np.array([2]))
    rep = verify_implied(eq, [({0: Fraction(1, 2), 1: Fraction(1, 2)}, Fraction(1, 2)), ({2: 1}, 0)])
    assert rep.implied == [True, False]


def test_verify_methods_agree(rng):
    for _ in range(10):
        Y = rng.integers(0, 2, size=(6, 8))
        eq = mine_equalities([S(np.zeros(8), y) for y in Y])
        rows = [(list(rng.integers(-1, 2, size=8)), int(rng.integers(0, 3))) for _ in range(5)]
        rows += [(list(eq.w_eq[0] * 3), int(eq.c[0]) * 3)] if eq.n_rows else []
        a = verify_implied(eq, rows, method="exact")
        b = verify_implied(eq, rows, method="modular")
        assert a.implied == b.implied and a.rank == b.rank
