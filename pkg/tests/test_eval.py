import itertools

import numpy as np
import pytest

from ilpmine.eval import evaluate, mst_is_tree, sudoku_valid, sudoku_view
from ilpmine.tasks import hmc, mst
from ilpmine.tasks.sudoku import decode_y, encode_grid, gen_sudoku_instances

from conftest import all_binary


def edges(n, pairs):
    idx = mst.edge_index(n)
    y = np.zeros(n * (n - 1) // 2, dtype=np.int64)
    for e in pairs:
        y[idx[tuple(sorted(e))]] = 1
    return y


def grid_ok(grid):
    """Second checker: every row, column and box is a permutation of 1..9."""
    g = np.asarray(grid).reshape(9, 9)
    groups = [g[r] for r in range(9)] + [g[:, c] for c in range(9)]
    groups += [g[r:r + 3, c:c + 3].ravel() for r in range(0, 9, 3) for c in range(0, 9, 3)]
    return len(groups) == 27 and all(sorted(x) == list(range(1, 10)) for x in groups)


# --- predicates ---------------------------------------------------------------------

def test_star_is_tree():
    assert mst_is_tree(edges(5, [(0, i) for i in range(1, 5)]))


def test_cycle_with_right_edge_count_is_not_tree():
    # triangle plus one isolated-node edge: 4 edges on K5 but disconnected
    assert not mst_is_tree(edges(5, [(0, 1), (1, 2), (0, 2), (3, 4)]))


def test_wrong_length_raises():
    with pytest.raises(ValueError):
        mst_is_tree(np.ones(7, dtype=int))


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_tree_predicate_matches_enumeration(n):
    trees = {t.tobytes() for t in mst.enumerate_spanning_trees(n)}
    d = n * (n - 1) // 2
    pts = all_binary(d) if d <= 10 else mst.edge_count_universe(n)
    got = {p.tobytes() for p in pts if mst_is_tree(p, n)}
    assert got == trees


def test_sudoku_predicate_against_group_checker():
    for inst in gen_sudoku_instances(5, seed=9):
        y = encode_grid(inst.solution)
        assert sudoku_valid(y) and grid_ok(inst.solution)
        g = list(inst.solution)
        g[0], g[1] = g[1], g[0]
        assert sudoku_valid(encode_grid(g)) == grid_ok(g) is False


def test_sudoku_predicate_on_random_grids(rng):
    for _ in range(200):
        g = rng.integers(1, 10, size=81)
        assert sudoku_valid(encode_grid(g)) == grid_ok(g)


def test_sudoku_predicate_rejects_non_one_hot():
    y = encode_grid(gen_sudoku_instances(1, seed=1)[0].solution)
    y[5] = 1 - y[5]
    assert not sudoku_valid(y)
    assert not sudoku_valid(y[:-1])


def test_path_predicate_matches_brute_force():
    spec = hmc.HierarchySpec(2, 3)
    # a root-to-leaf path is one node per layer, each child of the one above
    paths = set()
    for a in range(3):
        for b in range(3):
            y = np.zeros(spec.n_classes, dtype=np.int64)
            y[a] = 1
            y[3 + 3 * a + b] = 1
            paths.add(y.tobytes())
    got = {p.tobytes() for p in all_binary(spec.n_classes) if hmc.hmc_is_path(p, spec)}
    assert got == paths


# --- evaluate ------------------------------------------------------------------------

def test_perfect_predictions():
    gold = [edges(4, [(0, 1), (1, 2), (2, 3)]), edges(4, [(0, 1), (0, 2), (0, 3)])]
    rep = evaluate(gold, gold, mst_is_tree)
    assert (rep.exact_match, rep.element_accuracy, rep.feasibility) == (1.0, 1.0, 1.0)


def test_one_wrong_edge_pair_in_ten():
    rng = np.random.default_rng(0)
    gold = [mst.mst_oracle(mst.random_distances(7, rng)) for _ in range(10)]
    pred = [g.copy() for g in gold]
    on, off = np.flatnonzero(pred[3])[0], np.flatnonzero(pred[3] == 0)[0]
    pred[3][on], pred[3][off] = 0, 1
    rep = evaluate(pred, gold, mst_is_tree)
    assert rep.exact_match == 0.9
    assert rep.element_accuracy == pytest.approx(1 - 2 / (10 * 21), abs=1e-15)


def test_tree_prediction_from_outer_is_exact():
    # a predicted tree on the same weights must be the optimal one
    rng = np.random.default_rng(1)
    gold = [mst.mst_oracle(mst.random_distances(5, rng)) for _ in range(5)]
    rep = evaluate(gold, gold, mst_is_tree)
    assert all(r.em == r.feasible for r in rep.per_instance)


def test_none_prediction_counts_as_wrong():
    g = edges(4, [(0, 1), (1, 2), (2, 3)])
    rep = evaluate([None], [g], mst_is_tree, statuses=["infeasible"])
    r = rep.per_instance[0]
    assert not r.em and not r.feasible and r.status == "infeasible"
    assert r.elem_correct == 3  # three zeros agree with the all-zeros vector
    assert rep.n_infeasible_status == 1


def test_length_mismatch():
    with pytest.raises(ValueError, match="predictions"):
        evaluate([np.zeros(3)], [], mst_is_tree)


def test_permutation_invariant(rng):
    gold = [mst.mst_oracle(mst.random_distances(5, rng)) for _ in range(8)]
    pred = [g if i % 3 else rng.integers(0, 2, size=10) for i, g in enumerate(gold)]
    base = evaluate(pred, gold, mst_is_tree)
    for perm in itertools.islice(itertools.permutations(range(8)), 0, 5000, 997):
        rep = evaluate([pred[i] for i in perm], [gold[i] for i in perm], mst_is_tree)
        assert (rep.exact_match, rep.element_accuracy, rep.feasibility) == \
            (base.exact_match, base.element_accuracy, base.feasibility)


def test_sudoku_entry_level_view_and_blank_mask():
    inst = gen_sudoku_instances(1, seed=3)[0]
    gold = encode_grid(inst.solution)
    g = list(inst.solution)
    blank = [i for i, v in enumerate(inst.givens) if not v]
    a, b = blank[0], next(i for i in blank[1:] if g[i] != g[blank[0]])
    g[a], g[b] = g[b], g[a]
    pred = encode_grid(g)
    rep = evaluate([pred], [gold], sudoku_valid, element_view=sudoku_view)
    assert rep.element_accuracy == pytest.approx(79 / 81)
    mask = [np.array([v == 0 for v in inst.givens])]
    rep = evaluate([pred], [gold], sudoku_valid, element_view=sudoku_view, element_mask=mask)
    assert rep.element_accuracy == pytest.approx(1 - 2 / len(blank))
    assert np.array_equal(decode_y(gold), np.array(inst.solution))


def test_report_serialisation():
    g = edges(3, [(0, 1), (1, 2)])
    rep = evaluate([g], [g], mst_is_tree, ids=["a"], timings=[1.5])
    assert rep.to_json()["timing"] == [1.5]
    assert rep.csv_line("x") == "x,1,1.000000,1.000000,1.000000,0"
