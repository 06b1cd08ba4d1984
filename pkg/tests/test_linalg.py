from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from ilpmine.linalg import (
    ModularEchelon,
    RationalMatrixBasis,
    SparseEchelon,
    certified_kernel,
    in_row_space,
    kernel_basis,
    primitive,
    rref_insert,
    row_space,
)
from ilpmine.tasks.mst import enumerate_spanning_trees


def build(rows, n):
    b = RationalMatrixBasis.empty(n)
    for r in rows:
        b, _ = rref_insert(b, r)
    return b


def sympy_rank(rows, n):
    if not rows:
        return 0
    return sympy.Matrix(rows).rank()


def sympy_rref(rows, n):
    if not rows:
        return []
    R, piv = sympy.Matrix(rows).rref()
    return [[Fraction(int(x.p), int(x.q)) for x in R.row(i)] for i in range(len(piv))]


# --- rref_insert ---------------------------------------------------------------

def test_insert_into_empty_normalizes():
    b, ok = rref_insert(RationalMatrixBasis.empty(3), [2, 4, 6])
    assert ok
    assert b.reduced_rows == [[1, 2, 3]]
    assert b.pivot_columns == (0,)


def test_dependent_row_rejected():
    b = build([[1, 2, 3]], 3)
    b2, ok = rref_insert(b, [2, 4, 6])
    assert not ok
    assert b2 == b


def test_elimination_creates_second_pivot():
    b = build([[1, 0, 0]], 3)
    b2, ok = rref_insert(b, [1, 1, 0])
    assert ok
    assert b2.reduced_rows == [[1, 0, 0], [0, 1, 0]]


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError):
        rref_insert(RationalMatrixBasis.empty(3), [1, 2])


def test_rational_entries():
    b = build([[Fraction(1, 2), Fraction(1, 3), 0], [0, 1, Fraction(-2, 7)]], 3)
    assert b.reduced_rows == sympy_rref([[sympy.Rational(1, 2), sympy.Rational(1, 3), 0],
                                         [0, 1, sympy.Rational(-2, 7)]], 3)


# --- kernel_basis ---------------------------------------------------------------

def test_kernel_of_all_ones_row():
    k = kernel_basis(build([[1, 1, 1]], 3))
    assert len(k) == 2
    for v in k.rows:
        assert sum(v) == 0
    assert sympy.Matrix(list(k.rows)).rank() == 2


def test_kernel_of_identity_is_empty():
    assert len(kernel_basis(build(np.eye(3, dtype=int).tolist(), 3))) == 0


def test_kernel_of_k4_trees():
    trees = enumerate_spanning_trees(4)
    rows = [list(t) + [1] for t in trees]
    # independent oracle: sympy nullspace of the same stack
    ns = sympy.Matrix(rows).nullspace()
    assert len(ns) == 1
    v = ns[0] / ns[0][0]
    assert list(v) == [1, 1, 1, 1, 1, 1, -3]
    k = kernel_basis(build(rows, 7))
    assert k.rows == ((1, 1, 1, 1, 1, 1, -3),)


def test_kernel_rows_primitive_with_positive_lead():
    k = kernel_basis(build([[2, 4, 0, 6], [0, 0, 3, 9]], 4))
    for v in k.rows:
        nz = [x for x in v if x]
        assert nz[0] > 0
        assert np.gcd.reduce(np.abs(nz)) == 1


def test_primitive():
    assert primitive([0, -4, 6]) == [0, 2, -3]
    assert primitive([0, 0]) == [0, 0]


# --- in_row_space -----------------------------------------------------------------

def test_in_row_space_examples():
    b = build([[1, 0, 1]], 3)
    assert in_row_space(b, [2, 0, 2])
    assert not in_row_space(b, [1, 1, 1])
    with pytest.raises(ValueError):
        in_row_space(b, [1, 1])


# --- properties -----------------------------------------------------------------

small_ints = st.integers(-4, 4)


def matrices(max_rows=6, max_cols=6):
    return st.integers(1, max_cols).flatmap(
        lambda n: st.lists(st.lists(small_ints, min_size=n, max_size=n), min_size=0, max_size=max_rows)
        .map(lambda rows: (rows, n)))


@settings(max_examples=150, deadline=None)
@given(matrices())
def test_matches_sympy_rref(data):
    rows, n = data
    b = build(rows, n)
    assert b.rank == sympy_rank(rows, n)
    assert b.reduced_rows == sympy_rref(rows, n)


@settings(max_examples=150, deadline=None)
@given(matrices())
def test_rank_nullity_and_orthogonality(data):
    rows, n = data
    b = build(rows, n)
    k = kernel_basis(b)
    assert b.rank + len(k) == n
    for v in k.rows:
        for r in rows:
            assert sum(x * y for x, y in zip(v, r)) == 0


@settings(max_examples=100, deadline=None)
@given(matrices(), st.randoms(use_true_random=False))
def test_insertion_order_invariance(data, rnd):
    rows, n = data
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert build(rows, n) == build(shuffled, n)


@settings(max_examples=100, deadline=None)
@given(matrices())
def test_idempotent_insertion(data):
    rows, n = data
    b = build(rows, n)
    for r in rows:
        b2, ok = rref_insert(b, r)
        assert not ok and b2 == b


@settings(max_examples=100, deadline=None)
@given(matrices(), st.lists(small_ints, min_size=6, max_size=6))
def test_membership_matches_rank(data, v):
    rows, n = data
    v = v[:n]
    b = build(rows, n)
    assert in_row_space(b, v) == (sympy_rank(rows + [v], n) == sympy_rank(rows, n))


# --- modular and sparse routes agree with the exact one -------------------------------

@settings(max_examples=100, deadline=None)
@given(matrices(max_rows=8, max_cols=7))
def test_certified_kernel_equals_exact(data):
    rows, n = data
    if not rows:
        return
    exact = kernel_basis(row_space(rows, n))
    fast = certified_kernel(np.array(rows, dtype=np.int64), n)
    assert fast is not None
    assert fast.rows == exact.rows


def test_certified_kernel_large_entries(rng):
    for _ in range(20):
        m, n = rng.integers(2, 7), rng.integers(3, 8)
        A = rng.integers(-5000, 5001, size=(m, n))
        fast = certified_kernel(A, n)
        exact = kernel_basis(row_space(A.tolist(), n))
        assert fast is not None and fast.rows == exact.rows


@settings(max_examples=100, deadline=None)
@given(matrices(max_rows=8, max_cols=7), st.lists(small_ints, min_size=7, max_size=7))
def test_sparse_and_modular_membership(data, v):
    rows, n = data
    v = v[:n]
    sp = SparseEchelon(n)
    me = ModularEchelon(n)
    for r in rows:
        sp.insert({i: x for i, x in enumerate(r) if x})
        me.insert(r)
    want = sympy_rank(rows + [v], n) == sympy_rank(rows, n)
    assert sp.rank == sympy_rank(rows, n)
    assert sp.contains({i: x for i, x in enumerate(v) if x}) == want
    # small entries: no prime divides a relevant minor
    assert me.rank == sp.rank
    assert me.contains(v) == want


def test_sparse_echelon_accepts_fractions():
    sp = SparseEchelon(3)
    sp.insert({0: Fraction(1, 2), 2: Fraction(3, 4)})
    assert sp.contains([2, 0, 3])
    assert not sp.contains([1, 0, 3])
