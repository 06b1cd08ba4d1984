import itertools
from fractions import Fraction

import numpy as np
import pytest


def all_binary(d):
    """Every point of {0,1}^d as rows, in lexicographic order."""
    return np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int64)


def brute_force_max(c, A=None, b=None, E=None, f=None, points=None):
    """Exact optimum of ``c . y`` over the 0/1 points meeting the constraints.

    Returns ``(best_value, set_of_maximizers)``, or ``(None, set())`` when
    nothing is feasible.
    """
    c = [Fraction(x) for x in c]
    pts = all_binary(len(c)) if points is None else points
    best, arg = None, set()
    for y in pts:
        yl = [int(v) for v in y]
        if A is not None and any(sum(Fraction(a) * v for a, v in zip(row, yl)) > Fraction(rhs)
                                 for row, rhs in zip(A, b)):
            continue
        if E is not None and any(sum(Fraction(a) * v for a, v in zip(row, yl)) != Fraction(rhs)
                                 for row, rhs in zip(E, f)):
            continue
        val = sum(ci * v for ci, v in zip(c, yl))
        if best is None or val > best:
            best, arg = val, {tuple(yl)}
        elif val == best:
            arg.add(tuple(yl))
    return best, arg


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def sudoku_train():
    from ilpmine.tasks.sudoku import gen_sudoku_dataset
    return gen_sudoku_dataset(1000, seed=2024)


@pytest.fixture(scope="session")
def sudoku_eq(sudoku_train):
    from ilpmine.miner import mine_equalities
    return mine_equalities(sudoku_train)


# acceptance criterion number -> (passed, detail); printed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{ok} criterion {n}: {detail}")
