"""LP-based branch and bound with exact validation of every incumbent.

Branching picks the most fractional variable (lowest index on ties) and
nodes are explored best-bound first, so the search is deterministic. An
integral LP point is accepted only after an integer-arithmetic check
against the original constraints; if the float LP misled us, the node is
re-solved with the exact rational simplex.
"""

from __future__ import annotations

import heapq
import math
import time
from fractions import Fraction

import numpy as np

from ..core import int_matmul, scaled_integers
from .lp import LPNumericalError, solve_lp
from .presolve import Reduction, reduce_system, to_int_system
from .problem import ILPProblem, ILPSolution, NodeBudgetExceeded

__all__ = ["CompiledSystem", "solve_ilp", "DEFAULT_NODE_LIMIT"]

DEFAULT_NODE_LIMIT = 10**6
_INT_TOL = 1e-6


def _row_scaled(M, v):
    """Float copy of ``M x <= v`` with each row scaled to unit max-norm."""
    if M.shape[0] == 0:
        return np.zeros(M.shape), np.zeros(0)
    Mf = M.astype(float)
    vf = np.asarray(v).astype(float)
    scale = np.abs(Mf).max(axis=1)
    scale[scale == 0] = 1.0
    return Mf / scale[:, None], vf / scale


class CompiledSystem:
    """A presolved constraint system ready to be solved for many objectives.

    Presolve never looks at the objective, so the reduction is computed once
    and every call to :meth:`solve` only transforms the objective.
    """

    def __init__(self, problem: ILPProblem, presolve=True, aggregate=True,
                 node_limit=DEFAULT_NODE_LIMIT, lazy_threshold=200, time_limit=None):
        self.dim = problem.dim
        self.node_limit = node_limit
        self.time_limit = time_limit
        self.lazy_threshold = lazy_threshold
        sys = to_int_system(problem)
        self.original = sys
        if presolve:
            self.reduction = reduce_system(sys, aggregate=aggregate)
        else:
            self.reduction = Reduction("ok", sys, sys, np.arange(sys.n), [])
        red = self.reduction.reduced
        if red is not None:
            self.A_lp, self.b_lp = _row_scaled(red.A, red.b)
            self.E_lp, self.f_lp = _row_scaled(red.E, red.f)

    @property
    def infeasible(self) -> bool:
        return self.reduction.status != "ok"

    @property
    def n_free(self) -> int:
        return self.reduction.n_free

    def solve(self, objective) -> ILPSolution:
        if len(objective) != self.dim:
            raise ValueError(f"objective has length {len(objective)}, expected {self.dim}")
        if self.infeasible:
            return ILPSolution("infeasible", nodes_explored=0,
                               stats={"reason": self.reduction.reason})
        c_int, c_scale = scaled_integers(np.asarray(objective) if not isinstance(objective, np.ndarray) else objective)
        c_red, offset = self.reduction.transform_objective(c_int)
        return _branch_and_bound(self, c_int, c_scale, c_red, offset)

    # exact checks -------------------------------------------------------
    def _valid_reduced(self, x):
        return self.reduction.reduced.feasible(x)

    def _restore_checked(self, x):
        full = self.reduction.restore(x)
        if not self.original.feasible(full):
            return None
        return full


def _granularity(c_red, c_scale):
    g = 0
    for v in np.asarray(c_red).flat:
        g = math.gcd(g, int(v))
        if g == 1:
            break
    return g / c_scale if g else math.inf


def _branch_and_bound(cs: CompiledSystem, c_int, c_scale, c_red, offset) -> ILPSolution:
    red = cs.reduction.reduced
    n = red.n
    c_lp = np.asarray(c_red, dtype=object).astype(float) / c_scale if n else np.zeros(0)
    off = Fraction(int(offset), c_scale)
    gran = _granularity(c_red, c_scale)

    incumbent = None
    inc_val = None  # exact Fraction in original objective units
    nodes = 0
    pivots = 0
    exact_resolves = 0
    seq = 0
    heap = [(-math.inf, seq, red.lo.copy(), red.hi.copy())]
    deadline = None if cs.time_limit is None else time.monotonic() + cs.time_limit

    def prune(bound):
        if inc_val is None:
            return False
        inc = float(inc_val)
        eps = 1e-7 * (1.0 + abs(inc))
        if gran > 2 * eps:
            return bound + float(off) < inc + gran - eps
        return bound + float(off) <= inc + eps

    while heap:
        neg_bound, _, lo, hi = heapq.heappop(heap)
        if prune(-neg_bound):
            continue
        nodes += 1
        if nodes > cs.node_limit:
            raise NodeBudgetExceeded(cs.node_limit, incumbent)
        if deadline is not None and time.monotonic() > deadline:
            raise NodeBudgetExceeded(cs.node_limit, incumbent, f"time limit of {cs.time_limit} s")
        exact_lp = False
        if n == 0:
            x_lp = np.zeros(0)
            z = 0.0
        else:
            res = _node_lp(cs, c_lp, lo, hi)
            pivots += res.pivots
            if res.status == "infeasible":
                continue
            if res.status != "optimal":
                raise RuntimeError(f"LP relaxation reported {res.status} on a bounded problem")
            x_lp = np.asarray(res.x, dtype=float)
            z = float(res.objective)
            exact_lp = res.exact
        if prune(z):
            continue
        x_round = np.rint(x_lp).astype(np.int64) if n else np.zeros(0, dtype=np.int64)
        frac = np.abs(x_lp - x_round)
        if n == 0 or frac.max(initial=0.0) <= _INT_TOL:
            cand = _accept(cs, x_round)
            if cand is None and n and not exact_lp:
                # the float LP misled us; settle this node exactly
                exact_resolves += 1
                res = _node_lp(cs, c_lp, lo, hi, exact=True, c_exact=np.asarray(c_red, dtype=object))
                pivots += res.pivots
                if res.status != "optimal":
                    continue
                x_ex = res.x
                fr = np.array([v - math.floor(v) for v in x_ex], dtype=object)
                if all(v == 0 for v in fr):
                    x_round = np.array([int(v) for v in x_ex], dtype=np.int64)
                    cand = _accept(cs, x_round)
                    if cand is None:
                        raise RuntimeError("exact LP vertex violates the integer system")
                else:
                    x_lp = np.array([float(v) for v in x_ex])
                    frac = np.array([float(min(v, 1 - v)) for v in fr])
                    frac[frac < 0] = 0
                    x_round = np.rint(x_lp).astype(np.int64)
            if cand is not None:
                val = Fraction(int(int_matmul(c_int, cand.astype(np.int64))), c_scale)
                if inc_val is None or val > inc_val:
                    incumbent, inc_val = cand, val
                continue
        j = int(np.argmax(frac))
        v = x_lp[j]
        down_hi = hi.copy()
        down_hi[j] = math.floor(v)
        up_lo = lo.copy()
        up_lo[j] = math.ceil(v)
        if up_lo[j] == down_hi[j]:
            # numerically integral but rejected: split around the rounded value
            up_lo[j] = down_hi[j] + 1
        for clo, chi in ((lo, down_hi), (up_lo, hi)):
            if np.all(clo <= chi):
                seq += 1
                heapq.heappush(heap, (-z, seq, clo, chi))

    stats = {"lp_pivots": pivots, "exact_resolves": exact_resolves, "n_free": n,
             "rows": int(red.A.shape[0] + red.E.shape[0])}
    if incumbent is None:
        return ILPSolution("infeasible", nodes_explored=nodes, lp_pivots=pivots, stats=stats)
    return ILPSolution("optimal", incumbent, inc_val, nodes, Fraction(0), pivots, stats)


def _accept(cs, x):
    red = cs.reduction.reduced
    if not red.feasible(x):
        return None
    return cs._restore_checked(x)


def _node_lp(cs, c_lp, lo, hi, exact=False, c_exact=None):
    red = cs.reduction.reduced
    if not exact:
        try:
            return solve_lp(c_lp, cs.A_lp, cs.b_lp, cs.E_lp, cs.f_lp, lo, hi,
                            lazy_threshold=cs.lazy_threshold)
        except LPNumericalError:
            pass
    c = c_exact if c_exact is not None else c_lp
    return solve_lp(c, red.A, red.b, red.E, red.f, lo, hi, exact=True,
                    lazy_threshold=cs.lazy_threshold)


def solve_ilp(problem: ILPProblem, node_limit=DEFAULT_NODE_LIMIT, presolve=True,
              aggregate=True, time_limit=None) -> ILPSolution:
    """Solve ``problem`` to proven optimality.

    Returns status ``"optimal"`` with an assignment that satisfies every
    constraint exactly, or ``"infeasible"``. Raises
    :class:`NodeBudgetExceeded` rather than returning an unproven answer.
    """
    cs = CompiledSystem(problem, presolve=presolve, aggregate=aggregate, node_limit=node_limit,
                        time_limit=time_limit)
    return cs.solve(problem.objective)
