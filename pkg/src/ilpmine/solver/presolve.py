"""Exact integer presolve: fixing, bound propagation and equality substitution.

Reductions look only at constraints and bounds, never at the objective, so
one presolve serves any number of query objectives. Every reduction is
logged: :meth:`Reduction.transform_objective` replays the log on an
objective and :meth:`Reduction.restore` maps a reduced assignment back to
the original variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..core import int_matmul, scaled_integers
from .problem import ILPProblem

__all__ = ["IntSystem", "Reduction", "presolve", "reduce_system", "to_int_system"]

_BIG = np.iinfo(np.int64).max // 4


@dataclass
class IntSystem:
    """Integer constraints ``A x <= b``, ``E x == f``, ``lo <= x <= hi``."""

    A: np.ndarray
    b: np.ndarray
    E: np.ndarray
    f: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @property
    def n(self) -> int:
        return self.lo.shape[0]

    def feasible(self, x) -> bool:
        x = np.asarray(x, dtype=np.int64)
        if np.any(x < self.lo) or np.any(x > self.hi):
            return False
        if self.A.shape[0] and np.any(int_matmul(self.A, x) > self.b):
            return False
        if self.E.shape[0] and np.any(int_matmul(self.E, x) != self.f):
            return False
        return True


def _compact(v):
    v = np.asarray(v)
    if v.dtype != object:
        return v
    if v.size == 0:
        return v.astype(np.int64)
    peak = max(abs(int(t)) for t in v.flat)
    return v.astype(np.int64) if peak < (1 << 62) else v


def _int_block(A, b, n):
    if A.shape[0] == 0:
        return np.zeros((0, n), dtype=np.int64), np.zeros(0, dtype=np.int64)
    obj = A.dtype == object or b.dtype == object
    full = np.empty((A.shape[0], n + 1), dtype=object if obj else np.float64)
    full[:, :n] = A
    full[:, n] = b
    M, _ = scaled_integers(full)
    return M[:, :n], M[:, n]


def _row_gcd(M):
    if M.dtype == object:
        return np.array([math.gcd(*[int(t) for t in r]) for r in M], dtype=object)
    return np.gcd.reduce(np.abs(M), axis=1)


def to_int_system(problem: ILPProblem) -> IntSystem:
    """Scale every constraint block of ``problem`` to integers."""
    n = problem.dim
    A, b = _int_block(problem.A_ub, problem.b_ub, n)
    if A.shape[0]:
        g = _row_gcd(A)
        g = np.where(g == 0, 1, g)
        # integer points satisfy a.x <= b iff (a/g).x <= floor(b/g)
        A, b = A // g[:, None], b // g
    E, f = _int_block(problem.A_eq, problem.b_eq, n)
    return IntSystem(_compact(A), _compact(b), _compact(E), _compact(f),
                     problem.lower.astype(np.int64).copy(), problem.upper.astype(np.int64).copy())


@dataclass
class Reduction:
    """Outcome of presolve plus the log needed to undo it."""

    status: str  # "ok" | "infeasible"
    original: IntSystem
    reduced: IntSystem | None
    columns: np.ndarray  # original index of every reduced column
    log: list = field(default_factory=list)
    reason: str = ""

    @property
    def n_free(self) -> int:
        return int(self.columns.shape[0])

    def transform_objective(self, c):
        """Replay the log on integer objective ``c``; returns ``(c_reduced, offset)``."""
        c = np.array([int(v) for v in c], dtype=object)
        offset = 0
        for entry in self.log:
            if entry[0] == "fix":
                _, j, v = entry
                offset += c[j] * v
                c[j] = 0
            else:
                _, j, s, idx, vals, rhs = entry
                cj = c[j]
                if cj:
                    c[idx] = c[idx] - cj * s * vals
                    offset += cj * s * rhs
                    c[j] = 0
        return _compact(c[self.columns]), offset

    def restore(self, x_reduced) -> np.ndarray:
        x = np.zeros(self.original.n, dtype=object)
        x[self.columns] = [int(v) for v in x_reduced]
        for entry in reversed(self.log):
            if entry[0] == "fix":
                x[entry[1]] = entry[2]
            else:
                _, j, s, idx, vals, rhs = entry
                x[j] = s * (rhs - int(np.dot(vals, x[idx])))
        return x.astype(np.int64)


class _Infeasible(Exception):
    pass


class _State:
    """Working copy; every stored column is still a free variable."""

    def __init__(self, sys: IntSystem):
        self.A, self.b = sys.A.copy(), sys.b.copy()
        self.E, self.f = sys.E.copy(), sys.f.copy()
        self.lo = sys.lo.astype(np.int64).copy()
        self.hi = sys.hi.astype(np.int64).copy()
        self.cols = np.arange(sys.n)
        self.log = []

    def _drop_columns(self, J):
        keep = np.ones(self.cols.shape[0], dtype=bool)
        keep[J] = False
        self.A = self.A[:, keep]
        self.E = self.E[:, keep]
        self.lo, self.hi, self.cols = self.lo[keep], self.hi[keep], self.cols[keep]

    def fix_columns(self):
        J = np.flatnonzero(self.lo == self.hi)
        if J.size == 0:
            return False
        v = self.lo[J]
        if self.A.shape[0]:
            self.b = _compact(self.b - int_matmul(self.A[:, J], v))
        if self.E.shape[0]:
            self.f = _compact(self.f - int_matmul(self.E[:, J], v))
        for j, val in zip(J, v):
            self.log.append(("fix", int(self.cols[j]), int(val)))
        self._drop_columns(J)
        return True

    def clean_equalities(self):
        if self.E.shape[0] == 0:
            return False
        E, f = self.E, self.f
        g = _row_gcd(E)
        empty = g == 0
        if np.any(f[empty] != 0):
            raise _Infeasible("empty equality row with nonzero right-hand side")
        gs = np.where(empty, 1, g)
        if np.any(f % gs != 0):
            raise _Infeasible("equality row has no integer solution")
        E, f = E // gs[:, None], f // gs
        changed = bool(empty.any())
        E, f = E[~empty], f[~empty]
        nnz = (E != 0).sum(axis=1)
        for r in np.flatnonzero(nnz == 1):
            j = int(np.flatnonzero(E[r])[0])
            a, val = int(E[r, j]), int(f[r])
            if val % a:
                raise _Infeasible("variable pinned to a fractional value")
            val //= a
            if val < self.lo[j] or val > self.hi[j]:
                raise _Infeasible("variable pinned outside its bounds")
            self.lo[j] = self.hi[j] = val
            changed = True
        keep = []
        seen = {}
        for r in range(E.shape[0]):
            if nnz[r] == 1:
                continue
            row = E[r]
            # canonical sign so that r and -r collide
            lead = row[np.flatnonzero(row)[0]]
            sgn = 1 if lead > 0 else -1
            key = tuple(int(t) * sgn for t in row) if E.dtype == object else (row * sgn).tobytes()
            rhs = int(f[r]) * sgn
            if key in seen:
                if seen[key] != rhs:
                    raise _Infeasible("contradictory equality rows")
                changed = True
                continue
            seen[key] = rhs
            keep.append(r)
        self.E, self.f = _compact(E[keep]), _compact(f[keep])
        return changed

    def propagate(self):
        """Activity-based bound tightening; drops box-redundant inequalities."""
        changed = False
        lo, hi = self.lo, self.hi
        blocks = []
        if self.A.shape[0]:
            blocks.append((self.A, self.b))
        if self.E.shape[0]:
            blocks += [(self.E, self.f), (-self.E, -self.f)]
        rng = hi - lo
        rmax = int(rng.max(initial=0)) + 1
        for A, b in blocks:
            minact = int_matmul(np.maximum(A, 0), lo) + int_matmul(np.minimum(A, 0), hi)
            slack = b - minact
            if np.any(slack < 0):
                raise _Infeasible("row unsatisfiable within variable bounds")
            absA = np.abs(A)
            cap = (absA * rng).max(axis=1) if A.shape[1] else np.zeros(A.shape[0], dtype=np.int64)
            rows = np.flatnonzero(cap > slack)
            if rows.size == 0:
                continue
            sub, s = A[rows], slack[rows][:, None]
            q = np.minimum(s // np.where(sub == 0, 1, np.abs(sub)), rmax).astype(np.int64)
            up = np.where(sub > 0, lo[None, :] + q, _BIG).min(axis=0)
            dn = np.where(sub < 0, hi[None, :] - q, -_BIG).max(axis=0)
            new_hi, new_lo = np.minimum(hi, up), np.maximum(lo, dn)
            if np.any(new_lo > new_hi):
                raise _Infeasible("bound propagation emptied a domain")
            if np.any(new_hi != hi) or np.any(new_lo != lo):
                changed = True
                lo, hi = new_lo, new_hi
                rng = hi - lo
        self.lo, self.hi = lo, hi
        if self.A.shape[0]:
            maxact = int_matmul(np.maximum(self.A, 0), hi) + int_matmul(np.minimum(self.A, 0), lo)
            keep = maxact > self.b
            if not keep.all():
                self.A, self.b = self.A[keep], self.b[keep]
                changed = True
        return changed

    def aggregate(self):
        """Substitute out variables with a +-1 coefficient in an equality row."""
        if self.E.shape[0] == 0:
            return False
        E = self.E
        unit = np.abs(E) == 1
        colcount = (E != 0).sum(axis=0)
        cand = unit & (colcount == 1)[None, :]
        rows = np.flatnonzero(cand.any(axis=1))
        if rows.size:
            cols = np.array([int(np.flatnonzero(cand[r])[0]) for r in rows])
            self._eliminate(rows, cols, batch=True)
            return True
        has = np.flatnonzero(unit.any(axis=1))
        if has.size == 0:
            return False
        r = int(has[np.argmin((E[has] != 0).sum(axis=1))])
        js = np.flatnonzero(unit[r])
        j = int(js[np.argmin(colcount[js])])
        self._eliminate(np.array([r]), np.array([j]), batch=False)
        return True

    def _eliminate(self, rows, cols, batch):
        E, f = self.E, self.f
        s = np.array([int(E[r, j]) for r, j in zip(rows, cols)], dtype=np.int64)
        rest = np.ones(self.cols.shape[0], dtype=bool)
        rest[cols] = False
        D = E[rows][:, rest]
        fr = f[rows]
        # x_J = s * (fr - D x_rest)
        A = self.A
        if A.shape[0]:
            AJ = A[:, cols] * s[None, :]
            A = A[:, rest]
            used = np.flatnonzero((AJ != 0).any(axis=0))
            if used.size:
                A = _compact(A - int_matmul(AJ[:, used], D[used]))
                self.b = _compact(self.b - int_matmul(AJ[:, used], fr[used]))
        else:
            A = A[:, rest]
        keep = np.ones(E.shape[0], dtype=bool)
        keep[rows] = False
        E2, f2 = E[keep], f[keep]
        if not batch and E2.shape[0]:
            EJ = E2[:, cols] * s[None, :]
            E2 = _compact(E2[:, rest] - int_matmul(EJ, D))
            f2 = _compact(f2 - int_matmul(EJ, fr))
        else:
            E2 = E2[:, rest]
        rest_cols = self.cols[rest]
        new_rows, new_rhs = [], []
        for k, j in enumerate(cols):
            sj, Dk, fk = int(s[k]), D[k], int(fr[k])
            new_rows += [-sj * Dk, sj * Dk]
            new_rhs += [int(self.hi[j]) - sj * fk, sj * fk - int(self.lo[j])]
            nz = np.flatnonzero(Dk)
            self.log.append(("elim", int(self.cols[j]), sj, rest_cols[nz],
                             np.array([int(t) for t in Dk[nz]], dtype=object), fk))
        block = np.array(new_rows)
        if block.dtype != object:
            block = block.astype(np.int64)
        if A.shape[0]:
            dt = object if (A.dtype == object or block.dtype == object) else np.int64
            A = np.vstack([A.astype(dt), block.astype(dt)])
        else:
            A = block
        self.A = _compact(A)
        self.b = _compact(np.concatenate([np.asarray(self.b, dtype=object), np.array(new_rhs, dtype=object)]))
        self.E, self.f = E2, f2
        self.lo, self.hi, self.cols = self.lo[rest], self.hi[rest], rest_cols


def reduce_system(sys: IntSystem, aggregate=True) -> Reduction:
    """Presolve an integer system to a fixpoint."""
    st = _State(sys)
    try:
        while True:
            changed = st.fix_columns()
            changed |= st.clean_equalities()
            if changed:
                continue
            if st.propagate():
                continue
            if aggregate and st.aggregate():
                continue
            break
        A, b, E, f = st.A, st.b, st.E, st.f
        if A.shape[0]:
            nz = (A != 0).any(axis=1)
            if np.any(b[~nz] < 0):
                raise _Infeasible("empty inequality row violated")
            A, b = A[nz], b[nz]
        reduced = IntSystem(_compact(A), _compact(b), _compact(E), _compact(f), st.lo.copy(), st.hi.copy())
        return Reduction("ok", sys, reduced, st.cols.copy(), st.log)
    except _Infeasible as exc:
        return Reduction("infeasible", sys, None, np.zeros(0, dtype=np.int64), st.log, str(exc))


def presolve(problem: ILPProblem, aggregate=True):
    """Return ``(reduced_problem, reduction)`` for an :class:`ILPProblem`.

    Variables pinned by bounds or by single-variable equality rows are
    substituted out, bounds are tightened from row activities, inequalities
    that no point of the box can violate are dropped, and (with
    ``aggregate``) a variable with a unit coefficient in an equality row is
    replaced by the rest of that row, its bounds becoming two inequalities.
    ``reduced_problem`` is ``None`` when presolve proves infeasibility.
    The reduced problem carries the constant objective term as ``offset``.
    """
    red = reduce_system(to_int_system(problem), aggregate=aggregate)
    if red.status != "ok":
        return None, red
    c, s = scaled_integers(problem.objective)
    c_red, offset = red.transform_objective(c)
    r = red.reduced
    obj = np.array([Fraction(int(v), s) for v in c_red], dtype=object)
    reduced = ILPProblem(obj, r.A, r.b, r.E, r.f, r.lo, r.hi)
    reduced.offset = Fraction(int(offset), s)
    return reduced, red
