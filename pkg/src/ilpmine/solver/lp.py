"""Bounded-variable primal simplex for LP relaxations.

Solves ``max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi``
with finite variable bounds. The same tableau code runs in float64 with a
1e-9 tolerance or over exact :class:`~fractions.Fraction` entries. Dantzig
pricing switches to Bland's rule after ``10 * (rows + cols)`` pivots, which
guarantees termination on degenerate problems.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..linalg import as_fraction

__all__ = ["LPResult", "LPNumericalError", "simplex", "solve_lp", "TOL"]

TOL = 1e-9
RESIDUAL_TOL = 1e-7
_INF = float("inf")


class LPNumericalError(ArithmeticError):
    """A float solve ended with residuals above tolerance."""


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    objective: float | Fraction | None = None
    pivots: int = 0
    exact: bool = False
    rows_used: int = 0


_to_frac = np.vectorize(as_fraction, otypes=[object])


def _matrix(A, n, exact):
    if A is None or len(A) == 0:
        return np.zeros((0, n), dtype=object if exact else float)
    A = np.asarray(A)
    A = A.reshape(-1, n)
    return _to_frac(A) if exact else A.astype(float)


def _vector(v, m, exact, fill=0):
    if v is None:
        v = np.full(m, fill)
    v = np.asarray(v).reshape(-1)
    if v.size == 0:
        return np.zeros(0, dtype=object if exact else float)
    return _to_frac(v) if exact else v.astype(float)


class _Tableau:
    """Dense tableau ``B^-1 M`` plus explicit values for every column."""

    def __init__(self, T, lo, hi, basis, x, exact):
        self.T = T
        self.lo = lo
        self.hi = hi
        self.basis = basis
        self.x = x
        self.exact = exact
        self.tol = 0 if exact else TOL
        self.pivots = 0

    def pivot(self, r, j):
        T = self.T
        prow = T[r] / T[r, j]
        col = T[:, j].copy()
        col[r] = 0
        T -= np.outer(col, prow)
        T[r] = prow
        self.basis[r] = j
        self.pivots += 1

    def optimize(self, c, bland_after, allowed):
        T, x, lo, hi, tol = self.T, self.x, self.lo, self.hi, self.tol
        m, N = T.shape
        nonbasic = np.ones(N, dtype=bool)
        nonbasic[self.basis] = False
        nonbasic &= allowed
        start = self.pivots
        while True:
            d = c - c[self.basis] @ T if m else c.copy()
            up = nonbasic & (d > tol) & (x < hi)
            dn = nonbasic & (d < -tol) & (x > lo)
            cand = np.flatnonzero(up | dn)
            if cand.size == 0:
                return "optimal"
            bland = self.pivots - start > bland_after
            if bland:
                j = int(cand[0])
            else:
                mag = np.abs(d[cand])
                j = int(cand[int(np.argmax(mag.astype(float) if self.exact else mag))])
            sgn = 1 if d[j] > 0 else -1
            step = hi[j] - lo[j]
            r = -1
            to_hi = False
            if m:
                col = T[:, j] * sgn
                xb, lob, hib = x[self.basis], lo[self.basis], hi[self.basis]
                dec = col > tol
                inc = col < -tol
                ratios = np.full(m, _INF, dtype=object if self.exact else float)
                if dec.any():
                    ratios[dec] = (xb[dec] - lob[dec]) / col[dec]
                if inc.any():
                    ratios[inc] = (hib[inc] - xb[inc]) / -col[inc]
                if not self.exact:
                    np.maximum(ratios, 0.0, out=ratios)
                rmin = min(ratios) if self.exact else ratios.min()
                if rmin < step:
                    ties = np.flatnonzero(ratios <= rmin + tol)
                    if bland:
                        r = int(ties[np.argmin(self.basis[ties])])
                    else:
                        mags = np.abs(col[ties])
                        r = int(ties[np.argmax(mags.astype(float) if self.exact else mags)])
                    step = ratios[r]
                    to_hi = bool(inc[r])
            if step == _INF:
                return "unbounded"
            delta = step * sgn
            if m:
                x[self.basis] = x[self.basis] - T[:, j] * delta
            if r < 0:
                x[j] = hi[j] if sgn > 0 else lo[j]
                continue
            x[j] = x[j] + delta
            leaving = int(self.basis[r])
            x[leaving] = hi[leaving] if to_hi else lo[leaving]
            self.pivot(r, j)
            nonbasic[j] = False
            nonbasic[leaving] = bool(allowed[leaving])


def simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lo=None, hi=None,
            exact=False) -> LPResult:
    """Solve one LP holding every row in the tableau."""
    c = _vector(c, 0, exact)
    n = c.size
    A_ub = _matrix(A_ub, n, exact)
    A_eq = _matrix(A_eq, n, exact)
    b_ub = _vector(b_ub, A_ub.shape[0], exact)
    b_eq = _vector(b_eq, A_eq.shape[0], exact)
    lo = _vector(lo, n, exact, 0)
    hi = _vector(hi, n, exact, 1)
    if (lo > hi).any():
        return LPResult("infeasible", exact=exact)
    tol = 0 if exact else TOL
    dt = object if exact else float
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    M = np.concatenate([A_ub, A_eq]) if m else np.zeros((0, n), dtype=dt)
    rhs = np.concatenate([b_ub, b_eq]) if m else np.zeros(0, dtype=dt)
    resid = rhs - M @ lo if m else rhs
    art_rows = np.ones(m, dtype=bool)
    art_rows[:m_ub] = resid[:m_ub] < -tol
    n_art = int(art_rows.sum())
    s0 = n
    a0 = n + m_ub
    N = a0 + n_art

    full = np.full((m, N), zero, dtype=dt)
    full[:, :n] = M
    for i in range(m_ub):
        full[i, s0 + i] = one
    x = np.full(N, zero, dtype=dt)
    x[:n] = lo
    lo_all = np.concatenate([lo, np.full(m_ub + n_art, zero, dtype=dt)])
    hi_all = np.concatenate([hi, np.full(m_ub + n_art, _INF, dtype=dt)])
    basis = np.zeros(m, dtype=np.int64)
    a = a0
    for i in range(m):
        if art_rows[i]:
            sgn = one if resid[i] >= 0 else -one
            full[i, a] = sgn
            x[a] = resid[i] * sgn
            basis[i] = a
            a += 1
        else:
            basis[i] = s0 + i
            x[s0 + i] = resid[i]
    # tableau is B^-1 full with B = diag(+-1) on the starting basis
    T = full.copy()
    for i in range(m):
        if T[i, basis[i]] < 0:
            T[i] = -T[i]
    tab = _Tableau(T, lo_all, hi_all, basis, x, exact)
    bland_after = 10 * (m + N)
    allowed = np.ones(N, dtype=bool)
    keep = np.ones(m, dtype=bool)

    if n_art:
        c1 = np.full(N, zero, dtype=dt)
        c1[a0:] = -one
        tab.optimize(c1, bland_after, allowed)
        infeas = sum(x[a0:]) if exact else float(x[a0:].sum())
        scale = 1.0 if exact else 1.0 + float(np.abs(resid).max(initial=0.0))
        if infeas > (0 if exact else RESIDUAL_TOL * scale):
            return LPResult("infeasible", pivots=tab.pivots, exact=exact)
        for i in range(m):
            if tab.basis[i] >= a0:
                row = tab.T[i, :a0]
                mags = np.abs(row).astype(float)
                nz = np.flatnonzero(mags > (0 if exact else 1e-7))
                x[tab.basis[i]] = zero
                if nz.size:
                    tab.pivot(i, int(nz[np.argmax(mags[nz])]))
                else:
                    keep[i] = False
        hi_all[a0:] = zero
        x[a0:] = zero
        allowed[a0:] = False
        if not keep.all():
            tab.T = tab.T[keep]
            tab.basis = tab.basis[keep]

    c2 = np.concatenate([c, np.full(N - n, zero, dtype=dt)])
    status = tab.optimize(c2, bland_after, allowed)
    if status == "unbounded":
        return LPResult("unbounded", pivots=tab.pivots, exact=exact)
    if not exact:
        _refresh(tab, full[keep], rhs[keep])
    xs = x[:n].copy()
    if not exact:
        viol = 0.0
        if m_ub:
            viol = max(viol, float((A_ub @ xs - b_ub).max()))
        if m_eq:
            viol = max(viol, float(np.abs(A_eq @ xs - b_eq).max()))
        viol = max(viol, float((lo - xs).max()), float((xs - hi).max()))
        if viol > RESIDUAL_TOL * (1.0 + float(np.abs(rhs).max(initial=0.0))):
            raise LPNumericalError(f"primal residual {viol:.3g} after {tab.pivots} pivots")
        xs = np.clip(xs, lo, hi)
    return LPResult("optimal", xs, c @ xs, tab.pivots, exact, m)


def _refresh(tab, full, rhs):
    """Recompute basic values from the nonbasic ones to remove drift."""
    if not len(tab.basis):
        return
    x = tab.x
    nb = np.ones(full.shape[1], dtype=bool)
    nb[tab.basis] = False
    r = rhs - full[:, nb] @ x[nb]
    B = full[:, tab.basis]
    try:
        xb = np.linalg.solve(B, r)
    except np.linalg.LinAlgError:
        return
    if np.all(np.isfinite(xb)):
        x[tab.basis] = xb


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lo=None, hi=None,
             exact=False, lazy_threshold=200, batch=None) -> LPResult:
    """Solve an LP relaxation; large inequality blocks are generated lazily.

    With more than ``lazy_threshold`` inequality rows the LP is solved over a
    growing subset of them, adding the most violated rows until none remain
    violated; the result is the optimum of the full system. A float solve
    whose residuals breach tolerance is repeated in exact arithmetic.
    """
    try:
        return _solve(c, A_ub, b_ub, A_eq, b_eq, lo, hi, exact, lazy_threshold, batch)
    except LPNumericalError:
        if exact:
            raise
        return _solve(c, A_ub, b_ub, A_eq, b_eq, lo, hi, True, lazy_threshold, batch)


def _solve(c, A_ub, b_ub, A_eq, b_eq, lo, hi, exact, lazy_threshold, batch):
    m_ub = 0 if A_ub is None else len(A_ub)
    if m_ub <= lazy_threshold:
        return simplex(c, A_ub, b_ub, A_eq, b_eq, lo, hi, exact)
    n = len(c)
    A_ub = np.asarray(A_ub)
    b_ub = np.asarray(b_ub)
    A_f = A_ub.astype(float)
    b_f = b_ub.astype(float)
    batch = batch or max(10, 2 * n)
    lo_f = np.zeros(n) if lo is None else np.asarray(lo, dtype=float)
    active = np.zeros(m_ub, dtype=bool)
    viol = A_f @ lo_f - b_f
    seed = np.flatnonzero(viol > TOL)
    if seed.size:
        active[seed[np.argsort(-viol[seed], kind="stable")[:batch]]] = True
    pivots = 0
    while True:
        idx = np.flatnonzero(active)
        res = simplex(c, A_ub[idx] if idx.size else None, b_ub[idx] if idx.size else None,
                      A_eq, b_eq, lo, hi, exact)
        pivots += res.pivots
        res.pivots = pivots
        if res.status != "optimal":
            return res
        if exact:
            lhs = _to_frac(A_ub) @ res.x
            viol_mask = lhs > _to_frac(b_ub)
            viol = (lhs - _to_frac(b_ub)).astype(float)
        else:
            viol = A_f @ res.x - b_f
            viol_mask = viol > TOL * (1.0 + np.abs(b_f))
        bad = np.flatnonzero(viol_mask & ~active)
        if bad.size == 0:
            res.rows_used = int(active.sum()) + (0 if A_eq is None else len(A_eq))
            return res
        active[bad[np.argsort(-viol[bad], kind="stable")[:batch]]] = True
