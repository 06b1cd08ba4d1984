"""Mining ILP constraints from (weights, optimal solution) pairs.

Every observed pair says that no feasible point beats ``y`` under ``w``, so
``w . z <= w . y`` holds on the whole feasible set; stacking these cuts gives
an outer approximation. Linear equalities satisfied by every observed
solution come from the kernel of the stacked rows ``[y, 1]``, and the
observed solutions themselves span an inner approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import EqualitySystem, Sample, int_matmul, rational_array, scaled_integers
from .linalg import _PRIMES, ModularEchelon, SparseEchelon, certified_kernel, integer_row, kernel_basis, row_space
from .solver import CompiledSystem, ILPProblem, ILPSolution, solve_lp
from .solver.bnb import DEFAULT_NODE_LIMIT

__all__ = [
    "EqualityMiner",
    "mine_equalities",
    "compute_slacks",
    "OuterPolytope",
    "build_outer",
    "infer_outer",
    "InnerPolytope",
    "inner_insert",
    "infer_inner",
    "VerificationReport",
    "verify_implied",
    "prune_redundant_cuts",
]


class EqualityMiner:
    """Incremental span of the augmented solutions ``[y, 1]``.

    Ranks are tracked modulo a prime; :meth:`system` rebuilds the rational
    kernel and certifies it against every distinct solution seen, falling
    back to exact rational elimination if the certificate fails.
    """

    def __init__(self, d: int):
        self.d = d
        self._ech = ModularEchelon(d + 1)
        self._seen = set()
        self._rows = []
        self.n_samples = 0

    def add(self, y) -> bool:
        """Add one solution; returns True if it raised the rank."""
        y = np.asarray(y, dtype=np.int64)
        if y.shape != (self.d,):
            raise ValueError(f"solution has shape {y.shape}, expected ({self.d},)")
        self.n_samples += 1
        key = y.tobytes()
        if key in self._seen:
            return False
        self._seen.add(key)
        row = np.append(y, 1)
        self._rows.append(row)
        if self.saturated:
            return False
        return self._ech.insert(row)

    @property
    def saturated(self) -> bool:
        return self._ech.rank == self.d + 1

    @property
    def rank(self) -> int:
        return self._ech.rank

    @property
    def affine_dim(self) -> int:
        return self._ech.rank - 1

    def system(self) -> EqualitySystem:
        rows = np.array(self._rows, dtype=np.int64).reshape(-1, self.d + 1)
        ker = certified_kernel(rows, self.d + 1, first=self._ech)
        if ker is None:
            ker = kernel_basis(row_space(rows.tolist(), self.d + 1))
        if not len(ker):
            return EqualitySystem.empty(self.d)
        try:
            K = np.array(ker.rows, dtype=np.int64)
        except OverflowError:
            K = np.array(ker.rows, dtype=object)
        return EqualitySystem(np.ascontiguousarray(K[:, : self.d]), -K[:, self.d])


def mine_equalities(samples: Iterable[Sample]) -> EqualitySystem:
    """Every linear equality satisfied by all sample solutions.

    Returns the full kernel of the stacked ``[y, 1]`` rows as ``w_eq @ y == c``;
    the affine dimension of the samples is ``d - len(c)``.
    """
    it = iter(samples)
    first = next(it, None)
    if first is None:
        raise ValueError("cannot mine equalities from an empty sample list")
    miner = EqualityMiner(first.dim)
    miner.add(first.y)
    for s in it:
        if s.dim != miner.d:
            raise ValueError(f"sample {s.id!r} has dimension {s.dim}, expected {miner.d}")
        miner.add(s.y)
    return miner.system()


def _score_matrix(W, Y):
    """Exact ``W @ Y.T`` as ``(integer matrix, common scale)``."""
    Wi, s = scaled_integers(W)
    return int_matmul(Wi, np.asarray(Y, dtype=np.int64).T), s


def _scores_le(lhs, scale, b):
    """Exact ``lhs / scale <= b`` per row of ``lhs``, with ``b`` rational."""
    rhs_i, rhs_s = scaled_integers(np.asarray(b))
    L = math.lcm(int(scale), int(rhs_s))
    ma, mb = L // int(scale), L // int(rhs_s)
    big = max(int(np.abs(lhs).max(initial=0)) * ma, int(np.abs(rhs_i).max(initial=0)) * mb)
    if lhs.dtype != object and rhs_i.dtype != object and big < (1 << 62):
        return lhs * ma <= (rhs_i * mb)[:, None]
    return lhs.astype(object) * ma <= (rhs_i.astype(object) * mb)[:, None]


def _row_dots(Wi, Y):
    """Exact ``Wi[i] . Y[i]`` for every row."""
    bound = int(np.abs(Wi).max(initial=0)) * max(Wi.shape[1], 1) if Wi.dtype != object else None
    if bound is not None and bound < (1 << 62):
        return np.einsum("ij,ij->i", Wi, Y.astype(np.int64))
    return np.array([sum(int(a) * int(b) for a, b in zip(r, y) if b) for r, y in zip(Wi, Y)], dtype=object)


def _stack_w(samples: Sequence[Sample]):
    if any(s.w.dtype == object for s in samples):
        out = np.empty((len(samples), samples[0].dim), dtype=object)
        for i, s in enumerate(samples):
            out[i] = s.w
        return out
    return np.vstack([s.w for s in samples])


def compute_slacks(samples: Sequence[Sample]) -> np.ndarray:
    """Per-sample slack so that every observed solution satisfies every cut.

    ``xi[i] = max_j (w_i . y_j - w_i . y_i)``, always >= 0 (``j = i`` gives 0).
    Exact; returned as an object array of :class:`Fraction`.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    W = _stack_w(samples)
    Y = np.vstack([s.y for s in samples])
    uniq, inv = np.unique(Y, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    S, scale = _score_matrix(W, uniq)
    own = S[np.arange(len(samples)), inv]
    best = S.max(axis=1)
    xi = best - own
    return np.array([Fraction(int(v), scale) for v in xi], dtype=object)


@dataclass(eq=False)
class OuterPolytope:
    """Outer approximation: prior halfspaces, one cut per sample, equalities, box."""

    dim: int
    cut_w: np.ndarray  # k x d, exact rationals
    cut_rhs: np.ndarray  # k, exact rationals
    equalities: EqualitySystem
    lower: np.ndarray
    upper: np.ndarray
    prior_A: np.ndarray = None
    prior_b: np.ndarray = None
    slacks: np.ndarray | None = None
    sample_ids: list = field(default_factory=list)
    _compiled: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.prior_A is None:
            self.prior_A = np.zeros((0, self.dim))
            self.prior_b = np.zeros(0)

    @property
    def n_cuts(self) -> int:
        return int(self.cut_w.shape[0])

    @property
    def cuts(self):
        return list(zip(self.cut_w, self.cut_rhs))

    @property
    def prior(self):
        return list(zip(self.prior_A, self.prior_b))

    def to_problem(self, w_query) -> ILPProblem:
        A, b = self._ineq_block()
        eq = self.equalities
        return ILPProblem(w_query, A, b, eq.w_eq if eq.n_rows else None,
                          eq.c if eq.n_rows else None, self.lower, self.upper)

    def _ineq_block(self):
        blocks = [(self.prior_A, self.prior_b), (self.cut_w, self.cut_rhs)]
        blocks = [(A, b) for A, b in blocks if A.shape[0]]
        if not blocks:
            return None, None
        if len(blocks) == 1:
            return blocks[0]
        obj = any(A.dtype == object or np.asarray(b).dtype == object for A, b in blocks)
        A = np.vstack([A.astype(object) if obj else A for A, _ in blocks])
        b = np.concatenate([np.asarray(b, dtype=object) if obj else b for _, b in blocks])
        return A, b

    def compiled(self, node_limit=DEFAULT_NODE_LIMIT, time_limit=None) -> CompiledSystem:
        """Presolved system shared by every query against this polytope."""
        cs = self._compiled.get("cs")
        if cs is None:
            cs = CompiledSystem(self.to_problem(np.zeros(self.dim)))
            self._compiled["cs"] = cs
        cs.node_limit = node_limit
        cs.time_limit = time_limit
        return cs

    def contains(self, y) -> bool:
        """Exact membership test for an integer point."""
        y = np.asarray(y, dtype=np.int64)
        if np.any(y < self.lower) or np.any(y > self.upper):
            return False
        if not self.equalities.satisfied_by(y):
            return False
        A, b = self._ineq_block()
        if A is None:
            return True
        lhs, scale = _score_matrix(A, y[None, :])
        return bool(np.all(_scores_le(lhs, scale, b)))

    def count_members(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of which rows of ``points`` lie in the polytope."""
        P = np.asarray(points, dtype=np.int64)
        ok = np.all((P >= self.lower) & (P <= self.upper), axis=1)
        if self.equalities.n_rows:
            ok &= np.all(int_matmul(P, self.equalities.w_eq.T) == self.equalities.c, axis=1)
        A, b = self._ineq_block()
        if A is not None:
            lhs, scale = _score_matrix(A, P)
            ok &= np.all(_scores_le(lhs, scale, b), axis=0)
        return ok


def build_outer(samples: Sequence[Sample], prior=None, eq: EqualitySystem | None = None,
                slack: bool = False, lower=0, upper=1) -> OuterPolytope:
    """Outer polytope with one cut ``w_i . y <= w_i . y_i (+ xi_i)`` per sample.

    Samples with identical ``w`` and ``y`` contribute one cut. ``prior`` is a
    list of ``(row, rhs)`` halfspaces known in advance; the unit box is
    always applied through ``lower``/``upper``.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    d = samples[0].dim
    for s in samples:
        if s.dim != d:
            raise ValueError(f"sample {s.id!r} has dimension {s.dim}, expected {d}")
    seen = set()
    uniq = []
    for s in samples:
        key = (s.w.tobytes() if s.w.dtype != object else tuple(s.w), s.y.tobytes())
        if key in seen:
            continue
        seen.add(key)
        uniq.append(s)
    W = _stack_w(uniq)
    Y = np.vstack([s.y for s in uniq])
    Wi, scale = scaled_integers(W)
    own = _row_dots(Wi, Y)
    rhs = [Fraction(int(v), scale) for v in own]
    xi = None
    if slack:
        xi = compute_slacks(uniq)
        rhs = [r + x for r, x in zip(rhs, xi)]
    eq = eq if eq is not None else EqualitySystem.empty(d)
    if eq.dim != d:
        raise ValueError(f"equality system has dimension {eq.dim}, expected {d}")
    pA = pb = None
    if prior:
        pA = np.vstack([rational_array(r) for r, _ in prior])
        pb = rational_array([b for _, b in prior])
    return OuterPolytope(
        d, W, rational_array(rhs), eq,
        np.broadcast_to(np.asarray(lower, dtype=np.int64), (d,)).copy(),
        np.broadcast_to(np.asarray(upper, dtype=np.int64), (d,)).copy(),
        pA, pb, xi, [s.id for s in uniq],
    )


def infer_outer(outer: OuterPolytope, w_query, node_limit=DEFAULT_NODE_LIMIT,
                fix_ones=None, time_limit=None) -> ILPSolution:
    """Best point of the outer polytope under ``w_query``.

    ``fix_ones`` lists variables pinned to 1 for this query only (Sudoku
    clues); the shared presolved system is used when it is empty.
    """
    if len(w_query) != outer.dim:
        raise ValueError(f"query has dimension {len(w_query)}, expected {outer.dim}")
    w = rational_array(w_query)
    if fix_ones is None or len(fix_ones) == 0:
        return outer.compiled(node_limit, time_limit).solve(w)
    prob = outer.to_problem(w)
    prob.lower[np.asarray(fix_ones, dtype=np.intp)] = 1
    return CompiledSystem(prob, node_limit=node_limit, time_limit=time_limit).solve(w)


ENUMERATE_DIM = 21


def prune_redundant_cuts(outer: OuterPolytope, universe=None, tol=1e-9, method="auto") -> OuterPolytope:
    """Drop sample cuts that exclude no integer point the kept constraints admit.

    With an enumerable box (``outer.dim <= ENUMERATE_DIM``, or ``universe``
    given as candidate points), cuts are scanned in order against the points
    that survive the bounds, equalities, prior and every cut kept so far; a
    cut that removes none of them goes. The integer feasible set is
    unchanged, so inference answers are too.

    Otherwise cut ``i`` goes when the LP maximum of ``w_i . y`` over the
    remaining kept constraints is at most its right-hand side, confirmed in
    exact arithmetic when the float optimum is within ``tol`` of the bound.
    ``method`` forces either route ("integer" or "lp").
    """
    if outer.n_cuts <= 1:
        return outer
    if method == "auto":
        method = "integer" if universe is not None or outer.dim <= ENUMERATE_DIM else "lp"
    if method == "integer":
        keep = _integer_prune(outer, universe)
    elif method == "lp":
        keep = _lp_prune(outer, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    return OuterPolytope(
        outer.dim, outer.cut_w[keep], outer.cut_rhs[keep], outer.equalities,
        outer.lower, outer.upper, outer.prior_A, outer.prior_b,
        None if outer.slacks is None else outer.slacks[keep],
        [sid for sid, kp in zip(outer.sample_ids, keep) if kp] if outer.sample_ids else [],
    )


def _box_points(outer: OuterPolytope, chunk=1 << 16):
    d = outer.dim
    span = outer.upper - outer.lower + 1
    total = int(np.prod(span.astype(object)))
    base = np.cumprod(np.concatenate([[1], span[::-1][:-1]]))[::-1]
    eq = outer.equalities
    out = []
    for s in range(0, total, chunk):
        idx = np.arange(s, min(total, s + chunk), dtype=np.int64)
        P = (idx[:, None] // base[None, :]) % span[None, :] + outer.lower[None, :]
        if eq.n_rows:
            P = P[np.all(int_matmul(P, eq.w_eq.T) == eq.c, axis=1)]
        out.append(P)
    return np.vstack(out) if out else np.zeros((0, d), dtype=np.int64)


def _integer_prune(outer: OuterPolytope, universe=None, block=256, cells=1 << 23) -> np.ndarray:
    P = _box_points(outer) if universe is None else np.asarray(universe, dtype=np.int64)
    if universe is not None or outer.prior_A.shape[0]:
        base = OuterPolytope(outer.dim, np.zeros((0, outer.dim)), np.zeros(0), outer.equalities,
                             outer.lower, outer.upper, outer.prior_A, outer.prior_b)
        P = P[base.count_members(P)]
    k = outer.n_cuts
    keep = np.zeros(k, dtype=bool)
    s = 0
    while s < k and P.shape[0]:
        # cap the score matrix at ``cells`` entries while many points survive
        step = max(1, min(block, cells // P.shape[0]))
        W = outer.cut_w[s:s + step]
        lhs, scale = _score_matrix(W, P)
        bad = ~_scores_le(lhs, scale, outer.cut_rhs[s:s + step])
        alive = np.ones(P.shape[0], dtype=bool)
        for j in range(bad.shape[0]):
            hit = bad[j] & alive
            if hit.any():
                keep[s + j] = True
                alive &= ~hit
        P = P[alive]
        s += step
    return keep


def _lp_prune(outer: OuterPolytope, tol) -> np.ndarray:
    k = outer.n_cuts
    Wf = np.asarray(outer.cut_w, dtype=float)
    bf = np.asarray(outer.cut_rhs, dtype=float)
    eq = outer.equalities
    E = eq.w_eq.astype(float) if eq.n_rows else None
    f = eq.c.astype(float) if eq.n_rows else None
    PA = np.asarray(outer.prior_A, dtype=float)
    Pb = np.asarray(outer.prior_b, dtype=float)
    lo = outer.lower.astype(float)
    hi = outer.upper.astype(float)
    keep = np.ones(k, dtype=bool)
    for i in range(k):
        keep[i] = False
        A = np.vstack([PA, Wf[keep]])
        b = np.concatenate([Pb, bf[keep]])
        res = solve_lp(Wf[i], A, b, E, f, lo, hi)
        if res.status != "optimal":
            keep[i] = True
            continue
        margin = tol * (1 + abs(bf[i]))
        if float(res.objective) > bf[i] + margin:
            keep[i] = True
        elif float(res.objective) > bf[i] - margin:
            # too close to call in floating point
            rows = outer.prior + [(outer.cut_w[j], outer.cut_rhs[j]) for j in np.flatnonzero(keep)]
            ex = solve_lp(outer.cut_w[i], [r for r, _ in rows], [b for _, b in rows],
                          eq.w_eq if eq.n_rows else None, eq.c if eq.n_rows else None,
                          outer.lower, outer.upper, exact=True)
            keep[i] = ex.status != "optimal" or ex.objective > Fraction(outer.cut_rhs[i])
    return keep


@dataclass(eq=False)
class InnerPolytope:
    """Inner approximation stored as its distinct observed vertices, in order."""

    dim: int
    vertices: list = field(default_factory=list)
    _index: dict = field(default_factory=dict, repr=False)
    _matrix: object = field(default=None, repr=False)

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, y):
        return np.asarray(y, dtype=np.int64).tobytes() in self._index

    def matrix(self) -> np.ndarray:
        if self._matrix is None or self._matrix.shape[0] != len(self.vertices):
            self._matrix = np.vstack(self.vertices) if self.vertices else np.zeros((0, self.dim), dtype=np.int64)
        return self._matrix

    @classmethod
    def from_samples(cls, samples: Iterable[Sample]) -> "InnerPolytope":
        inner = None
        for s in samples:
            if inner is None:
                inner = cls(s.dim)
            inner = inner_insert(inner, s.y)
        if inner is None:
            raise ValueError("no samples")
        return inner


def inner_insert(inner: InnerPolytope, y) -> InnerPolytope:
    """Add ``y`` as a vertex unless already present (in place; returns ``inner``)."""
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (inner.dim,):
        raise ValueError(f"vertex has shape {y.shape}, expected ({inner.dim},)")
    key = y.tobytes()
    if key not in inner._index:
        inner._index[key] = len(inner.vertices)
        inner.vertices.append(y.copy())
    return inner


def infer_inner(inner: InnerPolytope, w_query) -> np.ndarray:
    """Stored vertex maximizing ``w_query . y``; the earliest one wins ties."""
    if not inner.vertices:
        raise ValueError("inner polytope has no vertices")
    if len(w_query) != inner.dim:
        raise ValueError(f"query has dimension {len(w_query)}, expected {inner.dim}")
    w = rational_array(w_query)
    scores, _ = _score_matrix(w[None, :] if w.dtype != object else np.array([w], dtype=object), inner.matrix())
    scores = scores[0]
    if scores.dtype == object:
        best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    else:
        best = int(np.argmax(scores))
    return inner.vertices[best].copy()


@dataclass
class VerificationReport:
    """Outcome of checking canonical equalities against a mined system.

    ``rank`` and ``canonical_rank`` are the dimensions of the two equality
    spaces (number of independent rows); the spaces coincide when every
    canonical row is implied and the ranks agree.
    """

    all_implied: bool
    dim_match: bool
    rank: int
    canonical_rank: int
    affine_dim: int
    expected_dim: int | None
    implied: list  # one bool per canonical constraint
    method: str = "exact"

    @property
    def n_implied(self) -> int:
        return sum(self.implied)


def verify_implied(eq: EqualitySystem, canonical, expected_dim=None, method="auto") -> VerificationReport:
    """Check that each canonical equality ``row . y == rhs`` follows from ``eq``.

    Rows may be dense sequences or sparse ``{column: coefficient}`` dicts.
    A canonical row is implied when ``[row | rhs]`` lies in the row space of
    ``[w_eq | c]``. ``dim_match`` compares the rank of the mined rows with
    the rank of the canonical rows and, if given, with ``expected_dim``.

    ``method="exact"`` eliminates over the integers. ``"modular"`` tests
    membership modulo primes for which the mined rows keep full rank: a
    negative verdict there is a proof, a positive one must hold for
    ``MODULAR_CHECKS`` such primes. ``"auto"`` picks modular only when the
    mined coefficients exceed 31 bits, where exact elimination blows up.
    """
    d = eq.dim
    canon_rows = []
    for row, rhs in canonical:
        if isinstance(row, dict):
            v = {int(k): x for k, x in row.items() if x}
        else:
            if len(row) != d:
                raise ValueError(f"canonical row has length {len(row)}, expected {d}")
            v = {i: x for i, x in enumerate(row) if x}
        if rhs:
            v[d] = -Fraction(rhs)
        canon_rows.append(v)
    canon = SparseEchelon(d + 1)
    for v in canon_rows:
        canon.insert(v)
    if method == "auto":
        big = eq.n_rows and max(abs(int(x)) for x in np.ravel(eq.w_eq)) >= 1 << 31
        method = "modular" if big else "exact"
    if method == "exact":
        mined = SparseEchelon(d + 1)
        for r, b in zip(eq.w_eq, eq.c):
            row = {int(i): int(r[i]) for i in np.flatnonzero(r)}
            if b:
                row[d] = -int(b)
            mined.insert(row)
        verdicts = [mined.contains(v) for v in canon_rows]
        rank = mined.rank
    elif method == "modular":
        verdicts, rank = _modular_implied(eq, canon_rows), eq.n_rows
    else:
        raise ValueError(f"unknown method {method!r}")
    match = rank == canon.rank and (expected_dim is None or rank == expected_dim)
    return VerificationReport(all(verdicts), match, rank, canon.rank,
                              d - rank, expected_dim, verdicts, method)


MODULAR_CHECKS = 3


def _modular_implied(eq: EqualitySystem, rows: list[dict]) -> list[bool]:
    d = eq.dim
    A = np.zeros((eq.n_rows, d + 1), dtype=object)
    A[:, :d] = eq.w_eq
    A[:, d] = -np.asarray(eq.c, dtype=object)
    ints = []
    for v in rows:
        keys = sorted(v)
        nums, _ = integer_row([v[k] for k in keys])
        dense = np.zeros(d + 1, dtype=object)
        dense[keys] = nums
        ints.append(dense)
    verdicts = [True] * len(rows)
    lucky = 0
    for p in _PRIMES:
        ech = ModularEchelon(d + 1, p)
        for r in np.mod(A, p).astype(np.int64):
            ech.insert(r)
        if ech.rank < eq.n_rows:
            continue  # p divides a maximal minor
        lucky += 1
        for i, v in enumerate(ints):
            if verdicts[i] and not ech.contains(np.mod(v, p).astype(np.int64)):
                verdicts[i] = False
        if lucky == MODULAR_CHECKS:
            return verdicts
    raise ArithmeticError("no usable prime for the modular implication test")
