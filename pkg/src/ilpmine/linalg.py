"""Exact rational row reduction and integer kernel bases.

Rows are kept in strict reduced row-echelon form over the rationals. Each
row is stored fraction-free as ``(numerators, denominator)`` with the pivot
numerator equal to the denominator and the whole row reduced by its gcd, so
the representation of a row space is canonical and two bases built from the
same rows in any order compare equal.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "RationalMatrixBasis",
    "IntegerKernelBasis",
    "as_fraction",
    "integer_row",
    "primitive",
    "rref_insert",
    "kernel_basis",
    "in_row_space",
    "row_space",
]

_INT64_SAFE = 1 << 62


def as_fraction(x) -> Fraction:
    """Convert ``x`` to an exact :class:`Fraction`.

    Floats convert exactly (every finite float is a dyadic rational); strings
    may be ``"p/q"``, integers, or decimal literals.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        return Fraction(int(x))
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r} has no rational form")
        return Fraction(float(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {type(x).__name__} as a rational")


def integer_row(values: Iterable) -> tuple[list[int], int]:
    """Return ``(nums, den)`` with ``values == nums / den`` and ``den > 0``."""
    fracs = [as_fraction(v) for v in values]
    den = 1
    for f in fracs:
        if f.denominator != 1:
            den = den * f.denominator // math.gcd(den, f.denominator)
    return [f.numerator * (den // f.denominator) for f in fracs], den


def primitive(nums: Sequence[int]) -> list[int]:
    """Scale an integer vector to gcd 1 with its first nonzero entry positive."""
    g = math.gcd(*nums) if nums else 0
    if g == 0:
        return list(nums)
    out = [x // g for x in nums]
    for x in out:
        if x:
            if x < 0:
                out = [-y for y in out]
            break
    return out


def _normalize(nums: list[int], den: int) -> tuple[tuple[int, ...], int]:
    g = math.gcd(den, *nums)
    if g > 1:
        nums = [x // g for x in nums]
        den //= g
    return tuple(nums), den


@dataclass(frozen=True)
class RationalMatrixBasis:
    """A row space in canonical reduced row-echelon form.

    ``rows[i]`` is ``(numerators, denominator)`` of the i-th reduced row; its
    pivot sits at ``pivot_columns[i]`` and the pivot columns increase.
    """

    ambient_dim: int
    pivot_columns: tuple[int, ...] = ()
    rows: tuple[tuple[tuple[int, ...], int], ...] = ()
    _dense: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be positive")

    @classmethod
    def empty(cls, n: int) -> "RationalMatrixBasis":
        return cls(n)

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def reduced_rows(self) -> list[list[Fraction]]:
        return [[Fraction(x, den) for x in nums] for nums, den in self.rows]

    def _int64_matrix(self):
        """Dense int64 copy of the rows, or None if not integral and small."""
        if self._dense is None:
            dense = False
            if self.rows and all(den == 1 for _, den in self.rows):
                peak = max(max(abs(x) for x in nums) for nums, _ in self.rows)
                if peak < (1 << 20):
                    dense = np.array([nums for nums, _ in self.rows], dtype=np.int64)
            object.__setattr__(self, "_dense", dense)
        return self._dense if self._dense is not False else None

    def residual(self, nums: Sequence[int], den: int = 1) -> tuple[list[int], int]:
        """Reduce ``nums/den`` against the basis; returns the scaled residual."""
        if len(nums) != self.ambient_dim:
            raise ValueError(
                f"row has length {len(nums)}, expected {self.ambient_dim}"
            )
        if not self.rows:
            return list(nums), den
        piv = self.pivot_columns
        dense = self._int64_matrix()
        if dense is not None:
            v = [nums[p] for p in piv]
            vmax = max(abs(x) for x in nums)
            if vmax < (1 << 20) and vmax * len(piv) < (1 << 22):
                coef = np.array(v, dtype=np.int64)
                res = np.array(nums, dtype=np.int64) - coef @ dense
                return res.tolist(), den
        # general path: r holds (scale * residual) with an integer scale
        r = np.array(list(nums), dtype=object)
        scale = den
        for p, (rn, rd) in zip(piv, self.rows):
            c = r[p]
            if c == 0:
                continue
            if rd == 1:
                r = r - c * np.array(rn, dtype=object)
            else:
                r = r * rd - c * np.array(rn, dtype=object)
                scale *= rd
        out = r.tolist()
        g = math.gcd(scale, *out)
        if g > 1:
            out = [x // g for x in out]
            scale //= g
        return out, scale


def _as_int_row(basis: RationalMatrixBasis, row) -> tuple[list[int], int]:
    nums, den = integer_row(row)
    if len(nums) != basis.ambient_dim:
        raise ValueError(f"row has length {len(nums)}, expected {basis.ambient_dim}")
    return nums, den


def rref_insert(basis: RationalMatrixBasis, row) -> tuple[RationalMatrixBasis, bool]:
    """Insert ``row`` into ``basis``.

    Returns the new basis and whether the rank grew. A dependent row returns
    the same basis object unchanged.
    """
    nums, den = _as_int_row(basis, row)
    res, _ = basis.residual(nums, den)
    return _insert_residual(basis, res)


def _insert_residual(basis, res):
    p = next((i for i, x in enumerate(res) if x != 0), None)
    if p is None:
        return basis, False
    lead = res[p]
    if lead < 0:
        res = [-x for x in res]
        lead = -lead
    new_nums, new_den = _normalize(res, lead)

    rows = []
    for piv_c, (rn, rd) in zip(basis.pivot_columns, basis.rows):
        c = rn[p]
        if c == 0:
            rows.append((piv_c, (rn, rd)))
            continue
        upd = [a * new_den - c * b for a, b in zip(rn, new_nums)]
        rows.append((piv_c, _normalize(upd, rd * new_den)))
    rows.append((p, (new_nums, new_den)))
    rows.sort(key=lambda t: t[0])
    return (
        RationalMatrixBasis(
            basis.ambient_dim,
            tuple(pc for pc, _ in rows),
            tuple(r for _, r in rows),
        ),
        True,
    )


def row_space(rows: Iterable, n: int) -> RationalMatrixBasis:
    """Build the canonical basis of the span of ``rows`` in dimension ``n``."""
    basis = RationalMatrixBasis(n)
    for row in rows:
        basis, _ = rref_insert(basis, row)
    return basis


def in_row_space(basis: RationalMatrixBasis, v) -> bool:
    nums, den = _as_int_row(basis, v)
    res, _ = basis.residual(nums, den)
    return not any(res)


@dataclass(frozen=True)
class IntegerKernelBasis:
    """Primitive integer vectors spanning the null space of a row space."""

    rows: tuple[tuple[int, ...], ...]
    ambient_dim: int

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def kernel_basis(basis: RationalMatrixBasis) -> IntegerKernelBasis:
    """Null space of ``basis`` as primitive integer rows.

    One vector per non-pivot column ``f``, ordered by ``f``: the vector has
    ``1`` at ``f`` and ``-R[i][f]`` at each pivot ``i``, scaled to a
    primitive integer vector whose first nonzero entry is positive.
    """
    n = basis.ambient_dim
    pivots = set(basis.pivot_columns)
    out = []
    for f in range(n):
        if f in pivots:
            continue
        used = [(pc, rn[f], rd) for pc, (rn, rd) in zip(basis.pivot_columns, basis.rows) if rn[f]]
        lcm = 1
        for _, _, rd in used:
            lcm = lcm * rd // math.gcd(lcm, rd)
        vec = [0] * n
        vec[f] = lcm
        for pc, a, rd in used:
            vec[pc] = -a * (lcm // rd)
        out.append(tuple(primitive(vec)))
    return IntegerKernelBasis(tuple(out), n)


class SparseEchelon:
    """Fraction-free row echelon form over sparse integer rows.

    Cheaper than :class:`RationalMatrixBasis` for membership tests against
    many sparse rows (mined kernels are mostly unit vectors). Rows are kept
    primitive with a positive leading entry; they are not fully reduced.
    """

    def __init__(self, n: int):
        self.n = n
        self._rows: dict[int, dict[int, int]] = {}

    @property
    def rank(self) -> int:
        return len(self._rows)

    def _reduce(self, v: dict) -> dict:
        v = {c: x for c, x in v.items() if x}
        heap = [c for c in v if c in self._rows]
        heapq.heapify(heap)
        while heap:
            c = heapq.heappop(heap)
            a = v.get(c, 0)
            if not a:
                continue
            prow = self._rows[c]
            p = prow[c]
            g = math.gcd(p, a)
            mp, ma = p // g, a // g
            if mp != 1:
                v = {k: x * mp for k, x in v.items()}
            for k, x in prow.items():
                nv = v.get(k, 0) - ma * x
                if nv:
                    if k not in v and k in self._rows:
                        heapq.heappush(heap, k)
                    v[k] = nv
                else:
                    v.pop(k, None)
            if v:
                g = math.gcd(*v.values())
                if g > 1:
                    v = {k: x // g for k, x in v.items()}
        return v

    def insert(self, row) -> bool:
        v = self._reduce(_sparse(row, self.n))
        if not v:
            return False
        lead = min(v)
        if v[lead] < 0:
            v = {k: -x for k, x in v.items()}
        self._rows[lead] = v
        return True

    def contains(self, row) -> bool:
        return not self._reduce(_sparse(row, self.n))


def _sparse(row, n) -> dict:
    if isinstance(row, dict):
        keys, vals = list(row), list(row.values())
        if any(k < 0 or k >= n for k in keys):
            raise ValueError("column index out of range")
    else:
        if len(row) != n:
            raise ValueError(f"row has length {len(row)}, expected {n}")
        keys = [i for i, x in enumerate(row) if x]
        vals = [row[i] for i in keys]
    if not keys:
        return {}
    nums, _ = integer_row(vals)
    return dict(zip(keys, nums))


# Multi-modular kernel -------------------------------------------------------
#
# Exact incremental RREF over Q costs a rational update of every stored row
# per insertion, which is slow in pure Python for Sudoku-sized inputs. The
# echelon below runs modulo a prime in int64; the rational kernel is then
# rebuilt by CRT plus rational reconstruction and certified with exact
# integer arithmetic against every source row.

# the twelve largest primes below 2**25
_PRIMES = (33554393, 33554383, 33554371, 33554347, 33554341, 33554317, 33554291,
           33554273, 33554267, 33554249, 33554239, 33554221)


class ModularEchelon:
    """Reduced row echelon form of integer rows modulo a prime ``p < 2**26``."""

    def __init__(self, n: int, p: int = _PRIMES[0]):
        self.n = n
        self.p = p
        self._R = np.zeros((0, n), dtype=np.int64)
        self.pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def _reduce(self, row: np.ndarray) -> np.ndarray:
        r = np.mod(row, self.p)
        if self.pivots:
            coef = r[self.pivots]
            if coef.any():
                # keep partial sums below 2**62
                step = max(1, (1 << 62) // (self.p * self.p))
                for s in range(0, len(self.pivots), step):
                    r = np.mod(r - coef[s:s + step] @ self._R[s:s + step], self.p)
        return r

    def insert(self, row) -> bool:
        r = self._reduce(np.asarray(row, dtype=np.int64))
        nz = np.flatnonzero(r)
        if nz.size == 0:
            return False
        lead = int(nz[0])
        r = np.mod(r * pow(int(r[lead]), -1, self.p), self.p)
        if self.rank:
            col = self._R[:, lead].copy()
            hit = np.flatnonzero(col)
            if hit.size:
                self._R[hit] = np.mod(self._R[hit] - np.mod(col[hit, None] * r[None, :], self.p), self.p)
        pos = int(np.searchsorted(self.pivots, lead))
        self._R = np.insert(self._R, pos, r, axis=0)
        self.pivots.insert(pos, lead)
        return True

    def contains(self, row) -> bool:
        return not self._reduce(np.asarray(row, dtype=np.int64)).any()


def _rational_reconstruct(a: int, m: int):
    """``num/den`` with ``num == a * den (mod m)``, ``|num|, den <= sqrt(m/2)``; or None."""
    bound = math.isqrt(m // 2)
    r0, r1 = m, a % m
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound or math.gcd(r1, abs(s1)) != 1:
        return None
    return (r1, s1) if s1 > 0 else (-r1, -s1)


def certified_kernel(rows: np.ndarray, n: int, first: ModularEchelon | None = None,
                     primes=_PRIMES) -> IntegerKernelBasis | None:
    """Kernel of integer ``rows`` via modular echelons, certified exactly.

    Returns the same canonical basis as :func:`kernel_basis` on the exact
    RREF, or None when reconstruction fails for every prime count tried.
    ``first`` may carry an echelon of ``rows`` that was already built.
    """
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, n)
    echelons = []
    for p in primes:
        if first is not None and first.p == p:
            ech = first
        else:
            ech = ModularEchelon(n, p)
            for r in rows:
                ech.insert(r)
        if echelons and (ech.rank != echelons[0].rank or ech.pivots != echelons[0].pivots):
            # unlucky prime: keep the larger rank
            if ech.rank > echelons[0].rank:
                echelons = [ech]
            continue
        echelons.append(ech)
        ker = _reconstruct(echelons, n)
        if ker is not None and _annihilates(ker, rows):
            return IntegerKernelBasis(tuple(tuple(v) for v in ker), n)
    return None


def _reconstruct(echelons, n):
    pivots = echelons[0].pivots
    pset = set(pivots)
    m = 1
    for e in echelons:
        m *= e.p
    # CRT of every reduced-row entry across the primes
    combined = echelons[0]._R.astype(object)
    mod = echelons[0].p
    for e in echelons[1:]:
        inv = pow(mod, -1, e.p)
        diff = (e._R.astype(object) - combined) % e.p
        combined = combined + mod * ((diff * inv) % e.p)
        mod *= e.p
    out = []
    for f in range(n):
        if f in pset:
            continue
        col = combined[:, f] if len(pivots) else []
        fracs = []
        for i, a in enumerate(col):
            if a == 0:
                continue
            rr = _rational_reconstruct(int(a), mod)
            if rr is None:
                return None
            fracs.append((pivots[i], rr))
        lcm = 1
        for _, (_, den) in fracs:
            lcm = lcm * den // math.gcd(lcm, den)
        vec = [0] * n
        vec[f] = lcm
        for pc, (num, den) in fracs:
            vec[pc] = -num * (lcm // den)
        out.append(primitive(vec))
    return out


def _annihilates(ker, rows) -> bool:
    if not ker:
        return True
    K = np.array(ker, dtype=object)
    try:
        K = K.astype(np.int64)
    except OverflowError:
        pass
    peak = int(np.abs(K).max()) if K.size else 0
    rmax = int(np.abs(rows).max(initial=0))
    if K.dtype != object and peak * rmax * rows.shape[1] < (1 << 62):
        return not np.any(rows @ K.T)
    return not np.any(rows.astype(object) @ K.astype(object).T)
