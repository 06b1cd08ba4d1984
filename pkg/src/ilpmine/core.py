"""Shared data types: samples, equality systems, exact rational arrays."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .linalg import as_fraction

__all__ = [
    "Sample",
    "EqualitySystem",
    "rational_array",
    "exact_dot",
    "scaled_integers",
    "int_matmul",
    "fraction_str",
    "parse_rational",
]

_TWO53 = 1 << 53


def _float_exact(f: Fraction) -> bool:
    den = f.denominator
    return den & (den - 1) == 0 and abs(f.numerator) < _TWO53 and den <= (1 << 1074)


def rational_array(values: Iterable) -> np.ndarray:
    """Array of exact rationals.

    Returns float64 when every entry is exactly representable as a float
    (ints and dyadic rationals, which covers every float input); otherwise an
    object array of :class:`Fraction`.
    """
    if isinstance(values, np.ndarray) and values.dtype.kind in "iub":
        return values.astype(np.float64) if np.abs(values).max(initial=0) < _TWO53 else _obj(values)
    if isinstance(values, np.ndarray) and values.dtype.kind == "f":
        if not np.all(np.isfinite(values)):
            raise ValueError("weights must be finite")
        return values.astype(np.float64, copy=False)
    fr = [as_fraction(v) for v in values]
    if all(_float_exact(f) for f in fr):
        return np.array([float(f) for f in fr], dtype=np.float64)
    out = np.empty(len(fr), dtype=object)
    out[:] = fr
    return out


def _obj(values):
    out = np.empty(len(values), dtype=object)
    out[:] = [Fraction(int(v)) for v in values]
    return out


def parse_rational(x):
    """JSON number or ``"p/q"`` string to an exact value (float when exact)."""
    if isinstance(x, str):
        f = Fraction(x)
        return float(f) if _float_exact(f) else f
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    return x


def fraction_str(x):
    """Serialize a rational: ints and exact floats as JSON numbers, else ``"p/q"``."""
    f = as_fraction(x)
    if f.denominator == 1:
        return f.numerator
    if _float_exact(f):
        return float(f)
    return f"{f.numerator}/{f.denominator}"


def scaled_integers(A) -> tuple[np.ndarray, int]:
    """Return ``(M, s)`` with ``A == M / s`` exactly and ``M`` integral.

    ``M`` is int64 when the magnitudes allow it, otherwise an object array
    of Python ints.
    """
    A = np.asarray(A)
    if A.dtype.kind in "iu":
        return _shrink(A.astype(object) if A.dtype.kind == "u" else A), 1
    if A.dtype.kind == "f":
        if A.size == 0:
            return np.zeros(A.shape, dtype=np.int64), 1
        if np.all(A == np.round(A)) and np.abs(A).max() < 2.0 ** 53:
            return A.astype(np.int64), 1
        _, exps = np.frexp(A[A != 0])
        # every nonzero float is m * 2**(e-53) with integer m
        shift = int(53 - exps.min()) if exps.size else 0
        scaled = np.ldexp(A, shift)
        if not np.all(np.isfinite(scaled)):
            return scaled_integers(A.astype(object))
        ints = scaled.astype(object)
        ints = np.vectorize(int, otypes=[object])(ints) if ints.size else ints
        g = 0
        for v in ints.flat:
            g = math.gcd(g, v)
            if g == 1:
                break
        s = 1 << shift
        if g > 1:
            t = (g & -g).bit_length() - 1
            t = min(t, shift)
            ints = ints // (1 << t) if t else ints
            s >>= t
        return _shrink(ints), s
    fr = np.vectorize(as_fraction, otypes=[object])(A) if A.size else A.astype(object)
    s = 1
    for f in fr.flat:
        if f.denominator != 1:
            s = s * f.denominator // math.gcd(s, f.denominator)
    ints = np.vectorize(lambda f: f.numerator * (s // f.denominator), otypes=[object])(fr) if A.size else np.zeros(A.shape, dtype=object)
    return _shrink(ints), s


def _shrink(M):
    if M.dtype == object:
        if M.size == 0:
            return np.zeros(M.shape, dtype=np.int64)
        peak = max(abs(int(v)) for v in M.flat)
        if peak < (1 << 62):
            return M.astype(np.int64)
        return M
    return M


def int_matmul(A, B):
    """Exact integer product, upcasting to Python ints when int64 could overflow."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.dtype == object or B.dtype == object:
        return _shrink(A.astype(object) @ B.astype(object))
    inner = A.shape[-1] if A.ndim else 1
    if inner == 0:
        return (A.astype(np.int64) @ B.astype(np.int64))
    amax = int(np.abs(A).max(initial=0))
    bmax = int(np.abs(B).max(initial=0))
    if amax * bmax * inner < (1 << 62):
        return A.astype(np.int64) @ B.astype(np.int64)
    return _shrink(A.astype(object) @ B.astype(object))


def exact_dot(w, y) -> Fraction:
    """Exact ``w . y`` for rational ``w`` and integer ``y``."""
    w = np.asarray(w)
    y = np.asarray(y)
    if w.dtype == object:
        return sum((as_fraction(a) * int(b) for a, b in zip(w, y) if b), Fraction(0))
    M, s = scaled_integers(w)
    return Fraction(int(int_matmul(M, y.astype(np.int64))), s)


@dataclass(frozen=True, eq=False)
class Sample:
    """One observed (weights, optimal solution) pair."""

    w: np.ndarray
    y: np.ndarray
    id: str = ""

    def __post_init__(self):
        w = rational_array(self.w) if not isinstance(self.w, np.ndarray) or self.w.dtype != object else self.w
        y = np.asarray(self.y, dtype=np.int64)
        if w.ndim != 1 or y.ndim != 1 or w.shape != y.shape:
            raise ValueError(f"sample {self.id!r}: w has shape {w.shape}, y has shape {y.shape}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "y", y)

    @property
    def dim(self) -> int:
        return self.y.shape[0]

    def value(self) -> Fraction:
        return exact_dot(self.w, self.y)

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.y, other.y)
            and self.w.dtype == other.w.dtype
            and np.array_equal(self.w, other.w)
        )

    def __hash__(self):
        return hash((self.id, self.y.tobytes()))


@dataclass(frozen=True, eq=False)
class EqualitySystem:
    """Integer equalities ``w_eq @ y == c``."""

    w_eq: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w_eq)
        c = np.asarray(self.c)
        if w.ndim != 2 or c.ndim != 1 or w.shape[0] != c.shape[0]:
            raise ValueError(f"w_eq shape {w.shape} does not match c shape {c.shape}")
        if w.dtype.kind not in "iuO" or c.dtype.kind not in "iuO":
            raise TypeError("equality systems hold integers")
        object.__setattr__(self, "w_eq", w)
        object.__setattr__(self, "c", c)

    @classmethod
    def empty(cls, d: int) -> "EqualitySystem":
        return cls(np.zeros((0, d), dtype=np.int64), np.zeros(0, dtype=np.int64))

    @property
    def dim(self) -> int:
        return self.w_eq.shape[1]

    @property
    def n_rows(self) -> int:
        return self.w_eq.shape[0]

    @property
    def affine_dim(self) -> int:
        return self.dim - self.n_rows

    def satisfied_by(self, y) -> bool:
        if self.n_rows == 0:
            return True
        y = np.asarray(y, dtype=np.int64)
        return bool(np.all(int_matmul(self.w_eq, y) == self.c))

    def __eq__(self, other):
        if not isinstance(other, EqualitySystem):
            return NotImplemented
        return (
            self.w_eq.shape == other.w_eq.shape
            and bool(np.all(self.w_eq == other.w_eq))
            and bool(np.all(self.c == other.c))
        )

    __hash__ = None

    def rows(self) -> list[tuple[list[int], int]]:
        return [([int(v) for v in r], int(b)) for r, b in zip(self.w_eq, self.c)]
