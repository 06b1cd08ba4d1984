"""Pairwise latent indicators for mining label-pair logic.

For a tracked pair ``(i, j)`` the four variables ``h[i, j, b1, b2]`` record
which of the joint assignments ``(y_i, y_j) = (b1, b2)`` occurred. They are
tied to ``y`` by three linking equalities, carry zero objective weight, and
let mutual exclusion or implication between labels show up as linear
equalities such as ``h[i, j, 1, 1] = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import EqualitySystem, Sample
from .miner import mine_equalities

__all__ = [
    "LatentSchema",
    "observed_pairs",
    "expand_sample",
    "expand_samples",
    "project",
    "linking_constraints",
    "mine_with_latents",
]


@dataclass(frozen=True)
class LatentSchema:
    """Base label count ``m`` and the ordered list of tracked pairs.

    ``h[i, j, b1, b2]`` of the ``k``-th pair lives at column
    ``m + 4*k + 2*b1 + b2``.
    """

    m: int
    pairs: tuple = ()
    _pos: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        pos = {}
        for k, (i, j) in enumerate(pairs):
            if not 0 <= i < j < self.m:
                raise ValueError(f"pair ({i}, {j}) must satisfy 0 <= i < j < m={self.m}")
            if (i, j) in pos:
                raise ValueError(f"duplicate pair ({i}, {j})")
            pos[(i, j)] = k
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_pos", pos)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def dim(self) -> int:
        return self.m + 4 * len(self.pairs)

    def index(self, i: int, j: int, b1: int, b2: int) -> int:
        try:
            k = self._pos[(i, j)]
        except KeyError:
            raise KeyError(f"pair ({i}, {j}) is not tracked") from None
        return self.m + 4 * k + 2 * b1 + b2

    def key(self, col: int) -> tuple:
        """Inverse of :meth:`index`."""
        if not self.m <= col < self.dim:
            raise KeyError(f"column {col} is not a latent column")
        k, r = divmod(col - self.m, 4)
        i, j = self.pairs[k]
        return i, j, r >> 1, r & 1

    def to_json(self) -> dict:
        return {"m": self.m, "pairs": [list(p) for p in self.pairs]}

    @classmethod
    def from_json(cls, obj) -> "LatentSchema":
        return cls(int(obj["m"]), tuple(tuple(p) for p in obj["pairs"]))


def observed_pairs(samples: Sequence[Sample], co_occurring: bool = False) -> LatentSchema:
    """Pairs of labels that are each positive somewhere in ``samples``.

    With ``co_occurring=True`` only pairs that are positive together in at
    least one sample are kept.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    Y = np.vstack([s.y for s in samples]) != 0
    m = Y.shape[1]
    if co_occurring:
        Yi = Y.astype(np.int64)
        both = Yi.T @ Yi
        pairs = [(i, j) for i in range(m) for j in range(i + 1, m) if both[i, j]]
    else:
        on = np.flatnonzero(Y.any(axis=0))
        pairs = [(int(i), int(j)) for a, i in enumerate(on) for j in on[a + 1:]]
    return LatentSchema(m, tuple(pairs))


def _latent_block(Y: np.ndarray, schema: LatentSchema) -> np.ndarray:
    if not schema.pairs:
        return np.zeros((Y.shape[0], 0), dtype=np.int64)
    P = np.array(schema.pairs)
    code = 2 * Y[:, P[:, 0]] + Y[:, P[:, 1]]  # which of the 4 slots is on
    H = np.zeros((Y.shape[0], len(P), 4), dtype=np.int64)
    np.put_along_axis(H, code[:, :, None], 1, axis=2)
    return H.reshape(Y.shape[0], -1)


def expand_samples(samples: Sequence[Sample], schema: LatentSchema) -> list[Sample]:
    """Append the latent indicators to every ``y`` and zero weights to every ``w``."""
    samples = list(samples)
    if not samples:
        return []
    for s in samples:
        if s.dim != schema.m:
            raise ValueError(f"sample {s.id!r} has dimension {s.dim}, schema expects {schema.m}")
    Y = np.vstack([s.y for s in samples])
    if np.any((Y != 0) & (Y != 1)):
        raise ValueError("latent expansion needs 0/1 labels")
    H = _latent_block(Y, schema)
    pad = np.zeros(H.shape[1])
    out = []
    for s, h in zip(samples, H):
        w = np.concatenate([s.w.astype(object), pad.astype(object)]) if s.w.dtype == object \
            else np.concatenate([s.w, pad])
        out.append(Sample(w, np.concatenate([s.y, h]), s.id))
    return out


def expand_sample(sample: Sample, schema: LatentSchema) -> Sample:
    return expand_samples([sample], schema)[0]


def project(y, schema: LatentSchema) -> np.ndarray:
    """Drop the latent coordinates."""
    return np.asarray(y)[: schema.m].copy()


def linking_constraints(schema: LatentSchema) -> EqualitySystem:
    """Three equalities per pair, in extended coordinates::

        h10 + h11 = y_i,   h01 + h11 = y_j,   h00 + h01 + h10 + h11 = 1
    """
    p = schema.n_pairs
    W = np.zeros((3 * p, schema.dim), dtype=np.int64)
    c = np.zeros(3 * p, dtype=np.int64)
    for k, (i, j) in enumerate(schema.pairs):
        base = schema.m + 4 * k
        h00, h01, h10, h11 = base, base + 1, base + 2, base + 3
        W[3 * k, [h10, h11, i]] = (1, 1, -1)
        W[3 * k + 1, [h01, h11, j]] = (1, 1, -1)
        W[3 * k + 2, [h00, h01, h10, h11]] = 1
        c[3 * k + 2] = 1
    return EqualitySystem(W, c)


def mine_with_latents(samples: Sequence[Sample], schema: LatentSchema) -> EqualitySystem:
    """Equalities over ``[y, h]`` satisfied by every expanded sample."""
    return mine_equalities(expand_samples(samples, schema))
