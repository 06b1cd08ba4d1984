"""Synthetic hierarchical multi-label classification.

Labels form a complete tree below a virtual root: ``branching**l`` classes on
layer ``l = 1..depth``, numbered layer by layer. A feasible label set is a
root-to-leaf path. Scores come from a noisy copy of the gold labels and the
weights are ``w = c - 0.5``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..core import Sample

__all__ = [
    "HierarchySpec",
    "gen_hmc_dataset",
    "hmc_is_path",
    "threshold_decode",
    "hmc_canonical_constraints",
    "SCORE_BITS",
]

SCORE_BITS = 16  # scores are rounded to multiples of 2**-16


@dataclass(frozen=True)
class HierarchySpec:
    depth: int
    branching: int

    def __post_init__(self):
        if self.depth < 1 or self.branching < 1:
            raise ValueError("depth and branching must be positive")

    @cached_property
    def layers(self) -> list[range]:
        out, start = [], 0
        for level in range(1, self.depth + 1):
            size = self.branching ** level
            out.append(range(start, start + size))
            start += size
        return out

    @property
    def n_classes(self) -> int:
        return self.layers[-1].stop

    @cached_property
    def parent(self) -> list[int]:
        """Parent class of each class; -1 on the first layer (the root is virtual)."""
        par = [-1] * self.n_classes
        for upper, lower in zip(self.layers, self.layers[1:]):
            for k, x in enumerate(lower):
                par[x] = upper[k // self.branching]
        return par

    @cached_property
    def paths(self) -> np.ndarray:
        """Every root-to-leaf label vector, one row per leaf in index order."""
        rows = []
        for leaf in self.layers[-1]:
            y = np.zeros(self.n_classes, dtype=np.int64)
            x = leaf
            while x >= 0:
                y[x] = 1
                x = self.parent[x]
            rows.append(y)
        return np.array(rows)

    def to_json(self) -> dict:
        return {"depth": self.depth, "branching": self.branching}

    @classmethod
    def from_json(cls, obj) -> "HierarchySpec":
        return cls(int(obj["depth"]), int(obj["branching"]))


def gen_hmc_dataset(spec: HierarchySpec, n_samples: int, noise_level: float, seed: int,
                    prefix="hmc") -> list[Sample]:
    """Uniform random paths with scores ``clamp(y + N(0, noise), 0, 1)``.

    Scores are rounded to the ``2**-16`` grid so every weight is a short
    dyadic rational.
    """
    if not 0 <= noise_level < 0.5:
        raise ValueError("noise_level must lie in [0, 0.5)")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    paths = spec.paths
    out = []
    scale = float(1 << SCORE_BITS)
    for i in range(n_samples):
        y = paths[rng.integers(len(paths))]
        c = y + rng.normal(0.0, noise_level, size=y.shape) if noise_level else y.astype(float)
        c = np.round(np.clip(c, 0.0, 1.0) * scale) / scale
        out.append(Sample(c - 0.5, y.copy(), f"{prefix}-{i}"))
    return out


def threshold_decode(w) -> np.ndarray:
    """Baseline decoder: label ``i`` is on when its score exceeds 0.5."""
    return (np.asarray(w, dtype=float) > 0).astype(np.int64)


def hmc_is_path(y, spec: HierarchySpec) -> bool:
    """One label per layer, and every chosen label's parent is chosen."""
    y = np.asarray(y)
    if y.shape != (spec.n_classes,) or np.any((y != 0) & (y != 1)):
        return False
    for layer in spec.layers:
        if int(y[layer.start:layer.stop].sum()) != 1:
            return False
    return all(spec.parent[x] < 0 or y[spec.parent[x]] for x in np.flatnonzero(y))


def hmc_canonical_constraints(spec: HierarchySpec, schema=None) -> list[tuple[str, dict, int]]:
    """Per-layer one-hot rows, plus ``h[parent, child, 0, 1] = 0`` when ``schema`` is given.

    Rows are sparse ``{column: coefficient}`` dicts in the (extended)
    coordinate system.
    """
    out = []
    for i, layer in enumerate(spec.layers, 1):
        out.append((f"layer {i} one-hot", {x: 1 for x in layer}, 1))
    if schema is not None:
        for x, p in enumerate(spec.parent):
            if p < 0:
                continue
            out.append((f"h[{p},{x},0,1] = 0", {schema.index(p, x, 0, 1): 1}, 0))
    return out
