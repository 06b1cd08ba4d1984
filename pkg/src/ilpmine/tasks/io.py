"""JSONL sample files: one ``{"id", "w", "y"}`` object per line."""

from __future__ import annotations

import json

import numpy as np

from ..core import Sample, fraction_str, parse_rational

__all__ = ["read_jsonl", "write_jsonl", "sample_to_json", "DataError"]


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def sample_to_json(s: Sample) -> dict:
    return {"id": s.id, "w": [fraction_str(v) for v in s.w], "y": [int(v) for v in s.y]}


def write_jsonl(path, samples):
    with open(path, "w") as fh:
        for s in samples:
            fh.write(json.dumps(sample_to_json(s), separators=(",", ":")) + "\n")


def read_jsonl(path, require_dim=None) -> list[Sample]:
    out = []
    dim = require_dim
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                w = [parse_rational(v) for v in obj["w"]]
                y = obj["y"]
                if any(not isinstance(v, int) or isinstance(v, bool) for v in y):
                    raise DataError("y must hold integers")
                s = Sample(w, np.array(y, dtype=np.int64), str(obj.get("id", f"line-{lineno}")))
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
                raise DataError(f"{path}:{lineno}: {e}") from None
            if dim is None:
                dim = s.dim
            elif s.dim != dim:
                raise DataError(f"{path}:{lineno}: dimension {s.dim} differs from {dim}")
            out.append(s)
    return out
