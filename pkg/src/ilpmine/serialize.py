"""JSON form of mined systems.

Integers stay integers, rationals that are exact floats are written as JSON
numbers and everything else as ``"p/q"`` strings, so loading and dumping a
file reproduces it byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import EqualitySystem, fraction_str, parse_rational, rational_array
from .latent import LatentSchema
from .miner import InnerPolytope, OuterPolytope, inner_insert

__all__ = ["MinedModel", "model_to_json", "model_from_json", "dump_model", "dumps_model", "load_model", "FORMAT"]

FORMAT = "ilpmine-model/1"


@dataclass
class MinedModel:
    dim: int
    header: dict = field(default_factory=dict)
    outer: OuterPolytope | None = None
    inner: InnerPolytope | None = None
    equalities: EqualitySystem | None = None
    schema: LatentSchema | None = None


def _ints(a):
    return [int(v) for v in a]


def model_to_json(model: MinedModel) -> dict:
    d = model.dim
    eq = model.equalities
    if eq is None and model.outer is not None:
        eq = model.outer.equalities
    if eq is None:
        eq = EqualitySystem.empty(d)
    doc = {"format": FORMAT, "header": model.header, "dim": d,
           "equalities": {"w_eq": [_ints(r) for r in eq.w_eq], "c": _ints(eq.c)}}
    o = model.outer
    if o is not None:
        cuts = []
        for i, (w, rhs) in enumerate(zip(o.cut_w, o.cut_rhs)):
            cut = {"w": [fraction_str(v) for v in w], "rhs": fraction_str(rhs)}
            if o.slacks is not None:
                cut["xi"] = fraction_str(o.slacks[i])
            if o.sample_ids:
                cut["id"] = o.sample_ids[i]
            cuts.append(cut)
        doc["cuts"] = cuts
        doc["prior"] = [{"w": [fraction_str(v) for v in w], "rhs": fraction_str(b)}
                        for w, b in zip(o.prior_A, o.prior_b)]
        doc["bounds"] = [[int(a), int(b)] for a, b in zip(o.lower, o.upper)]
    else:
        doc["cuts"] = []
        doc["prior"] = []
        doc["bounds"] = [[0, 1]] * d
    if model.inner is not None:
        doc["inner"] = {"vertices": [_ints(v) for v in model.inner.vertices]}
    if model.schema is not None:
        doc["latent"] = model.schema.to_json()
    return doc


def model_from_json(doc: dict) -> MinedModel:
    if doc.get("format") != FORMAT:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    d = int(doc["dim"])
    eqd = doc["equalities"]
    W = np.array(eqd["w_eq"], dtype=object).reshape(len(eqd["c"]), d)
    c = np.array(eqd["c"], dtype=object)
    try:
        W, c = W.astype(np.int64), c.astype(np.int64)
    except OverflowError:
        pass
    eq = EqualitySystem(W, c)
    schema = LatentSchema.from_json(doc["latent"]) if "latent" in doc else None
    outer = None
    bounds = np.array(doc.get("bounds") or [[0, 1]] * d, dtype=np.int64).reshape(d, 2)
    if doc.get("cuts") or doc.get("prior") or "inner" not in doc:
        cuts = doc.get("cuts", [])
        if cuts:
            rows = [rational_array([parse_rational(v) for v in cut["w"]]) for cut in cuts]
            for i, r in enumerate(rows):
                if len(r) != d:
                    raise ValueError(f"cut {i} has length {len(r)}, expected {d}")
            obj = any(r.dtype == object for r in rows)
            cut_w = np.empty((len(rows), d), dtype=object) if obj else np.vstack(rows)
            if obj:
                for i, r in enumerate(rows):
                    cut_w[i] = r
            rhs = rational_array([parse_rational(cut["rhs"]) for cut in cuts])
        else:
            cut_w, rhs = np.zeros((0, d)), np.zeros(0)
        slacks = None
        if cuts and all("xi" in cut for cut in cuts):
            slacks = np.array([rational_array([parse_rational(cut["xi"])])[0] for cut in cuts], dtype=object)
        prior = doc.get("prior", [])
        pA = np.vstack([rational_array([parse_rational(v) for v in p["w"]]) for p in prior]) if prior else None
        pb = rational_array([parse_rational(p["rhs"]) for p in prior]) if prior else None
        ids = [cut["id"] for cut in cuts] if cuts and all("id" in cut for cut in cuts) else []
        outer = OuterPolytope(d, cut_w, rhs, eq, bounds[:, 0].copy(), bounds[:, 1].copy(),
                              pA, pb, slacks, ids)
    inner = None
    if "inner" in doc:
        inner = InnerPolytope(d)
        for v in doc["inner"]["vertices"]:
            inner_insert(inner, v)
    return MinedModel(d, doc.get("header", {}), outer, inner, eq, schema)


def dumps_model(model: MinedModel) -> str:
    return json.dumps(model_to_json(model), separators=(",", ":")) + "\n"


def dump_model(model: MinedModel, path):
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> MinedModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))
