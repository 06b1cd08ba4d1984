import json
from fractions import Fraction

import numpy as np
import pytest

from ilpmine.core import Sample
from ilpmine.latent import expand_samples, mine_with_latents, observed_pairs
from ilpmine.miner import InnerPolytope, build_outer, infer_inner, infer_outer, mine_equalities
from ilpmine.serialize import MinedModel, dump_model, dumps_model, load_model, model_from_json
from ilpmine.tasks import hmc, mst


def roundtrip(model, tmp_path):
    path = tmp_path / "m.json"
    dump_model(model, path)
    first = path.read_bytes()
    back = load_model(path)
    dump_model(back, path)
    assert path.read_bytes() == first
    return back


def test_outer_eq_roundtrip_and_inference(tmp_path):
    data = mst.gen_mst_dataset(5, 300, seed=1)
    eq = mine_equalities(data)
    model = MinedModel(10, {"task": "mst"}, build_outer(data, eq=eq), InnerPolytope.from_samples(data), eq)
    back = roundtrip(model, tmp_path)
    assert back.equalities == eq
    for s in mst.gen_mst_dataset(5, 20, seed=2):
        assert np.array_equal(infer_outer(back.outer, s.w).assignment, infer_outer(model.outer, s.w).assignment)
        assert np.array_equal(infer_inner(back.inner, s.w), infer_inner(model.inner, s.w))


def test_rational_weights_survive(tmp_path):
    data = [Sample(np.array([Fraction(1, 3), Fraction(-2, 7)], dtype=object), np.array([1, 0])),
            Sample(np.array([0.1, 0.25]), np.array([0, 1]))]
    model = MinedModel(2, {}, build_outer(data, slack=True))
    back = roundtrip(model, tmp_path)
    assert list(back.outer.cut_w[0]) == [Fraction(1, 3), Fraction(-2, 7)]
    assert back.outer.cut_w[1][0] == Fraction(0.1)
    assert list(back.outer.slacks) == list(model.outer.slacks)


def test_latent_schema_roundtrip(tmp_path):
    spec = hmc.HierarchySpec(2, 2)
    data = hmc.gen_hmc_dataset(spec, 50, 0.1, seed=0)
    schema = observed_pairs(data)
    eq = mine_with_latents(data, schema)
    model = MinedModel(schema.dim, {"spec": spec.to_json()},
                       build_outer(expand_samples(data, schema), eq=eq, slack=True), None, eq, schema)
    back = roundtrip(model, tmp_path)
    assert back.schema == schema


def test_inner_only_model(tmp_path):
    data = mst.gen_mst_dataset(4, 30, seed=3)
    back = roundtrip(MinedModel(6, {}, inner=InnerPolytope.from_samples(data)), tmp_path)
    assert back.outer is None
    assert len(back.inner) == len(InnerPolytope.from_samples(data))


def test_unknown_format_rejected():
    doc = json.loads(dumps_model(MinedModel(2, {}, inner=InnerPolytope(2))))
    doc["format"] = "other/9"
    with pytest.raises(ValueError, match="format"):
        model_from_json(doc)
