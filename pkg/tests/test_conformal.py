import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorentz_verify.conformal import (certify, factor_from_directions, gradient_identities_check,
                                      intrinsic_leaf_certificate, leaf_umbilicity_check, project_to_leaf,
                                      projected_field)
from lorentz_verify.errors import SampleSetEmpty
from lorentz_verify.fields import AmbientVectorField
from lorentz_verify.fixtures import build_ambient, build_field, build_immersion
from lorentz_verify.rng import make_rng

FLAT = build_ambient({"model": "minkowski", "n": 2})


def test_labels():
    P = FLAT.space.sample(make_rng(0), 32)
    assert certify(build_field(FLAT, {"kind": "position"}), P).label == "homothetic"
    assert certify(build_field(FLAT, {"kind": "constant", "vector": [1, 0, 0]}), P).label == "parallel"
    rot = AmbientVectorField(FLAT.space, lambda x: [-x[1], x[0], 0.0 * x[0]], "rotation")
    assert certify(rot, P).label == "killing"
    boost = AmbientVectorField(FLAT.space, lambda x: [x[2], 0.0 * x[0], x[0]], "boost")
    assert certify(boost, P).label == "killing"
    bad = AmbientVectorField(FLAT.space, lambda x: [x[0] ** 2, 0.0 * x[0], 0.0 * x[0]], "bad")
    assert certify(bad, P).label == "not_conformal"
    ds = build_ambient({"model": "de-sitter-grw"})
    assert certify(build_field(ds, {"kind": "canonical"}), npts=16).label == "closed_conformal"


@settings(max_examples=20)
@given(st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3))
def test_factor_scales_linearly(lam):
    ds = build_ambient({"model": "de-sitter-grw"})
    V = build_field(ds, {"kind": "canonical"})
    P = ds.space.sample(make_rng(1), 8)
    a = certify(V, P).psi_values
    b = certify(V.scaled(lam), P).psi_values
    assert np.allclose(b, lam * a, atol=1e-12)


def test_factor_independent_of_direction():
    ds = build_ambient({"model": "de-sitter-grw"})
    V = build_field(ds, {"kind": "canonical"})
    P = ds.space.sample(make_rng(2), 6)
    X = make_rng(3).standard_normal((3, 6))
    assert np.allclose(factor_from_directions(V, P, X), np.sinh(P[0]), atol=1e-12)


def test_gradient_identities():
    ds = build_ambient({"model": "de-sitter-grw"})
    r = gradient_identities_check(build_field(ds, {"kind": "canonical"}), ds.space.sample(make_rng(4), 10))
    assert all(v < 1e-8 for v in r.values() if isinstance(v, float))


def test_empty_samples():
    with pytest.raises(SampleSetEmpty):
        certify(build_field(FLAT, {"kind": "position"}), np.zeros((3, 0)))


def test_leaf_projection_on_hyperboloid():
    x = build_field(FLAT, {"kind": "position"})
    e = build_field(FLAT, {"kind": "constant", "vector": [0.3, -0.5, 1.0]})
    leaf = build_immersion(FLAT, {"kind": "hyperboloid"}, {})
    u = make_rng(5).uniform(-0.8, 0.8, (2, 10))
    pr = project_to_leaf(e, x, leaf.point(u))
    r = intrinsic_leaf_certificate(leaf, projected_field(e, x), u, psi_expected=pr.psi_U)
    assert r["closed_residual"] < 1e-9
    assert r["normal_leakage"] < 1e-12
    assert r["psi_mismatch"] < 1e-9


def test_leaf_shape_operator_relation():
    ds = build_ambient({"model": "de-sitter-grw"})
    V = build_field(ds, {"kind": "canonical"})
    sl = build_immersion(ds, {"kind": "slice", "t0": 0.8, "pad": 0.4}, {})
    u = make_rng(6).uniform(0.5, 2.5, (2, 6))
    r = leaf_umbilicity_check(V, sl, u)
    assert r["scaled_residual"] < 1e-12
    assert r["umbilicity"] < 1e-12
