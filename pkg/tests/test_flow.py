import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorentz_verify.errors import ConformalFactorVanishes, HypothesisUnverified, LeftChart, SingularV
from lorentz_verify.fields import AmbientVectorField
from lorentz_verify.fixtures import build_ambient, build_field, build_immersion
from lorentz_verify.flow import (LeafSubmanifoldImmersion, build_flowed_immersion, decay_law_check,
                                 exit_time, flow_conformal_field, frame_orthonormality_residual,
                                 mean_curvature_vector, simons_equivalence_probe, verify_ambient_hypothesis)
from lorentz_verify.geometry import metric_at
from lorentz_verify.models import make_grw, sphere_fiber

DS = build_ambient({"model": "de-sitter-grw", "n": 2})
V = build_field(DS, {"kind": "canonical"})
F = {"V": V}


def circle(theta, t0=1.0):
    return build_immersion(DS, {"kind": "leaf-circle", "field": "V", "t0": t0, "theta": theta}, F)


@settings(max_examples=8, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_flow_composition(s, t):
    p = np.array([0.4, 1.0, 2.0])
    a = flow_conformal_field(V, flow_conformal_field(V, p, s), t)
    b = flow_conformal_field(V, p, s + t)
    assert np.abs(a - b).max() < 1e-9


def test_flow_of_canonical_field_closed_form():
    # along cosh(t) d_t the time obeys dT/dt = cosh T, i.e. sinh T = tan(t + arctan(sinh T0))
    p = np.array([0.5, 1.0, 2.0])
    out = flow_conformal_field(V, p, 0.3)
    assert math.sinh(out[0]) == pytest.approx(math.tan(0.3 + math.atan(math.sinh(0.5))), rel=1e-10)
    assert np.allclose(out[1:], p[1:])


def test_left_chart_reports_exit_time():
    # d_t leaves the chart (0, pi) of anti-de Sitter exactly at time pi - t0
    ads = build_ambient({"model": "anti-de-sitter-grw"})
    dt = build_field(ads, {"kind": "constant", "vector": [1.0, 0.0, 0.0]})
    with pytest.raises(LeftChart) as ei:
        flow_conformal_field(dt, np.array([1.5, 0.1, 0.1]), 5.0)
    assert ei.value.exit_time == pytest.approx(math.pi - 1.5, abs=1e-8)
    assert exit_time(dt, np.array([[1.5], [0.1], [0.1]]), -5.0) == pytest.approx(1.5, abs=1e-8)
    assert exit_time(dt, np.array([[1.5], [0.1], [0.1]]), 1.0) == math.inf


def test_great_circle_stays_maximal():
    fi = build_flowed_immersion(circle(math.pi / 2), V, 0.4, nq=6)
    d = decay_law_check(fi, np.linspace(-0.4, 0.4, 5))
    assert d["sup_Hbar"] < 1e-10
    assert d["eq_V_residual"] < 1e-8
    assert d["nu_nu_normal"] < 1e-8


def test_small_circle_mean_curvature_closed_form():
    # the flowed circle sits in the slice T(t) with geodesic curvature cot(theta)/cosh T,
    # and the time lines are geodesics, so |H-bar| = cot(theta) / (2 cosh T)
    th = math.pi / 3
    fi = build_flowed_immersion(circle(th), V, 0.4, nq=6)
    for t in (-0.3, 0.0, 0.25):
        H = mean_curvature_vector(fi, t, 0)
        y = fi.state(t)[0][:, 0]
        g = metric_at(DS.space, y)
        norm = math.sqrt(abs(float(H @ g @ H)))
        ref = abs(math.cos(t + math.atan(math.sinh(1.0)))) / (2 * math.tan(th))
        assert norm == pytest.approx(ref, rel=1e-8)


def test_decay_residual_tracks_integrator_tolerance():
    base = circle(math.pi / 3)
    ts = np.linspace(-0.4, 0.4, 5)
    loose = decay_law_check(build_flowed_immersion(base, V, 0.4, nq=4, rtol=1e-6, atol=1e-8), ts)["residual"]
    tight = decay_law_check(build_flowed_immersion(base, V, 0.4, nq=4), ts)["residual"]
    assert tight < 1e-10
    assert tight <= loose


def test_frame_stays_orthonormal():
    fi = build_flowed_immersion(circle(1.1), V, 0.4, nq=6)
    assert frame_orthonormality_residual(fi) < 1e-10


def test_tangential_components_decay():
    d = decay_law_check(build_flowed_immersion(circle(1.0), V, 0.4, nq=6))
    assert d["tangential_decay_residual"] < 1e-8


def test_equator_has_vanishing_factor():
    # at t0 = 0 the factor sinh t of cosh(t) d_t vanishes on the base
    with pytest.raises(ConformalFactorVanishes):
        build_flowed_immersion(circle(1.0, t0=0.0), V, 0.2)


def test_base_must_be_orthogonal_to_field():
    tilted = LeafSubmanifoldImmersion(DS.space, lambda q: [1.0 + 0.2 * q[0], 1.0 + 0 * q[0], q[0]],
                                      ((0.0, 1.0),), (False,), V, "tilted")
    with pytest.raises(ValueError):
        build_flowed_immersion(tilted, V, 0.2, nq=4)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_field_vanishing_on_base():
    Z = AmbientVectorField(DS.space, lambda x: [0.0 * x[0]] * 3, "zero")
    base = LeafSubmanifoldImmersion(DS.space, lambda q: [1.0 + 0 * q[0], 1.0 + 0 * q[0], q[0]],
                                    ((0.0, 2 * math.pi),), (True,), Z, "c", normal_frame=None)
    with pytest.raises(SingularV):
        build_flowed_immersion(base, Z, 0.2, nq=4)


def test_ambient_hypothesis_rejected_off_model():
    m = make_grw((-math.inf, math.inf), "exp", sphere_fiber(2), name="exp-grw")
    W = m.canonical_field()
    pts = np.array([[0.5, 0.7], [1.0, 1.2], [0.3, 2.0]])
    assert not verify_ambient_hypothesis(W, pts)["satisfied"]
    base = LeafSubmanifoldImmersion(m.space, lambda q: [0.5 + 0 * q[0], math.pi / 3 + 0 * q[0], q[0]],
                                    ((0.0, 2 * math.pi),), (True,), W, "c")
    fi = build_flowed_immersion(base, W, 0.2, nq=4)
    with pytest.raises(HypothesisUnverified):
        decay_law_check(fi)


def test_ricci_null_model_passes_hypothesis():
    tw = build_ambient({"model": "t-warped-flat"})
    W = build_field(tw, {"kind": "canonical"})
    r = verify_ambient_hypothesis(W, tw.space.sample(np.random.default_rng(0), 5))
    assert r["satisfied"] and r["ricci_V"] < 1e-10


def test_equivalence_probe_on_flat_line():
    tw = build_ambient({"model": "t-warped-flat"})
    W = build_field(tw, {"kind": "canonical"})
    line = build_immersion(tw, {"kind": "leaf-curve", "field": "V", "t0": 1.0, "offset": 0.2}, {"V": W})
    p = simons_equivalence_probe(line, W, 0.3, nq=5)
    assert p["verdict"] == "all_small" and p["equivalent"]
