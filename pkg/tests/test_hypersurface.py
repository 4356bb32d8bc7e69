import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorentz_verify.bernstein import bernstein_audit
from lorentz_verify.errors import NotSpacelike, QuadratureTooCoarse
from lorentz_verify.fixtures import build_ambient, build_field, build_immersion
from lorentz_verify.hypersurface import (SpacelikeImmersion, frame_at, lr_apply, self_adjoint_residual,
                                         shape_operator_at, shape_operator_fd, support_identities_check)
from lorentz_verify.quadrature import integrate, tensor_mesh
from lorentz_verify.rng import make_rng

FLAT = build_ambient({"model": "minkowski", "n": 2})
DS = build_ambient({"model": "de-sitter-grw", "n": 2})


def _u(npts=6, seed=0, lo=-0.8, hi=0.8):
    return make_rng(seed).uniform(lo, hi, (2, npts))


def test_frame_is_future_unit_and_orthogonal():
    imm = build_immersion(FLAT, {"kind": "bump"}, {})
    fr = frame_at(imm, _u())
    r = fr.residuals(FLAT.space)
    assert r["unit"] < 1e-12 and r["orthogonal"] < 1e-12
    assert np.all(fr.normal[2] > 0)


def test_hyperboloid_is_umbilical_with_unit_factor():
    imm = build_immersion(FLAT, {"kind": "hyperboloid"}, {})
    inv = shape_operator_at(imm, _u())
    lam = inv.eigenvalues
    assert np.allclose(lam, lam[:, :1], atol=1e-12)
    assert np.allclose(np.abs(lam), 1.0, atol=1e-12)
    assert np.allclose(np.asarray(inv.H[2]), np.asarray(inv.H[1]) ** 2, atol=1e-12)


def test_hyperplane_is_totally_geodesic():
    inv = shape_operator_at(build_immersion(FLAT, {"kind": "hyperplane"}, {}), _u())
    assert np.abs(inv.A).max() < 1e-14


@pytest.mark.parametrize("kind", ["bump", "hyperboloid"])
def test_exact_shape_operator_matches_fd_oracle(kind):
    imm = build_immersion(FLAT, {"kind": kind}, {})
    u = _u(5, 1)
    assert np.abs(shape_operator_at(imm, u).A - shape_operator_fd(imm, u)).max() < 1e-5
    assert self_adjoint_residual(imm, u) < 1e-12


def test_fd_oracle_on_curved_ambient():
    sl = build_immersion(DS, {"kind": "slice", "t0": 0.6, "pad": 0.4}, {})
    u = make_rng(2).uniform(0.6, 2.4, (2, 4))
    assert np.abs(shape_operator_at(sl, u).A - shape_operator_fd(sl, u)).max() < 1e-5


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_timelike_surface_rejected():
    imm = SpacelikeImmersion(FLAT.space, lambda u: [u[0], 0.0 * u[0], u[1]], ((-1, 1), (-1, 1)), (False, False))
    with pytest.raises(NotSpacelike):
        shape_operator_at(imm, _u())


def test_lr_trace_and_divergence_forms_agree():
    imm = build_immersion(FLAT, {"kind": "bump"}, {})
    f = lambda u: np.sin(u[0]) * np.cosh(u[1])
    u = _u(5, 3)
    for r in (0, 1):
        assert np.allclose(lr_apply(imm, f, r, u), lr_apply(imm, f, r, u, "divergence"), atol=1e-10)
    with pytest.raises(ValueError):
        lr_apply(imm, f, 0, u, "weak")


@settings(max_examples=10, deadline=None)
@given(st.floats(-0.1, 0.1))
def test_support_identities_hold_on_bumps(a):
    imm = build_immersion(FLAT, {"kind": "bump", "amplitude": a}, {})
    x = build_field(FLAT, {"kind": "position"})
    e = build_field(FLAT, {"kind": "constant", "vector": [0.2, 0.1, 1.0]})
    r = support_identities_check(imm, x, _u(4, 4), e)
    for k in ("grad_fV", "laplace_fV", "div_Vt", "grad_g", "laplace_g"):
        assert r[k] < 1e-8, k


def test_quadrature_exactness_and_convergence():
    m = tensor_mesh(((0, math.pi), (0, 2 * math.pi)), (False, True), (12, 12))
    assert float(np.sin(m.u[0]) @ m.w) == pytest.approx(4 * math.pi, rel=1e-12)
    I, err = integrate(lambda u: np.exp(u[0]) * np.cos(u[1]) ** 2, ((0, 1), (0, 2 * math.pi)),
                       (False, True), (16, 16))
    assert float(I) == pytest.approx((math.e - 1) * math.pi, rel=1e-12)
    with pytest.raises(QuadratureTooCoarse):
        integrate(lambda u: np.cos(40 * u[0]), ((0, 1),), (False,), (6,))


def test_rigidity_audit_on_flat_fixtures():
    x = build_field(FLAT, {"kind": "position"})
    e = build_field(FLAT, {"kind": "constant", "vector": [0.0, 0.0, 1.0]})
    plane = build_immersion(FLAT, {"kind": "hyperplane"}, {})
    rep = bernstein_audit(plane, e, x, sizes=(8, 8))
    assert rep["totally_geodesic_statement"] == "conclusion_satisfied"
    hyp = build_immersion(FLAT, {"kind": "hyperboloid"}, {})
    rep = bernstein_audit(hyp, x, sizes=(8, 8))
    assert rep["umbilical_statement"] == "conclusion_satisfied"
    bump = build_immersion(FLAT, {"kind": "bump"}, {})
    with pytest.raises(QuadratureTooCoarse):
        bernstein_audit(bump, x, sizes=(8, 8))
    rep = bernstein_audit(bump, x, sizes=(16, 16))
    assert rep["umbilical_statement"] == "inapplicable"
