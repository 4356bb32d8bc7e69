"""Acceptance criteria, each at its stated tolerance.

Every test records one ``criterion N: PASS/FAIL`` line; the lines are
printed in the terminal summary (and to stdout, visible with ``-s``).
"""

import math

import numpy as np
import pytest

from lorentz_verify.conformal import certify, intrinsic_leaf_certificate, project_to_leaf, projected_field
from lorentz_verify.fixtures import build_ambient, build_field, build_immersion
from lorentz_verify.flow import build_flowed_immersion, decay_law_check, simons_equivalence_probe
from lorentz_verify.geometry import curvature_at
from lorentz_verify.hypersurface import (shape_operator_at, support_identities_check, support_lhs_exact,
                                         support_lhs_fd)
from lorentz_verify.models import grw_curvature_residual, slice_data
from lorentz_verify.newton import invariants_from_matrix, newton_identities_check
from lorentz_verify.rng import make_rng
from lorentz_verify.runner import emit_report, run_scenario
from lorentz_verify.variational import (VariationScenario, first_variation_r_area, first_variation_volume,
                                        lr_support_identity_check, second_variation, stability_probe)

DS = {"model": "de-sitter-grw", "n": 2}
ADS = {"model": "anti-de-sitter-grw", "n": 2}
DSH = {"model": "de-sitter-hyperbolic-grw", "n": 2}


def _record(log, k, rows):
    ok = all(r[1] for r in rows)
    detail = "; ".join(f"{name}={val}" for name, _, val in rows)
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    log(line)
    failed = [name for name, good, _ in rows if not good]
    assert not failed, line


def _samples(imm, rng, npts):
    lo = np.array([d[0] for d in imm.param_domain])
    hi = np.array([d[1] for d in imm.param_domain])
    return (lo + 0.1 * (hi - lo))[:, None] + (0.8 * (hi - lo))[:, None] * rng.random((len(lo), npts))


def test_criterion_1_constant_curvature(acceptance_log):
    rows = []
    for desc, c in ((DS, 1.0), (ADS, -1.0)):
        amb = build_ambient(desc)
        rng = make_rng(101)
        P = amb.space.sample(rng, 100)
        X = rng.standard_normal((3, 100))
        Y = rng.standard_normal((3, 100))
        K = curvature_at(amb.space, P).sectional(X, Y)
        err = float(np.abs(K - c).max())
        rows.append((f"{desc['model']}.sectional", err < 1e-7, f"{err:.1e}"))
        w = grw_curvature_residual(amb.grw, c)
        worst = max(w["res1"], w["res2"])
        rows.append((f"{desc['model']}.warp", worst < 1e-10, f"{worst:.1e}"))
    _record(acceptance_log, 1, rows)


def test_criterion_2_conformal_certificates(acceptance_log):
    rows = []
    flat = build_ambient({"model": "minkowski", "n": 2})
    x = build_field(flat, {"kind": "position"})
    cert = certify(x, samples=flat.space.sample(make_rng(2), 64))
    dev = float(np.abs(cert.psi_values - 1.0).max())
    rows.append(("position.label", cert.label == "homothetic", cert.label))
    rows.append(("position.psi", dev < 1e-10, f"{dev:.1e}"))
    for desc, warp, ref in ((DSH, "sinh", np.cosh), (ADS, "sin", np.cos)):
        amb = build_ambient(desc)
        V = build_field(amb, {"kind": "time-scaled", "warp": warp})
        P = amb.space.sample(make_rng(3), 64)
        cert = certify(V, samples=P)
        dev = float(np.abs(cert.psi_values - ref(P[0])).max())
        rows.append((f"{warp}.label", cert.label == "closed_conformal", cert.label))
        rows.append((f"{warp}.psi", dev < 1e-8, f"{dev:.1e}"))
    e = build_field(flat, {"kind": "constant", "vector": [0.3, 0.0, 1.0]})
    leaf = build_immersion(flat, {"kind": "hyperboloid"}, {})
    u = _samples(leaf, make_rng(4), 12)
    pr = project_to_leaf(e, x, leaf.point(u))
    r = intrinsic_leaf_certificate(leaf, projected_field(e, x), u, psi_expected=pr.psi_U)
    rows.append(("projected.closed", r["closed_residual"] < 1e-7, f"{r['closed_residual']:.1e}"))
    _record(acceptance_log, 2, rows)


def test_criterion_3_slice_shape_operator(acceptance_log):
    rows = []
    for desc in (DS, ADS, DSH):
        amb = build_ambient(desc)
        worst = 0.0
        for t0 in (0.5, 1.0, 1.5):
            sl = build_immersion(amb, {"kind": "slice", "t0": t0, "pad": 0.4}, {})
            u = _samples(sl, make_rng(5), 8)
            lam = slice_data(amb.grw, t0)["umbilicity_factor"]
            # independent closed form of -phi'/phi for the three warps
            phi = {"de-sitter-grw": (np.cosh, np.sinh), "anti-de-sitter-grw": (np.sin, np.cos),
                   "de-sitter-hyperbolic-grw": (np.sinh, np.cosh)}[desc["model"]]
            assert abs(lam + phi[1](t0) / phi[0](t0)) < 1e-12
            A = shape_operator_at(sl, u).A
            worst = max(worst, float(np.abs(A - lam * np.eye(2)[..., None]).max()))
        rows.append((desc["model"], worst < 1e-8, f"{worst:.1e}"))
    _record(acceptance_log, 3, rows)


def test_criterion_4_newton_suite(acceptance_log):
    rng = make_rng(6)
    rows = []
    for n in (2, 3):
        M = rng.standard_normal((n, n, 1000))
        r = newton_identities_check(invariants_from_matrix(0.5 * (M + np.swapaxes(M, 0, 1))))
        for k, v in r.items():
            if isinstance(v, float):
                rows.append((f"n{n}.{k}", v < 1e-9, f"{v:.1e}"))
    _record(acceptance_log, 4, rows)


def _support_fixtures():
    flat = build_ambient({"model": "minkowski", "n": 2})
    x = build_field(flat, {"kind": "position"})
    e = build_field(flat, {"kind": "constant", "vector": [0.3, 0.0, 1.0]})
    ds = build_ambient(DS)
    return [
        ("hyperplane", build_immersion(flat, {"kind": "hyperplane"}, {}), x, e),
        ("H2", build_immersion(flat, {"kind": "hyperboloid"}, {}), x, e),
        ("desitter-slice", build_immersion(ds, {"kind": "slice", "t0": 1.0, "pad": 0.4}, {}),
         build_field(ds, {"kind": "canonical"}), build_field(ds, {"kind": "desitter-W"})),
    ]


def test_criterion_5_support_identities(acceptance_log):
    rows = []
    for name, imm, V, W in _support_fixtures():
        u = _samples(imm, make_rng(7), 10)
        r = support_identities_check(imm, V, u, W)
        worst = max(r[k] for k in ("grad_fV", "laplace_fV", "div_Vt", "grad_g", "laplace_g"))
        a = support_lhs_exact(imm, V, u, W)
        b = support_lhs_fd(imm, V, u, W)
        fd = max(float(np.abs(np.asarray(a[k]) - np.asarray(b[k])).max()) for k in a)
        rows.append((f"{name}.identities", worst < 1e-5, f"{worst:.1e}"))
        rows.append((f"{name}.fd_oracle", fd < 1e-3, f"{fd:.1e}"))
    _record(acceptance_log, 5, rows)


def test_criterion_6_simons_flow(acceptance_log):
    ds = build_ambient(DS)
    V = build_field(ds, {"kind": "canonical"})
    fields = {"V": V}
    gc = build_immersion(ds, {"kind": "leaf-circle", "field": "V", "t0": 1.0, "theta": math.pi / 2}, fields)
    sc = build_immersion(ds, {"kind": "leaf-circle", "field": "V", "t0": 1.0, "theta": math.pi / 3}, fields)
    rows = []
    fi = build_flowed_immersion(gc, V, 0.4, nq=8)
    assert fi.epsilon == pytest.approx(0.4)
    dec = decay_law_check(fi, np.linspace(-0.4, 0.4, 9))
    rows.append(("great_circle.sup_Hbar", dec["sup_Hbar"] < 1e-6, f"{dec['sup_Hbar']:.1e}"))
    fi = build_flowed_immersion(sc, V, 0.4, nq=8)
    dec = decay_law_check(fi, np.linspace(-0.4, 0.4, 9))
    rows.append(("small_circle.decay", dec["residual"] < 1e-5, f"{dec['residual']:.1e}"))

    ads = build_ambient(ADS)
    Va = build_field(ads, {"kind": "canonical"})
    fa = {"V": Va}
    fixtures = [("great_circle", gc, V, "all_small"), ("small_circle", sc, V, "all_large"),
                ("ads_geodesic", build_immersion(ads, {"kind": "leaf-curve", "field": "V", "t0": math.pi / 3}, fa),
                 Va, "all_small"),
                ("ads_bent", build_immersion(ads, {"kind": "leaf-curve", "field": "V", "t0": math.pi / 3,
                                                   "bend": 0.4}, fa), Va, "all_large")]
    for name, base, W, expect in fixtures:
        p = simons_equivalence_probe(base, W, 0.4, nq=8)
        rows.append((f"{name}.joint", p["equivalent"] and p["verdict"] == expect, p["verdict"]))
    _record(acceptance_log, 6, rows)


@pytest.fixture(scope="module")
def slice_variation():
    ds = build_ambient(DS)
    sphere = build_immersion(ds, {"kind": "slice", "t0": 1.0}, {})
    f = lambda u: 1.0 + 0.3 * np.sin(u[0]) * np.cos(u[1])
    return ds, sphere, VariationScenario(sphere, f, sizes=(12, 12))


def test_criterion_7_variational_suite(acceptance_log, slice_variation):
    ds, sphere, scn = slice_variation
    rows = []
    v = first_variation_volume(scn)
    rows.append(("volume", v["residual"] < 1e-6, f"{v['residual']:.1e}"))
    for r in (0, 1):
        a = first_variation_r_area(scn, r, t_extra=0.02)
        rows.append((f"r{r}.first_variation", a["residual_1"] < 1e-4, f"{a['residual_1']:.1e}"))
        rows.append((f"r{r}.pointwise", a["residual_2"] < 1e-4, f"{a['residual_2']:.1e}"))
    s = second_variation(scn, 1)
    rows.append(("second_variation", s["relative"] < 1e-3, f"{s['relative']:.1e}"))
    V = build_field(ds, {"kind": "canonical"})
    u = _samples(sphere, make_rng(8), 8)
    lr = lr_support_identity_check(sphere, V, 1, u)
    rows.append(("L_r_support", lr["residual"] < 1e-5, f"{lr['residual']:.1e}"))
    _record(acceptance_log, 7, rows)


def test_criterion_8_stability_probe(acceptance_log):
    ds = build_ambient(DS)
    V = build_field(ds, {"kind": "canonical"})
    sphere = build_immersion(ds, {"kind": "slice", "t0": 1.0}, {})
    rep = stability_probe(sphere, V, 1, sizes=(12, 12), time_of=lambda X: X[0])
    dev = max(abs(rep.cosh_theta_max - 1), abs(rep.cosh_theta_min - 1))
    H1 = np.asarray(rep.H[1], dtype=float)
    H2 = np.asarray(rep.H[2], dtype=float)
    e1 = float(np.abs(H1 - math.tanh(1.0)).max())
    e2 = float(np.abs(H2 - math.tanh(1.0) ** 2).max())
    rows = [("cosh_theta", dev < 1e-8, f"{dev:.1e}"),
            ("classifier", rep.classifier == "leaf", rep.classifier),
            ("H1", e1 < 1e-8, f"{e1:.1e}"), ("H2", e2 < 1e-8, f"{e2:.1e}"),
            ("corollary_evaluated", rep.corollary is not None and rep.corollary["holds"],
             None if rep.corollary is None else f"margin {rep.corollary['margin_min']:.4f}")]
    _record(acceptance_log, 8, rows)


def test_criterion_9_reproducibility(acceptance_log):
    rows = []
    for suite in ("newton-suite", "simons-small-circle"):
        a = emit_report(run_scenario(suite), "json", include_volatile=False)
        b = emit_report(run_scenario(suite), "json", include_volatile=False)
        rows.append((suite, a == b, "identical" if a == b else "differs"))
    _record(acceptance_log, 9, rows)
