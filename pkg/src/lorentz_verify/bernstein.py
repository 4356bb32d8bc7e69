"""Hypothesis/conclusion audits for Bernstein-type rigidity statements.

Nothing is proved here.  On a compact parameter patch the audit measures
the quantities the rigidity statements are about (size of the second
fundamental form, integral of the tangential part of V, sign and constancy
of H, umbilicity, Ricci curvature along the normal) and reports whether the
sampled hypotheses hold and, if so, whether the sampled conclusions do.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .ad import as_obj, to_float
from .conformal import certify, orthonormal_frames, _frame_components
from .geometry import inner, riemann_obj
from .hypersurface import SpacelikeImmersion, geo_obj, tangential_obj
from .newton import invariants_from_matrix
from .quadrature import integrate, tensor_mesh


def _pointwise(imm: SpacelikeImmersion, V, u):
    Vf = V.eval
    geo = geo_obj(imm, [u[i] for i in range(u.shape[0])], 2)
    n = imm.n
    A = to_float(geo.A)
    G = to_float(geo.G)
    E = orthonormal_frames(G)
    Af = _frame_components(A, E)
    Af = np.moveaxis(Af, 0, -1)
    H = -np.einsum("aa...->...", A) / n
    normA = np.sqrt(np.einsum("ab...,ba...->...", Af, Af))
    umb = np.abs(Af - (np.einsum("aa...->...", Af) / n) * np.eye(n)[..., None]).max(axis=(0, 1))
    X = to_float(geo.X)
    Xl = [X[i] for i in range(X.shape[0])]
    Ric = np.einsum("kjkl...->jl...", to_float(riemann_obj(imm.ambient, Xl)))
    N = to_float(geo.N)
    ricNN = np.einsum("jl...,j...,l...->...", Ric, N, N)
    Vx = as_obj(Vf(list(geo.X)), 1)
    Vt = to_float(tangential_obj(geo, Vx))
    Vt2 = np.einsum("a...,ab...,b...->...", Vt, G, Vt)
    VV = to_float(T.box(inner(geo.g, Vx, Vx)))
    fV = to_float(T.box(inner(geo.g, Vx, geo.N)))
    sqrtG = to_float(T.box(geo.sqrtG))
    return {"H": H, "normA": normA, "umb": umb, "ricNN": ricNN, "Vt": np.sqrt(np.abs(Vt2)),
            "Vt_identity": np.abs(Vt2 - (VV + fV ** 2)), "sqrtG": sqrtG, "fV": fV}


def bernstein_audit(imm: SpacelikeImmersion, V, W=None, sizes=(16, 16), tol: float = 1e-6,
                    scales=(0.5, 0.75, 1.0), rtol: float = 1e-3) -> dict:
    """Audit a compact patch against the two rigidity statements.

    ``V`` plays the role of the parallel (first statement) or homothetic
    (second statement) field, ``W`` the homothetic non-parallel companion of
    the first.  ``scales`` shrink the patch about its center to report how
    the integral of ``|V^T|`` grows with the patch.
    """
    mesh = tensor_mesh(imm.param_domain, imm.periodic, sizes)
    pw = _pointwise(imm, V, mesh.u)

    def vt_density(u):
        q = _pointwise(imm, V, u)
        return q["Vt"] * q["sqrtG"]

    integrals = []
    centers = [0.5 * (lo + hi) for lo, hi in imm.param_domain]
    for s in scales:
        dom = tuple((c - s * 0.5 * (hi - lo), c + s * 0.5 * (hi - lo)) if not p else (lo, hi)
                    for c, (lo, hi), p in zip(centers, imm.param_domain, imm.periodic))
        val, err = integrate(vt_density, dom, imm.periodic, sizes, rtol=rtol, atol=rtol)
        integrals.append(float(val))
    incr = np.diff(integrals)
    if len(incr) == 0 or np.all(np.abs(incr) < 1e-12):
        trend = "constant"
    elif abs(incr[-1]) < 0.1 * abs(incr[0]):
        trend = "converging"
    else:
        trend = "increasing"

    H = pw["H"]
    report = {
        "sup_A": float(pw["normA"].max()),
        "int_Vt": integrals[-1],
        "int_Vt_by_scale": integrals,
        "int_Vt_trend": trend,
        "H_min": float(H.min()),
        "H_max": float(H.max()),
        "H_constant_sign": bool(H.min() >= -tol or H.max() <= tol),
        "H_variation": float(H.max() - H.min()),
        "umbilicity_residual": float(pw["umb"].max()),
        "sup_ric_NN": float(np.abs(pw["ricNN"]).max()),
        "min_ric_NN": float(pw["ricNN"].min()),
        "Vt_identity_residual": float(pw["Vt_identity"].max()),
    }
    cV = certify(V, samples=imm.point(mesh.u), tol=1e-8)
    report["V_class"] = cV.label
    ric_ok = report["min_ric_NN"] >= -tol

    # parallel V with homothetic non-parallel W, H of one sign
    if W is not None:
        cW = certify(W, samples=imm.point(mesh.u), tol=1e-8)
        report["W_class"] = cW.label
        hyp = cV.label == "parallel" and cW.is_nonparallel_homothetic and report["H_constant_sign"]
    else:
        hyp = False
    concl = report["sup_A"] < tol and report["sup_ric_NN"] < tol
    report["totally_geodesic_statement"] = ("inapplicable" if not hyp else
                                            "conclusion_satisfied" if concl else "conclusion_violated")
    # homothetic V, constant H
    hyp2 = cV.label in ("homothetic", "parallel") and report["H_variation"] < tol
    concl2 = report["umbilicity_residual"] < tol and report["sup_ric_NN"] < tol
    report["umbilical_statement"] = ("inapplicable" if not hyp2 else
                                     "conclusion_satisfied" if concl2 else "conclusion_violated")
    report["ambient_ricci_nonnegative_on_normals"] = bool(ric_ok)
    return report
