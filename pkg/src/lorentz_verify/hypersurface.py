"""Spacelike hypersurfaces: frames, shape operator, L_r, support-function identities.

Conventions: the unit normal N is timelike (``<N,N> = -1``) and future
pointing (``<N, anchor> < 0`` for the ambient time anchor); the shape
operator is ``A(X) = -D_X N``, so its matrix in the coordinate frame is
``G^{-1} h`` with ``h_ab = <N, D_a d_b x>``; ``H = H_1`` and ``n H = -tr A``.

Every geometric quantity is first built as a differentiable function of the
parameter list ``u`` (``*_obj`` helpers), so derivatives of curvature along
the hypersurface come from one more level of forward differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional

import numpy as np

from . import tensor as T
from .ad import as_obj, jet, obj_map, primal, to_float
from .errors import (DegenerateJacobian, NotClosedConformal, NotSpacelike,
                     TimeOrientationClash)
from .geometry import (ChartedSpace, check_domain, christoffel_obj, g_obj,
                       inner, nabla_field_obj, riemann_obj)
from .newton import CurvatureInvariants, invariants_from_matrix


@dataclass(frozen=True)
class SpacelikeImmersion:
    """A parametrized hypersurface ``u -> x(u)`` of a charted spacetime.

    ``normal_field``, when given, replaces the future unit normal by the
    normalization of that ambient field (used for leaves of a timelike
    field, where the normal is the field direction itself).
    """

    ambient: ChartedSpace
    map: Callable
    param_domain: tuple
    periodic: tuple
    name: str = "immersion"
    normal_field: Optional[Callable] = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.param_domain)

    def induced_space(self) -> ChartedSpace:
        n = self.n

        def metric(u):
            X, dX = jet(self.map, u, 1, 1)
            g = g_obj(self.ambient, list(X))
            return T.ein("ia,ij,jb->ab", dX, g, dX)

        return ChartedSpace(f"{self.name}-induced", n, (1,) * n, metric,
                            tuple((lo - 1e6 if p else lo, hi + 1e6 if p else hi)
                                  for (lo, hi), p in zip(self.param_domain, self.periodic)),
                            sample_box=self.param_domain)

    def point(self, u) -> np.ndarray:
        return to_float(as_obj(self.map(_ulist(u)), 1))


def _ulist(u):
    if isinstance(u, (list, tuple)):
        return list(u)
    u = np.asarray(u, dtype=float)
    return [u[i] for i in range(u.shape[0])]


class Geo:
    """Differentiable geometric data at a parameter list (object arrays)."""

    __slots__ = ("X", "dX", "ddX", "g", "G", "Ginv", "N", "Gam", "acc", "h", "A",
                 "gamma_ind", "sqrtG")


def _normal(imm: SpacelikeImmersion, X, dX, g):
    x = list(X)
    if imm.normal_field is not None:
        Nr = as_obj(imm.normal_field(x), 1)
        nn = inner(g, Nr, Nr)
        return T.scale(Nr, 1.0 / np.sqrt(-nn))
    D, n = dX.shape
    if D != n + 1:
        raise ValueError("normal of a submanifold of codimension > 1 is not unique")
    omega = np.empty(D, dtype=object)
    for i in range(D):
        omega[i] = (-1) ** i * T.det(np.delete(dX, i, axis=0))
    ginv = T.inv(g)
    Nr = T.ein("ij,j->i", ginv, omega)
    nn = sum(omega[i] * Nr[i] for i in range(D))
    Nr = T.scale(Nr, 1.0 / np.sqrt(-nn))
    anchor = imm.ambient.time_anchor(x)
    s = np.sign(np.asarray(primal(inner(g, Nr, as_obj([a + 0.0 * x[0] for a in anchor], 1))),
                           dtype=float))
    return T.scale(Nr, -s)


def geo_obj(imm: SpacelikeImmersion, u, order: int = 2) -> Geo:
    """Immersion data at ``u``; ``order=2`` adds the second fundamental form."""
    o = Geo()
    J = jet(imm.map, u, order, 1)
    o.X, o.dX = J[0], J[1]
    x = list(o.X)
    o.g = g_obj(imm.ambient, x)
    o.G = T.ein("ia,ij,jb->ab", o.dX, o.g, o.dX)
    o.Ginv = T.inv(o.G)
    o.sqrtG = np.sqrt(T.det(o.G))
    o.N = _normal(imm, o.X, o.dX, o.g)
    if order >= 2:
        o.ddX = J[2]
        o.Gam = christoffel_obj(imm.ambient, x)
        o.acc = o.ddX + T.ein("jkl,ka,lb->jab", o.Gam, o.dX, o.dX)
        o.h = T.ein("ij,i,jab->ab", o.g, o.N, o.acc)
        o.A = T.ein("ac,cb->ab", o.Ginv, o.h)
        low = T.ein("ij,iab,jd->dab", o.g, o.acc, o.dX)
        o.gamma_ind = T.ein("cd,dab->cab", o.Ginv, low)
    return o


def tangential_obj(geo: Geo, Vx):
    """Parameter components of the tangential part of an ambient vector."""
    return T.ein("ab,ib,ij,j->a", geo.Ginv, geo.dX, geo.g, Vx)


def hessian_obj(geo: Geo, df, ddf):
    return ddf - T.ein("cab,c->ab", geo.gamma_ind, df)


def invariants_obj(imm, u) -> CurvatureInvariants:
    return invariants_from_matrix(geo_obj(imm, u, 2).A)


def mean_curvature_obj(imm, u, r: int = 1):
    """H_r as a differentiable function of u."""
    return invariants_obj(imm, u).H[r]


# -- public ------------------------------------------------------------------

@dataclass
class FrameData:
    point: np.ndarray
    induced_metric: np.ndarray
    normal: np.ndarray
    tangent_basis: np.ndarray

    def residuals(self, ambient: ChartedSpace) -> dict:
        g = to_float(g_obj(ambient, [self.point[i] for i in range(self.point.shape[0])]))
        nn = np.einsum("ij...,i...,j...->...", g, self.normal, self.normal)
        nt = np.einsum("ij...,i...,ja...->a...", g, self.normal, self.tangent_basis)
        return {"unit": float(np.max(np.abs(nn + 1.0))), "orthogonal": float(np.max(np.abs(nt)))}


def _check_spacelike(G, tol=1e-12):
    Gf = to_float(G)
    n = Gf.shape[0]
    Gm = np.moveaxis(Gf.reshape(n, n, -1), -1, 0)
    eig = np.linalg.eigvalsh(Gm)
    scale = max(1.0, float(np.abs(eig).max()))
    if np.any(np.abs(eig) < tol * scale):
        raise DegenerateJacobian("immersion is not regular at some sample")
    if np.any(eig <= 0):
        raise NotSpacelike("induced metric is not positive definite")


def frame_at(imm: SpacelikeImmersion, u) -> FrameData:
    geo = geo_obj(imm, _ulist(u), 1)
    check_domain(imm.ambient, list(geo.X))
    _check_spacelike(geo.G)
    return FrameData(to_float(geo.X), to_float(geo.G), to_float(geo.N), to_float(geo.dX))


def shape_operator_at(imm: SpacelikeImmersion, u) -> CurvatureInvariants:
    geo = geo_obj(imm, _ulist(u), 2)
    check_domain(imm.ambient, list(geo.X))
    _check_spacelike(geo.G)
    return invariants_from_matrix(geo.A).floats()


def self_adjoint_residual(imm, u) -> float:
    geo = geo_obj(imm, _ulist(u), 2)
    GA = to_float(T.ein("ac,cb->ab", geo.G, geo.A))
    return float(np.abs(GA - np.swapaxes(GA, 0, 1)).max())


def shape_operator_fd(imm: SpacelikeImmersion, u, h: float = 1e-4) -> np.ndarray:
    """Shape operator as ``-D N`` with every derivative taken by central differences.

    Independent of :func:`shape_operator_at`: the normal is differentiated
    numerically instead of pairing it with second derivatives of the map,
    and the ambient connection comes from the finite-difference backend.
    """
    u = [np.asarray(v, dtype=float) for v in _ulist(u)]
    amb = imm.ambient.with_backend("fd")
    fdimm = SpacelikeImmersion(amb, imm.map, imm.param_domain, imm.periodic, imm.name,
                               imm.normal_field)

    def normal_at(uu):
        X, dX = T.fd_jet(imm.map, uu, 1, 1, h=1e-6)
        return to_float(_normal(fdimm, X, dX, g_obj(amb, list(X))))

    X, dX = (to_float(a) for a in T.fd_jet(imm.map, u, 1, 1, h=1e-6))
    N = normal_at(u)
    n = len(u)
    dN = []
    for a in range(n):
        up = list(u); up[a] = up[a] + h
        um = list(u); um[a] = um[a] - h
        dN.append((normal_at(up) - normal_at(um)) / (2 * h))
    dN = np.stack(dN, axis=1)  # (D, n, ...)
    Gam = to_float(christoffel_obj(amb, [X[i] for i in range(X.shape[0])]))
    g = to_float(g_obj(amb, [X[i] for i in range(X.shape[0])]))
    DN = dN + np.einsum("jkl...,ka...,l...->ja...", Gam, dX, N)
    # A^c_a = -G^{cb} <D_a N, d_b x>
    G = np.einsum("ia...,ij...,jb...->ab...", dX, g, dX)
    low = -np.einsum("ja...,jk...,kb...->ba...", DN, g, dX)
    Gm = np.moveaxis(G.reshape(n, n, -1), -1, 0)
    Lm = np.moveaxis(low.reshape(n, n, -1), -1, 0)
    A = np.linalg.solve(Gm, Lm)
    return np.moveaxis(A, 0, -1).reshape(low.shape)


def lr_apply(imm: SpacelikeImmersion, f: Callable, r: int, u, form: str = "trace"):
    """L_r f = tr(P_r Hess f) at u, or the divergence form div(P_r grad f)."""
    u = _ulist(u)
    if form == "trace":
        return to_float(T.box(lr_trace_obj(imm, f, r, u)))
    if form == "divergence":
        return to_float(T.box(lr_divergence_obj(imm, f, r, u)))
    raise ValueError(f"unknown form {form!r}")


def lr_trace_obj(imm, f, r, u, geo=None, inv=None):
    geo = geo or geo_obj(imm, u, 2)
    inv = inv or invariants_from_matrix(geo.A)
    _, df, ddf = jet(f, u, 2, 0)
    Hs = hessian_obj(geo, df, ddf)
    return T.trace(T.ein("ab,bc,cd->ad", inv.P[r], geo.Ginv, Hs))


def lr_divergence_obj(imm, f, r, u):
    def flux(v):
        geo = geo_obj(imm, v, 2)
        inv = invariants_from_matrix(geo.A)
        _, df = jet(f, v, 1, 0)
        Y = T.ein("ab,bc,c->a", inv.P[r], geo.Ginv, df)
        return T.scale(Y, geo.sqrtG)

    F0, dF = jet(flux, u, 1, 1)
    geo = geo_obj(imm, u, 1)
    return sum(dF[a, a] for a in range(len(u))) * (1.0 / geo.sqrtG)


# -- support-function identities ---------------------------------------------

def psi_obj(space, V, x):
    nab = nabla_field_obj(space, V, x)
    return T.trace(nab) * (1.0 / space.dim)


def _field_data(space, V, X):
    """psi and d(psi) of a field at ambient points (floats or batches)."""
    x = list(X)
    psi, dpsi = jet(lambda y: psi_obj(space, V, y), x, 1, 0)
    return psi[()], dpsi


def support_identities_check(imm: SpacelikeImmersion, V, u, W=None, certify_tol: float = 1e-6,
                             certificate=None) -> dict:
    """Residuals of the gradient/Laplacian identities for support functions.

    With ``f_V = <V, N>`` and ``g = <V, W>``, checks at the sample parameters:
    ``grad f_V = -A(V^T)``;
    ``Lap f_V = n V^T(H) + (Ric(N,N) + |A|^2) f_V + n (H psi - N(psi))``;
    ``grad g = psi_V W^T + psi_W V^T``;
    ``Lap g = W^T(psi_V) + V^T(psi_W) + n H (psi_V f_W + psi_W f_V) + 2 n psi_V psi_W``;
    ``div V^T = n psi_V + n H f_V``.
    The residual of the Laplacian identity with ``+ N(psi)`` is reported
    separately as ``laplace_fV_plus_variant``.
    Residuals of vector identities are induced-metric norms.
    """
    from .conformal import certify
    space = imm.ambient
    Vf = V.eval if hasattr(V, "eval") else V
    fields = [V] + ([W] if W is not None else [])
    u = _ulist(u)
    geo = geo_obj(imm, u, 2)
    X = to_float(geo.X)
    Xl = [X[i] for i in range(X.shape[0])]
    for fld in fields:
        cert = certify(fld, samples=X, tol=certify_tol)
        if cert.closed_residual > certify_tol:
            raise NotClosedConformal(f"{getattr(fld, 'name', 'field')}: closed residual {cert.closed_residual:.3g}")
    n = imm.n
    inv = invariants_from_matrix(geo.A)
    H = inv.H[1]

    def f_of(field_eval):
        def fv(v):
            gg = geo_obj(imm, v, 1)
            return inner(gg.g, as_obj(field_eval(list(gg.X)), 1), gg.N)
        return fv

    fV = f_of(Vf)
    fV0, dfV, ddfV = jet(fV, u, 2, 0)
    fV0 = fV0[()]
    fV_float = to_float(T.box(fV0))
    if np.any(fV_float >= 0):
        raise TimeOrientationClash("f_V = <V,N> is not negative on the samples")
    Vx = as_obj(Vf(list(geo.X)), 1)
    Vt = tangential_obj(geo, Vx)
    Gf = to_float(geo.G)

    def gnorm(vec):
        vf = to_float(vec)
        return np.sqrt(np.abs(np.einsum("a...,ab...,b...->...", vf, Gf, vf)))

    out = {}
    grad_fV = T.ein("ab,b->a", geo.Ginv, dfV)
    out["grad_fV"] = float(np.max(gnorm(grad_fV + T.ein("ab,b->a", geo.A, Vt))))

    lap_fV = T.trace(T.ein("ab,bc->ac", geo.Ginv, hessian_obj(geo, dfV, ddfV)))
    _, dH = jet(lambda v: mean_curvature_obj(imm, v, 1), u, 1, 0)
    VtH = sum(dH[a] * Vt[a] for a in range(n))
    Ric = to_float(np.einsum("kjkl->jl", riemann_obj(space, Xl)))
    Nf = to_float(geo.N)
    RicNN = np.einsum("jl...,j...,l...->...", Ric, Nf, Nf)
    A2 = T.trace(T.ein("ab,bc->ac", geo.A, geo.A))
    psiV, dpsiV = _field_data(space, Vf, Xl)
    NpsiV = sum(dpsiV[i] * geo.N[i] for i in range(space.dim))
    base = n * VtH + (RicNN + A2) * fV0 + n * H * psiV
    out["laplace_fV"] = float(np.max(np.abs(to_float(T.box(lap_fV - base + n * NpsiV)))))
    out["laplace_fV_plus_variant"] = float(np.max(np.abs(to_float(T.box(lap_fV - base - n * NpsiV)))))

    def divflux(v):
        gg = geo_obj(imm, v, 1)
        vt = tangential_obj(gg, as_obj(Vf(list(gg.X)), 1))
        return T.scale(vt, gg.sqrtG)

    _, dflux = jet(divflux, u, 1, 1)
    divVt = sum(dflux[a, a] for a in range(n)) * (1.0 / geo.sqrtG)
    out["div_Vt"] = float(np.max(np.abs(to_float(T.box(divVt - n * psiV - n * H * fV0)))))
    out["f_V_max"] = float(np.max(fV_float))

    if W is not None:
        Wf = W.eval if hasattr(W, "eval") else W
        Wx = as_obj(Wf(list(geo.X)), 1)
        Wt = tangential_obj(geo, Wx)
        psiW, dpsiW = _field_data(space, Wf, Xl)
        fW0 = inner(geo.g, Wx, geo.N)

        def gfun(v):
            gg = geo_obj(imm, v, 1)
            xx = list(gg.X)
            return inner(gg.g, as_obj(Vf(xx), 1), as_obj(Wf(xx), 1))

        _, dg_, ddg_ = jet(gfun, u, 2, 0)
        grad_g = T.ein("ab,b->a", geo.Ginv, dg_)
        rhs = T.scale(Wt, psiV) + T.scale(Vt, psiW)
        out["grad_g"] = float(np.max(gnorm(grad_g - rhs)))
        lap_g = T.trace(T.ein("ab,bc->ac", geo.Ginv, hessian_obj(geo, dg_, ddg_)))
        WtpsiV = sum(dpsiV[i] * T.ein("ia,a->i", geo.dX, Wt)[i] for i in range(space.dim))
        VtpsiW = sum(dpsiW[i] * T.ein("ia,a->i", geo.dX, Vt)[i] for i in range(space.dim))
        rhs_l = WtpsiV + VtpsiW + n * H * (psiV * fW0 + psiW * fV0) + 2 * n * psiV * psiW
        out["laplace_g"] = float(np.max(np.abs(to_float(T.box(lap_g - rhs_l)))))
    return out


def support_lhs_exact(imm, V, u, W=None) -> dict:
    """Left-hand sides (grad f_V, Lap f_V, div V^T, grad g, Lap g) by forward differentiation."""
    Vf = V.eval if hasattr(V, "eval") else V
    u = _ulist(u)
    geo = geo_obj(imm, u, 2)
    n = imm.n

    def fV(v):
        gg = geo_obj(imm, v, 1)
        return inner(gg.g, as_obj(Vf(list(gg.X)), 1), gg.N)

    _, d1, d2 = jet(fV, u, 2, 0)
    out = {"grad_fV": to_float(T.ein("ab,b->a", geo.Ginv, d1)),
           "lap_fV": to_float(T.box(T.trace(T.ein("ab,bc->ac", geo.Ginv, hessian_obj(geo, d1, d2)))))}

    def divflux(v):
        gg = geo_obj(imm, v, 1)
        return T.scale(tangential_obj(gg, as_obj(Vf(list(gg.X)), 1)), gg.sqrtG)

    _, dflux = jet(divflux, u, 1, 1)
    out["div_Vt"] = to_float(T.box(sum(dflux[a, a] for a in range(n)) * (1.0 / geo.sqrtG)))
    if W is not None:
        Wf = W.eval if hasattr(W, "eval") else W

        def gfun(v):
            gg = geo_obj(imm, v, 1)
            xx = list(gg.X)
            return inner(gg.g, as_obj(Vf(xx), 1), as_obj(Wf(xx), 1))

        _, e1, e2 = jet(gfun, u, 2, 0)
        out["grad_g"] = to_float(T.ein("ab,b->a", geo.Ginv, e1))
        out["lap_g"] = to_float(T.box(T.trace(T.ein("ab,bc->ac", geo.Ginv, hessian_obj(geo, e1, e2)))))
    return out


def support_lhs_fd(imm, V, u, W=None, h: float = 1e-3) -> dict:
    """The same left-hand sides from central differences only.

    Induced metric, normal and support functions use finite-difference
    tangent vectors; gradients, Laplacians and divergences are then taken by
    a second layer of central differences in the parameters.
    """
    Vf = V.eval if hasattr(V, "eval") else V
    u = [np.asarray(v, dtype=float) for v in _ulist(u)]
    n = len(u)
    amb = imm.ambient

    def basic(v):
        X, dX = (to_float(a) for a in T.fd_jet(imm.map, v, 1, 1, h=1e-6))
        Xl = [X[i] for i in range(X.shape[0])]
        g = to_float(g_obj(amb, Xl))
        G = np.einsum("ia...,ij...,jb...->ab...", dX, g, dX)
        N = to_float(_normal(imm, as_obj(X, 1), as_obj(dX, 2), as_obj(g, 2)))
        Vx = to_float(as_obj(Vf(Xl), 1))
        fv = np.einsum("ij...,i...,j...->...", g, Vx, N)
        Gm = np.moveaxis(G.reshape(n, n, -1), -1, 0)
        Ginv = np.moveaxis(np.linalg.inv(Gm), 0, -1).reshape(G.shape)
        vt = np.einsum("ab...,ib...,ij...,j...->a...", Ginv, dX, g, Vx)
        out = {"G": G, "Ginv": Ginv, "fV": fv, "sqrtG": np.sqrt(np.linalg.det(Gm)).reshape(fv.shape),
               "Vt": vt}
        if W is not None:
            Wx = to_float(as_obj(W.eval(Xl) if hasattr(W, "eval") else W(Xl), 1))
            out["g"] = np.einsum("ij...,i...,j...->...", g, Vx, Wx)
        return out

    def shift(a, s):
        v = list(u)
        v[a] = v[a] + s
        return v

    def shift2(a, sa, b, sb):
        v = list(u)
        v[a] = v[a] + sa
        v[b] = v[b] + sb
        return v

    c = basic(u)
    P = {a: (basic(shift(a, h)), basic(shift(a, -h))) for a in range(n)}

    def grad_and_lap(key):
        d1 = np.stack([(P[a][0][key] - P[a][1][key]) / (2 * h) for a in range(n)])
        d2 = np.empty((n, n) + np.shape(c[key]))
        for a in range(n):
            for b in range(n):
                if a == b:
                    d2[a, a] = (P[a][0][key] - 2 * c[key] + P[a][1][key]) / h ** 2
                else:
                    d2[a, b] = (basic(shift2(a, h, b, h))[key] - basic(shift2(a, h, b, -h))[key]
                                - basic(shift2(a, -h, b, h))[key] + basic(shift2(a, -h, b, -h))[key]) / (4 * h * h)
        dG = np.stack([(P[a][0]["G"] - P[a][1]["G"]) / (2 * h) for a in range(n)], axis=2)
        # dG[a, b, d] = d_d G_ab; low[d, a, b] = Gamma_{d a b}
        low = 0.5 * (np.einsum("dba...->dab...", dG) + dG - np.einsum("abd...->dab...", dG))
        gam = np.einsum("cd...,dab...->cab...", c["Ginv"], low)
        hess = d2 - np.einsum("cab...,c...->ab...", gam, d1)
        return (np.einsum("ab...,b...->a...", c["Ginv"], d1),
                np.einsum("ab...,ab...->...", c["Ginv"], hess))

    gf, lf = grad_and_lap("fV")
    out = {"grad_fV": gf, "lap_fV": lf}
    flux = lambda q: q["Vt"] * q["sqrtG"]
    div = sum((flux(P[a][0])[a] - flux(P[a][1])[a]) / (2 * h) for a in range(n)) / c["sqrtG"]
    out["div_Vt"] = div
    if W is not None:
        gg, lg = grad_and_lap("g")
        out["grad_g"] = gg
        out["lap_g"] = lg
    return out
