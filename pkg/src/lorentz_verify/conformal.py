"""Conformal certificates for vector fields and projections onto leaves.

A field V is conformal when ``<D_X V, Y> + <X, D_Y V> = 2 psi <X, Y>`` and
closed conformal when ``D_X V = psi X``; in both cases ``psi = div V / dim``.
All residuals are measured in an orthonormal frame of the ambient metric at
each sample, so they do not depend on how the chart stretches coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import tensor as T
from .ad import as_obj, jet, primal, to_float
from .errors import (NotClosedConformal, NotOrthogonalLeaf, NotTimelike,
                     SampleSetEmpty, SingularV)
from .fields import AmbientVectorField
from .geometry import ChartedSpace, coords, g_obj, inner, nabla_field_obj
from .hypersurface import SpacelikeImmersion, geo_obj, psi_obj, _ulist
from .rng import make_rng

LABELS = ("parallel", "homothetic", "closed_conformal", "killing", "conformal", "not_conformal")


def orthonormal_frames(g: np.ndarray) -> np.ndarray:
    """Columns E with E^T g E = diag(+-1), batch axis last."""
    D = g.shape[0]
    gm = np.moveaxis(g.reshape(D, D, -1), -1, 0)
    w, Q = np.linalg.eigh(gm)
    E = Q / np.sqrt(np.abs(w))[:, None, :]
    return np.moveaxis(E, 0, -1)


def _frame_components(M, E):
    """E^{-1} M E for (1,1) tensors, batch last."""
    D = M.shape[0]
    Mm = np.moveaxis(M.reshape(D, D, -1), -1, 0)
    Em = np.moveaxis(E, -1, 0)
    return np.linalg.solve(Em, Mm @ Em)


@dataclass
class ConformalCertificate:
    samples: np.ndarray
    psi_values: np.ndarray
    conformal_residual: float
    closed_residual: float
    psi_sup: float
    grad_psi_sup: float
    label: str
    tol: float
    psi_hat: Callable = None

    @property
    def is_nonparallel_homothetic(self) -> bool:
        return self.grad_psi_sup < 1e-8 and float(np.min(np.abs(self.psi_values))) > 1e-6

    def as_dict(self) -> dict:
        return {"label": self.label, "conformal_residual": self.conformal_residual,
                "closed_residual": self.closed_residual, "psi_sup": self.psi_sup,
                "grad_psi_sup": self.grad_psi_sup}


def psi_hat(field: AmbientVectorField, p):
    """div V / dim at points ``p`` (shape ``(dim,)`` or ``(dim, npts)``)."""
    return to_float(T.box(psi_obj(field.space, field.eval, coords(p))))


def certify(field: AmbientVectorField, samples=None, npts: int = 64, seed: int = 0,
            tol: float = 1e-8) -> ConformalCertificate:
    """Classify ``field`` by thresholding residuals at sample points."""
    space = field.space
    if samples is None:
        samples = space.sample(make_rng(seed), npts)
    P = np.asarray(samples, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[-1] == 0:
        raise SampleSetEmpty("no sample points")
    x = coords(P)
    nab = to_float(nabla_field_obj(space, field.eval, x))
    g = to_float(g_obj(space, x))
    D = space.dim
    psi_fn = lambda y: psi_obj(space, field.eval, y)
    psi0, dpsi = jet(psi_fn, x, 1, 0)
    psi = to_float(psi0)
    dpsi = to_float(dpsi)
    E = orthonormal_frames(g)
    # conformal: B_ij = <D_j V, d_i>
    B = np.einsum("ik...,kj...->ij...", g, nab)
    Lg = B + np.swapaxes(B, 0, 1) - 2 * psi * g
    Lf = np.einsum("ia...,ij...,jb...->ab...", E, Lg, E)
    conf = float(np.abs(Lf).max())
    eye = np.eye(D).reshape((D, D) + (1,) * (nab.ndim - 2))
    closed_m = _frame_components(nab - psi * eye, E)
    closed = float(np.abs(closed_m).max())
    grad_frame = np.einsum("i...,ia...->a...", dpsi, E)
    gsup = float(np.abs(grad_frame).max())
    psup = float(np.abs(psi).max())
    if conf >= tol:
        label = "not_conformal"
    elif closed < tol:
        if gsup < tol:
            label = "parallel" if psup < tol else "homothetic"
        else:
            label = "closed_conformal"
    elif psup < tol:
        label = "killing"
    else:
        label = "conformal"
    return ConformalCertificate(P, np.asarray(psi).reshape(-1), conf, closed, psup, gsup, label, tol,
                                lambda p: psi_hat(field, p))


def factor_from_directions(field: AmbientVectorField, p, X) -> np.ndarray:
    """<D_X V, X> / <X, X> for given directions (equals psi for closed conformal V)."""
    space = field.space
    x = coords(p)
    nab = to_float(nabla_field_obj(space, field.eval, x))
    g = to_float(g_obj(space, x))
    X = np.asarray(X, dtype=float)
    DX = np.einsum("ij...,j...->i...", nab, X)
    return (np.einsum("ij...,i...,j...->...", g, DX, X)
            / np.einsum("ij...,i...,j...->...", g, X, X))


def gradient_identities_check(field: AmbientVectorField, samples, tol: float = 1e-7) -> dict:
    """``resA = sup|grad<V,V> - 2 psi V|`` and ``resB = sup|grad psi + nu(psi) nu|``.

    Vectors are compared through their components in an orthonormal frame.
    """
    cert = certify(field, samples=samples, tol=tol)
    if cert.closed_residual >= tol:
        raise NotClosedConformal(f"closed residual {cert.closed_residual:.3g}")
    space = field.space
    P = cert.samples
    x = coords(P)
    g = to_float(g_obj(space, x))
    V = to_float(as_obj(field.eval(x), 1))
    VV = np.einsum("ij...,i...,j...->...", g, V, V)
    if np.any(VV >= 0):
        raise NotTimelike("field is not timelike at every sample")
    _, dVV = jet(lambda y: inner(g_obj(space, y), as_obj(field.eval(y), 1), as_obj(field.eval(y), 1)),
                 x, 1, 0)
    psi0, dpsi = jet(lambda y: psi_obj(space, field.eval, y), x, 1, 0)
    psi = to_float(psi0)
    dVV, dpsi = to_float(dVV), to_float(dpsi)
    gm = np.moveaxis(g.reshape(space.dim, space.dim, -1), -1, 0)
    ginv = np.moveaxis(np.linalg.inv(gm), 0, -1).reshape(g.shape)
    gradVV = np.einsum("ij...,j...->i...", ginv, dVV)
    gradpsi = np.einsum("ij...,j...->i...", ginv, dpsi)
    nu = V / np.sqrt(-VV)
    nupsi = np.einsum("i...,i...->...", dpsi, nu)
    E = orthonormal_frames(g)
    Em = np.moveaxis(E, -1, 0)

    def frame_norm(vec):
        vm = np.moveaxis(vec.reshape(space.dim, -1), -1, 0)
        return np.abs(np.linalg.solve(Em, vm[..., None])[..., 0]).max()

    resA = frame_norm(gradVV - 2 * psi * V)
    resB = frame_norm(gradpsi + nupsi * nu)
    return {"resA": float(resA), "resB": float(resB)}


# -- leaves ---------------------------------------------------------------

@dataclass
class LeafProjection:
    U: np.ndarray
    psi_U: np.ndarray
    eta_nu: np.ndarray
    tangency: float
    degenerate: bool


def _unit_obj(space, V, x):
    Vx = as_obj(V(x), 1)
    g = g_obj(space, x)
    return T.scale(Vx, 1.0 / np.sqrt(-inner(g, Vx, Vx)))


def projected_field(eta: AmbientVectorField, V: AmbientVectorField) -> Callable:
    """x -> eta + <eta, nu> nu with nu = V/|V|: the part of eta orthogonal to V."""
    space = eta.space

    def U(x):
        nu = _unit_obj(space, V.eval, x)
        e = as_obj(eta.eval(x), 1)
        return list(e + T.scale(nu, inner(g_obj(space, x), e, nu)))

    return U


def leaf_factor_nu(V: AmbientVectorField, x):
    """Leafwise conformal factor of nu = V/|V|: psi_V / sqrt(-<V,V>)."""
    space = V.space
    Vx = as_obj(V.eval(x), 1)
    nrm = np.sqrt(-inner(g_obj(space, x), Vx, Vx))
    return psi_obj(space, V.eval, x) * (1.0 / nrm)


def project_to_leaf(eta: AmbientVectorField, V: AmbientVectorField, p, nu_factor=None,
                    tol: float = 1e-10) -> LeafProjection:
    """Project a closed conformal ``eta`` onto the leaf of V-perp through ``p``.

    Returns ``U = eta + <eta,nu> nu`` and the factor
    ``psi_U = psi_eta + psi_nu <eta, nu>`` with ``psi_nu`` taken leafwise as
    ``psi_V / |V|`` unless ``nu_factor`` is supplied.
    """
    space = eta.space
    x = coords(p)
    g = to_float(g_obj(space, x))
    Vx = to_float(as_obj(V.eval(x), 1))
    VV = np.einsum("ij...,i...,j...->...", g, Vx, Vx)
    if np.any(VV > -tol):
        raise SingularV("V is not timelike (or vanishes) at the projection point")
    nu = Vx / np.sqrt(-VV)
    e = to_float(as_obj(eta.eval(x), 1))
    en = np.einsum("ij...,i...,j...->...", g, e, nu)
    U = e + en * nu
    psi_eta = to_float(T.box(psi_obj(space, eta.eval, x)))
    if nu_factor is None:
        psi_nu = to_float(T.box(leaf_factor_nu(V, x)))
    else:
        psi_nu = nu_factor
    tang = float(np.abs(np.einsum("ij...,i...,j...->...", g, U, nu)).max())
    degenerate = bool(np.all(np.abs(U) < 1e-12))
    return LeafProjection(U, psi_eta + psi_nu * en, en, tang, degenerate)


def intrinsic_leaf_certificate(leaf: SpacelikeImmersion, U_ambient: Callable, u,
                               psi_expected=None) -> dict:
    """Check ``D_Z U = psi Z`` on a leaf with its own induced connection.

    ``U_ambient`` maps ambient coordinates to an ambient vector assumed
    tangent to the leaf; its leaf components are recovered by solving against
    the induced metric.  Returns the closed residual (orthonormal frame of
    the induced metric), the normal leakage of U and, if ``psi_expected`` is
    given, its deviation from the intrinsic factor.
    """
    ispace = leaf.induced_space()
    n = leaf.n

    def U_leaf(v):
        gg = geo_obj(leaf, v, 1)
        Ux = as_obj(U_ambient(list(gg.X)), 1)
        return list(T.ein("ab,ib,ij,j->a", gg.Ginv, gg.dX, gg.g, Ux))

    ul = _ulist(u)
    nab = to_float(nabla_field_obj(ispace, U_leaf, ul))
    psi = np.einsum("aa...->...", nab) / n
    G = to_float(g_obj(ispace, ul))
    E = orthonormal_frames(G)
    eye = np.eye(n).reshape((n, n) + (1,) * (nab.ndim - 2))
    res = float(np.abs(_frame_components(nab - psi * eye, E)).max())
    gg = geo_obj(leaf, ul, 1)
    Ux = to_float(as_obj(U_ambient(list(gg.X)), 1))
    leak = float(np.abs(np.einsum("ij...,i...,j...->...", to_float(gg.g), Ux, to_float(gg.N))).max())
    out = {"closed_residual": res, "normal_leakage": leak, "psi_intrinsic": psi}
    if psi_expected is not None:
        out["psi_mismatch"] = float(np.abs(psi - psi_expected).max())
    return out


def leaf_umbilicity_check(V: AmbientVectorField, leaf: SpacelikeImmersion, u,
                          orth_tol: float = 1e-8) -> dict:
    """Compare the leaf shape operator ``S(X) = -D_X nu`` (nu = V/|V|) with psi Id.

    ``residual`` is ``sup|S - psi Id|`` taken literally; ``umbilicity`` is
    ``sup|S - (tr S / n) Id|``; ``scaled_residual`` is
    ``sup|S + (psi/|V|) Id|``, the relation that holds for a unit normal
    along V.  Components are taken in an orthonormal frame of the leaf.
    """
    space = V.space
    nleaf = SpacelikeImmersion(leaf.ambient, leaf.map, leaf.param_domain, leaf.periodic,
                               leaf.name, normal_field=V.eval)
    ul = _ulist(u)
    geo = geo_obj(nleaf, ul, 2)
    Vx = to_float(as_obj(V.eval(list(geo.X)), 1))
    g = to_float(geo.g)
    dX = to_float(geo.dX)
    leak = np.einsum("ij...,i...,ja...->a...", g, Vx, dX)
    if np.abs(leak).max() > orth_tol:
        raise NotOrthogonalLeaf(f"leaf tangent not orthogonal to V ({np.abs(leak).max():.3g})")
    S = to_float(geo.A)
    n = leaf.n
    G = to_float(geo.G)
    E = orthonormal_frames(G)
    Sf = _frame_components(S, E)
    X = to_float(geo.X)
    psi = to_float(T.box(psi_obj(space, V.eval, [X[i] for i in range(X.shape[0])])))
    psi = np.asarray(psi).reshape(-1)
    VV = np.einsum("ij...,i...,j...->...", g, Vx, Vx).reshape(-1)
    eye = np.eye(n)[None]
    trS = np.trace(Sf, axis1=1, axis2=2)
    return {
        "residual": float(np.abs(Sf - psi[:, None, None] * eye).max()),
        "umbilicity": float(np.abs(Sf - (trS / n)[:, None, None] * eye).max()),
        "scaled_residual": float(np.abs(Sf + (psi / np.sqrt(-VV))[:, None, None] * eye).max()),
        "factor": (trS / n),
    }
