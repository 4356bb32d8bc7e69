"""Charted semi-Riemannian manifolds: metric, Levi-Civita connection, curvature.

Conventions
-----------
* ``christoffel[k, i, j]`` is the connection coefficient with upper index k.
* The curvature operator is ``R(X,Y)Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z`` and
  ``riemann[i, j, k, l]`` is the i-th component of ``R(d_k, d_l) d_j``.
  With this choice the round sphere has positive sectional curvature
  ``<R(X,Y)Y, X> / (<X,X><Y,Y> - <X,Y>^2)``.
* ``ricci[j, l] = riemann[k, j, k, l]``.

Points are arrays of shape ``(dim,)`` or ``(dim, npts)``; with a batch the
results carry the batch axis last.  Internally everything is written against
a list of coordinate scalars so the same code runs on floats, batches and
nested duals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import tensor as T
from .ad import as_obj, primal, to_float
from .errors import (BackendOrderTooLow, DegeneratePlane, OutOfDomain,
                     SignatureMismatch)

MAX_ORDER = {"exact": 3, "fd": 2}


@dataclass(frozen=True)
class ChartedSpace:
    """A manifold given by one coordinate chart.

    ``metric`` maps a list of ``dim`` coordinate scalars to a nested
    ``dim x dim`` list (or array).  ``domain`` is a box of ``(lo, hi)``
    pairs; ``inside`` can refine it with an extra predicate on float
    coordinates.  ``sample_box`` is where random points are drawn from
    (defaults to ``domain``).  ``time_anchor`` returns a future-pointing
    timelike vector used to fix time orientation.
    """

    name: str
    dim: int
    signature: tuple
    metric: Callable
    domain: tuple
    backend: str = "exact"
    sample_box: Optional[tuple] = None
    inside: Optional[Callable] = None
    time_anchor: Optional[Callable] = None
    curvature_constant: Optional[float] = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def max_order(self) -> int:
        return MAX_ORDER[self.backend]

    @property
    def index(self) -> int:
        return sum(1 for s in self.signature if s < 0)

    def with_backend(self, backend: str) -> "ChartedSpace":
        if backend not in MAX_ORDER:
            raise ValueError(f"unknown backend {backend!r}")
        return _replace(self, backend=backend)

    def jet(self, f, x, order, ndim=0):
        if order > self.max_order:
            raise BackendOrderTooLow(f"{self.backend} backend supports order <= {self.max_order}")
        if self.backend == "fd":
            return T.fd_jet(f, x, order, ndim)
        return T.exact_jet(f, x, order, ndim)

    def box(self):
        return self.sample_box if self.sample_box is not None else self.domain

    def sample(self, rng, npts: int) -> np.ndarray:
        """Uniform points in the sampling box that also satisfy ``inside``."""
        lo = np.array([b[0] for b in self.box()], dtype=float)
        hi = np.array([b[1] for b in self.box()], dtype=float)
        out = np.empty((self.dim, 0))
        while out.shape[1] < npts:
            pts = lo[:, None] + (hi - lo)[:, None] * rng.random((self.dim, npts))
            if self.inside is not None:
                pts = pts[:, np.asarray(self.inside(list(pts)), dtype=bool)]
            out = np.concatenate([out, pts], axis=1)
        return out[:, :npts]


def _replace(obj, **kw):
    import dataclasses
    return dataclasses.replace(obj, **kw)


# -- internal, differentiable -------------------------------------------

def coords(p) -> list:
    p = np.asarray(p, dtype=float)
    return [p[i] for i in range(p.shape[0])]


def check_domain(space: ChartedSpace, x) -> None:
    vals = [np.asarray(primal(v), dtype=float) for v in x]
    if len(vals) != space.dim:
        raise OutOfDomain(f"{space.name}: expected {space.dim} coordinates, got {len(vals)}")
    for v, (lo, hi) in zip(vals, space.domain):
        if np.any(~np.isfinite(v)) or np.any(v <= lo) or np.any(v >= hi):
            raise OutOfDomain(f"{space.name}: point outside chart box")
    if space.inside is not None and not np.all(space.inside(vals)):
        raise OutOfDomain(f"{space.name}: point outside chart region")


def g_obj(space, x):
    return as_obj(space.metric(list(x)), 2)


def metric_jet(space, x, order):
    return space.jet(lambda y: space.metric(y), x, order, 2)


def christoffel_from(g, dg):
    """Connection coefficients from the metric and ``dg[a, b, c] = d_c g_ab``."""
    ginv = T.inv(g)
    D = g.shape[0]
    low = np.empty((D, D, D), dtype=object)  # low[l, i, j] = Gamma_{l i j}
    for l in range(D):
        for i in range(D):
            for j in range(i, D):
                v = 0.5 * (dg[l, j, i] + dg[l, i, j] - dg[i, j, l])
                low[l, i, j] = v
                low[l, j, i] = v
    return T.ein("kl,lij->kij", ginv, low)


def christoffel_obj(space, x):
    g, dg = metric_jet(space, x, 1)
    return christoffel_from(g, dg)


def riemann_obj(space, x):
    G0, dG = space.jet(lambda y: christoffel_obj(space, y), x, 1, 3)
    # dG[i, a, b, c] = d_c Gamma^i_ab
    t1 = np.einsum("iljk->ijkl", dG)        # d_k Gamma^i_lj
    t2 = np.einsum("ikjl->ijkl", dG)
    t3 = T.ein("ikm,mlj->ijkl", G0, G0)
    t4 = T.ein("ilm,mkj->ijkl", G0, G0)
    return t1 - t2 + t3 - t4


def nabla_field_obj(space, V, x):
    """``out[i, j]`` = i-th component of the covariant derivative of V along d_j."""
    V0, dV = space.jet(lambda y: V(y), x, 1, 1)
    Gam = christoffel_obj(space, x)
    return dV + T.ein("ijk,k->ij", Gam, V0)


def inner(g, X, Y):
    n = len(X)
    return sum(g[i, j] * X[i] * Y[j] for i in range(n) for j in range(n))


# -- public ----------------------------------------------------------------

def metric_at(space: ChartedSpace, p) -> np.ndarray:
    x = coords(p)
    check_domain(space, x)
    g = to_float(g_obj(space, x))
    asym = np.max(np.abs(g - np.swapaxes(g, 0, 1)))
    scale = max(1.0, float(np.max(np.abs(g))))
    if asym > 1e-12 * scale:
        raise SignatureMismatch(f"{space.name}: metric not symmetric ({asym:.3g})")
    gm = np.moveaxis(g.reshape(space.dim, space.dim, -1), -1, 0)
    eig = np.linalg.eigvalsh(gm)
    want = sorted(space.signature)
    if np.any(np.sign(eig) != np.array(want)[None, :]):
        raise SignatureMismatch(f"{space.name}: eigenvalue signs disagree with {space.signature}")
    return g


def christoffel_at(space: ChartedSpace, p) -> np.ndarray:
    x = coords(p)
    check_domain(space, x)
    return to_float(christoffel_obj(space, x))


def metricity_residual(space, p) -> float:
    """sup |d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il|."""
    x = coords(p)
    g, dg = (to_float(a) for a in metric_jet(space, x, 1))
    Gam = to_float(christoffel_obj(space, x))
    nab = (np.einsum("ijk...->kij...", dg)
           - np.einsum("lki...,lj...->kij...", Gam, g)
           - np.einsum("lkj...,il...->kij...", Gam, g))
    return float(np.max(np.abs(nab)))


def torsion_residual(space, p) -> float:
    Gam = christoffel_at(space, p)
    return float(np.max(np.abs(Gam - np.swapaxes(Gam, 1, 2))))


@dataclass
class Curvature:
    riemann: np.ndarray
    ricci: np.ndarray
    metric: np.ndarray
    plane_tol: float = 1e-10

    @property
    def riemann_lower(self):
        return np.einsum("im...,mjkl...->ijkl...", self.metric, self.riemann)

    def sectional(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        g = self.metric
        gxx = np.einsum("ij...,i...,j...->...", g, X, X)
        gyy = np.einsum("ij...,i...,j...->...", g, Y, Y)
        gxy = np.einsum("ij...,i...,j...->...", g, X, Y)
        disc = gxx * gyy - gxy ** 2
        if np.any(np.abs(disc) < self.plane_tol):
            raise DegeneratePlane("restricted metric is (nearly) degenerate on this plane")
        num = np.einsum("ijkl...,i...,j...,k...,l...->...", self.riemann_lower, X, Y, X, Y)
        return num / disc

    def symmetry_residual(self) -> float:
        R = self.riemann_lower
        r1 = np.abs(R + np.swapaxes(R, 0, 1)).max()
        r2 = np.abs(R + np.swapaxes(R, 2, 3)).max()
        r3 = np.abs(R - np.einsum("ijkl...->klij...", R)).max()
        bianchi = (np.einsum("ijkl...->ijkl...", self.riemann)
                   + np.einsum("iklj...->ijkl...", self.riemann)
                   + np.einsum("iljk...->ijkl...", self.riemann))
        return float(max(r1, r2, r3, np.abs(bianchi).max()))

    def constant_curvature_residual(self, c: float) -> float:
        """sup |R(X,Y)Z - c(<Y,Z>X - <X,Z>Y)| over coordinate vectors."""
        g = self.metric
        D = g.shape[0]
        eye = np.eye(D).reshape((D, D) + (1,) * (g.ndim - 2))
        # model[i, j, k, l] = i-th comp of c(<d_l, d_j> d_k - <d_k, d_j> d_l)
        model = c * (np.einsum("ik...,lj...->ijkl...", eye * np.ones_like(g), g)
                     - np.einsum("il...,kj...->ijkl...", eye * np.ones_like(g), g))
        return float(np.abs(self.riemann - model).max())


def curvature_at(space: ChartedSpace, p, plane_tol: float = 1e-10) -> Curvature:
    if space.max_order < 2:
        raise BackendOrderTooLow("curvature needs second derivatives")
    x = coords(p)
    check_domain(space, x)
    R = to_float(riemann_obj(space, x))
    ric = np.einsum("kjkl...->jl...", R)
    return Curvature(R, ric, to_float(g_obj(space, x)), plane_tol)


def covariant_derivative(space: ChartedSpace, field, p, direction) -> np.ndarray:
    """Covariant derivative of a vector field along ``direction`` at ``p``."""
    V = field.eval if hasattr(field, "eval") else field
    x = coords(p)
    check_domain(space, x)
    nab = to_float(nabla_field_obj(space, V, x))
    X = np.asarray(direction, dtype=float)
    return np.einsum("ij...,j...->i...", nab, X)


def divergence_at(space: ChartedSpace, field, p):
    V = field.eval if hasattr(field, "eval") else field
    x = coords(p)
    check_domain(space, x)
    nab = to_float(nabla_field_obj(space, V, x))
    return np.einsum("ii...->...", nab)
