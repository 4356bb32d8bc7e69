"""Volume and r-area functionals of normal variations, and r-stability.

The variation family is fixed to normal geodesics: ``X(u, t)`` is the
point at time t of the geodesic leaving ``x(u)`` with velocity
``f(u) N(u)``.  Geodesics are integrated with a fixed-step RK4 scheme on
dual numbers, so derivatives of ``X_t`` in u (and hence the shape operator
of ``X_t``) come out exactly for the discrete scheme.

Derivatives in t are always taken by finite differences of the
functionals; the analytic first and second variations are evaluated
independently and compared against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import tensor as T
from .ad import as_obj, jet, primal, to_batch, to_float
from .errors import (AmbientNotConstantCurvature, ConformalFactorVanishes,
                     NotConstantHr1, NotTimelike, SingularV)
from .geometry import christoffel_obj, g_obj, inner, riemann_obj
from .hypersurface import (SpacelikeImmersion, _field_data, _ulist, geo_obj,
                           lr_divergence_obj, lr_trace_obj, psi_obj,
                           tangential_obj)
from .newton import b_r, invariants_from_matrix
from .quadrature import tensor_mesh

# 5-point central stencils
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFF = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])


def c_r(n: int, r: int, c: float) -> float:
    """Constant in the first variation of the r-area (empty products are 1)."""
    if r % 2 == 0:
        return 0.0
    num = 1.0
    k = n
    while k >= n - r + 1:
        num *= k
        k -= 2
    den = 1.0
    k = r - 1
    while k >= 2:
        den *= k
        k -= 2
    return -num / den * (-c) ** ((r + 1) // 2)


def F_r(S: Sequence, r: int, n: int, c: float):
    """F_0 = 1, F_1 = -S_1, F_r = (-1)^r S_r - c (n-r+1)/(r-1) F_(r-2)."""
    F = [1.0, -S[1] if len(S) > 1 else 0.0]
    for k in range(2, r + 1):
        F.append((-1) ** k * S[k] - (c * (n - k + 1) / (k - 1)) * F[k - 2])
    return F[r]


def ambient_curvature_constant(space, points, tol: float = 1e-7) -> float:
    """Sectional curvature c if the ambient has constant curvature at the points."""
    pts = np.asarray(points, dtype=float)
    x = [pts[i] for i in range(pts.shape[0])]
    R = to_float(riemann_obj(space, x))
    g = to_float(g_obj(space, x))
    D = space.dim
    B = pts.shape[-1]
    R = np.broadcast_to(R.reshape(R.shape[:4] + (-1,)), (D,) * 4 + (B,))
    g = np.broadcast_to(g.reshape((D, D, -1)), (D, D, B))
    ginv = np.moveaxis(np.linalg.inv(np.moveaxis(g, -1, 0)), 0, -1)
    scal = np.einsum("jl...,kjkl...->...", ginv, R)
    c = float(np.mean(scal)) / (D * (D - 1))
    eye = np.eye(D)[..., None]
    model = c * (np.einsum("ik...,lj...->ijkl...", eye * np.ones(B), g)
                 - np.einsum("il...,kj...->ijkl...", eye * np.ones(B), g))
    if float(np.abs(R - model).max()) > tol:
        raise AmbientNotConstantCurvature(f"{space.name}: curvature is not constant near the hypersurface")
    return c


# -- normal-geodesic variation -----------------------------------------------

def _geodesic(space, x0, v0, t: float, h: float):
    """RK4 for the geodesic equation; works on object arrays of duals."""
    x = as_obj(x0, 1)
    v = as_obj(v0, 1)
    if t == 0:
        return x, v
    m = max(2, int(math.ceil(abs(t) / h)))
    dt = t / m

    def acc(xx, vv):
        G = christoffel_obj(space, list(xx))
        return -T.ein("ijk,j,k->i", G, vv, vv)

    for _ in range(m):
        k1x, k1v = v, acc(x, v)
        x2, v2 = x + 0.5 * dt * k1x, v + 0.5 * dt * k1v
        k2x, k2v = v2, acc(x2, v2)
        x3, v3 = x + 0.5 * dt * k2x, v + 0.5 * dt * k2v
        k3x, k3v = v3, acc(x3, v3)
        x4, v4 = x + dt * k3x, v + dt * k3v
        k4x, k4v = v4, acc(x4, v4)
        x = x + (dt / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (dt / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return x, v


@dataclass
class VariationScenario:
    """Normal-geodesic variation of a closed spacelike hypersurface with speed f."""

    base: SpacelikeImmersion
    f: Callable
    eps: float = 0.05
    sizes: tuple = (16, 16)
    h: float = 5e-3
    dt: float = 1e-2
    name: str = "variation"
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.base.n

    def mesh(self, sizes=None):
        return tensor_mesh(self.base.param_domain, self.base.periodic, sizes or self.sizes)

    def _start(self, u):
        geo = geo_obj(self.base, u, 1)
        fu = self.f(u)
        return geo.X, T.scale(geo.N, fu)

    def state(self, u, t: float):
        x0, v0 = self._start(u)
        return _geodesic(self.base.ambient, x0, v0, t, self.h)

    def immersion(self, t: float) -> SpacelikeImmersion:
        if t == 0:
            return self.base
        if abs(t) > self.eps * (1 + 1e-12):
            raise ValueError(f"|t|={abs(t)} exceeds the variation half-width {self.eps}")
        return SpacelikeImmersion(self.base.ambient, lambda u: list(self.state(u, t)[0]),
                                  self.base.param_domain, self.base.periodic,
                                  f"{self.base.name}-t{t:+.4g}")

    def normal_speed(self, t: float) -> Callable:
        """u -> f_t(u) = -<dX/dt, N_t> (differentiable in u)."""
        imm = self.immersion(t)

        def ft(u):
            geo = geo_obj(imm, u, 1)
            _, vel = self.state(u, t)
            return -inner(geo.g, vel, geo.N)

        return ft


def _fl(a, B):
    out = np.asarray(to_float(T.box(a)) if not isinstance(a, float) else a, dtype=float)
    return np.broadcast_to(out, (B,)) if out.ndim == 0 else out


# -- functionals -------------------------------------------------------------

def _orientation(scn: VariationScenario) -> float:
    mesh = scn.mesh()
    u = _ulist(mesh.u[:, :1])
    geo = geo_obj(scn.base, u, 1)
    M = np.concatenate([to_batch(geo.dX, 1), to_batch(geo.N, 1)[:, None]], axis=1)
    return float(np.sign(np.linalg.det(M[..., 0])))


def _volume_rate(scn: VariationScenario, s: float, mesh, sigma: float) -> float:
    """d/ds of the volume balance: integral over M of X*(dMbar)(d_u..., d_s) at time s."""
    u = _ulist(mesh.u)

    def XV(uu):
        x, v = scn.state(uu, s)
        return list(x) + list(v)

    D = scn.base.ambient.dim
    F0, F1 = jet(XV, u, 1, 1)
    B = mesh.u.shape[1]
    F0 = to_batch(F0, B)
    dX = to_batch(F1, B)[:D]
    vel = F0[D:]
    g = to_batch(g_obj(scn.base.ambient, [F0[i] for i in range(D)]), B)
    M = np.concatenate([dX, vel[:, None]], axis=1)
    dens = np.sqrt(np.abs(np.linalg.det(np.moveaxis(g, -1, 0)))) * np.linalg.det(np.moveaxis(M, -1, 0))
    return float(sigma * dens @ mesh.w)


def volume_balance(scn: VariationScenario, t: float, nodes: int = 6, sizes=None) -> float:
    """Volume swept between X_0 and X_t, by Gauss-Legendre in time."""
    if t == 0:
        return 0.0
    key = ("volume", float(t), nodes, sizes)
    if key in scn._cache:
        return scn._cache[key]
    mesh = scn.mesh(sizes)
    sigma = _orientation(scn)
    z, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * t * (z + 1)
    val = float(sum(0.5 * t * wi * _volume_rate(scn, si, mesh, sigma) for si, wi in zip(s, w)))
    scn._cache[key] = val
    return val


def _surface_data(scn: VariationScenario, t: float, mesh):
    key = ("surface", float(t), mesh.shape)
    if key not in scn._cache:
        scn._cache[key] = _surface_data_uncached(scn, t, mesh)
    return scn._cache[key]


def _surface_data_uncached(scn: VariationScenario, t: float, mesh):
    imm = scn.immersion(t)
    u = _ulist(mesh.u)
    geo = geo_obj(imm, u, 2)
    inv = invariants_from_matrix(geo.A)
    B = mesh.u.shape[1]
    ft = scn.normal_speed(t)(u) if t != 0 else scn.f(u)
    return imm, geo, inv, _fl(geo.sqrtG, B), _fl(ft, B)


def int_f(scn: VariationScenario, t: float, sizes=None) -> float:
    mesh = scn.mesh(sizes)
    _, _, _, sq, ft = _surface_data(scn, t, mesh)
    return float((ft * sq) @ mesh.w)


def first_variation_volume(scn: VariationScenario, ts=(0.0,), tol: float = 1e-10) -> dict:
    """Finite-difference derivative of the volume balance against the integral of f_t."""
    d = scn.dt
    res = 0.0
    rows = []
    for t in ts:
        vals = [volume_balance(scn, t + o * d) for o in _OFF]
        fd = float(np.dot(_D1, vals) / d)
        an = int_f(scn, t)
        rows.append({"t": t, "fd": fd, "integral_f": an})
        res = max(res, abs(fd - an))
    return {"residual": res, "rows": rows,
            "volume_preserving": all(abs(r["integral_f"]) < max(tol, 10 * res) for r in rows)}


def r_area(scn: VariationScenario, r: int, t: float, c: Optional[float] = None, sizes=None) -> float:
    n = scn.n
    if r > n - 1:
        raise ValueError(f"r must be at most n-1={n - 1}")
    mesh = scn.mesh(sizes)
    if c is None:
        c = ambient_curvature_constant(scn.base.ambient, scn.base.point(mesh.u[:, ::max(1, mesh.size // 16)]))
    _, geo, inv, sq, _ = _surface_data(scn, t, mesh)
    B = mesh.u.shape[1]
    S = [_fl(s, B) if not isinstance(s, float) else np.full(B, s) for s in inv.S]
    return float((F_r(S, r, n, c) * sq) @ mesh.w)


def _trace_terms(inv, geo, r: int, B: int):
    P = inv.P[r]
    A = geo.A
    trP = _fl(T.trace(P), B)
    trA2P = _fl(T.trace(T.ein("ab,bc,cd->ad", A, A, P)), B)
    return trP, trA2P


def first_variation_r_area(scn: VariationScenario, r: int, c: Optional[float] = None,
                           t_extra: Optional[float] = None, npts_pointwise: int = 6) -> dict:
    """FD of A_r at 0 against its analytic derivative, and the pointwise S_(r+1) evolution."""
    n = scn.n
    mesh = scn.mesh()
    if c is None:
        c = ambient_curvature_constant(scn.base.ambient, scn.base.point(mesh.u[:, ::max(1, mesh.size // 16)]))
    d = scn.dt
    vals = [r_area(scn, r, o * d, c) for o in _OFF]
    fd = float(np.dot(_D1, vals) / d)
    _, geo, inv, sq, f0 = _surface_data(scn, 0.0, mesh)
    B = mesh.u.shape[1]
    S1 = _fl(inv.S[r + 1], B)
    cr = c_r(n, r, c)
    an = float((((-1) ** (r + 1) * (r + 1) * S1 + cr) * f0 * sq) @ mesh.w)
    out = {"A_prime_fd": fd, "A_prime_analytic": an, "residual_1": abs(fd - an), "c_r": cr}
    pw = [pointwise_sr_evolution(scn, r, 0.0, c, npts_pointwise)]
    if t_extra:
        pw.append(pointwise_sr_evolution(scn, r, t_extra, c, npts_pointwise))
    out["residual_2"] = max(p["residual"] for p in pw)
    out["pointwise"] = pw
    return out


def pointwise_sr_evolution(scn: VariationScenario, r: int, t: float, c: float, npts: int = 6) -> dict:
    """d S_(r+1)/dt (finite differences at fixed u) against its expression through L_r."""
    mesh = scn.mesh()
    idx = np.linspace(0, mesh.size - 1, npts).astype(int)
    u = _ulist(mesh.u[:, idx])
    d = scn.dt
    S = []
    for o in _OFF:
        inv = invariants_from_matrix(geo_obj(scn.immersion(t + o * d), u, 2).A)
        S.append(_fl(inv.S[r + 1], npts))
    fd = np.tensordot(_D1, np.array(S), axes=1) / d
    imm = scn.immersion(t)
    ft = scn.normal_speed(t) if t != 0 else scn.f
    geo = geo_obj(imm, u, 2)
    inv = invariants_from_matrix(geo.A)
    Lf = _fl(lr_trace_obj(imm, ft, r, u, geo, inv), npts)
    trP, trA2P = _trace_terms(inv, geo, r, npts)
    f = _fl(ft(u), npts)

    def S_of(v):
        return invariants_from_matrix(geo_obj(imm, v, 2).A).S[r + 1]

    _, dS = jet(S_of, u, 1, 0)
    vel = scn.state(u, t)[1]
    tang = tangential_obj(geo, vel)
    tang_term = _fl(sum(tang[a] * dS[a] for a in range(scn.n)), npts)
    rhs = (-1) ** (r + 1) * (Lf + c * trP * f - trA2P * f) + tang_term
    return {"t": t, "residual": float(np.abs(fd - rhs).max()), "fd": fd, "rhs": rhs,
            "tangential_term": float(np.abs(tang_term).max())}


def _mean_H(scn: VariationScenario, r1: int, mesh=None):
    mesh = mesh or scn.mesh()
    _, geo, inv, sq, _ = _surface_data(scn, 0.0, mesh)
    B = mesh.u.shape[1]
    H = _fl(inv.H[r1], B)
    area = float(sq @ mesh.w)
    return H, float((H * sq) @ mesh.w) / area, area


def jacobi_functional(scn: VariationScenario, r: int, ts=None, c: Optional[float] = None,
                      Hbar_shift: float = 0.0) -> dict:
    """lambda, J_r on a t-grid, and FD-vs-analytic residual of J_r'."""
    n = scn.n
    mesh = scn.mesh()
    if c is None:
        c = ambient_curvature_constant(scn.base.ambient, scn.base.point(mesh.u[:, ::max(1, mesh.size // 16)]))
    if ts is None:
        ts = (0.0,)
    br = b_r(n, r)
    _, Hbar, _ = _mean_H(scn, r + 1, mesh)
    Hbar = Hbar + Hbar_shift
    lam = c_r(n, r, c) + br * Hbar
    d = scn.dt

    def J(t):
        return r_area(scn, r, t, c) - lam * volume_balance(scn, t)

    grid, res, primes = [], 0.0, []
    for t in ts:
        vals = [J(t + o * d) for o in _OFF]
        fd = float(np.dot(_D1, vals) / d)
        _, geo, inv, sq, ft = _surface_data(scn, t, mesh)
        H = _fl(inv.H[r + 1], mesh.u.shape[1])
        an = float(br * ((H - Hbar) * ft * sq) @ mesh.w)
        grid.append({"t": t, "J": vals[2], "J_prime_fd": fd, "J_prime_analytic": an})
        primes.append(an)
        res = max(res, abs(fd - an))
    return {"lambda": lam, "Hbar": Hbar, "b_r": br, "grid": grid, "J_prime": primes,
            "J_r_prime_residual": res}


def second_variation_analytic(imm: SpacelikeImmersion, f: Callable, r: int, c: float, sizes) -> float:
    mesh = tensor_mesh(imm.param_domain, imm.periodic, sizes)
    u = _ulist(mesh.u)
    B = mesh.u.shape[1]
    geo = geo_obj(imm, u, 2)
    inv = invariants_from_matrix(geo.A)
    Lf = _fl(lr_trace_obj(imm, f, r, u, geo, inv), B)
    trP, trA2P = _trace_terms(inv, geo, r, B)
    fv = _fl(f(u), B)
    sq = _fl(geo.sqrtG, B)
    return float((r + 1) * ((Lf + c * trP * fv - trA2P * fv) * fv * sq) @ mesh.w)


def _check_constant_H(scn: VariationScenario, r1: int, tol: float):
    H, Hbar, _ = _mean_H(scn, r1)
    var = float(np.abs(H - Hbar).max())
    if var > tol:
        raise NotConstantHr1(f"H_{r1} varies by {var:.3g} on the base")
    return Hbar


def second_variation(scn: VariationScenario, r: int, c: Optional[float] = None,
                     const_tol: float = 1e-6) -> dict:
    """Analytic second variation of J_r at 0 against a second difference of J_r."""
    mesh = scn.mesh()
    if c is None:
        c = ambient_curvature_constant(scn.base.ambient, scn.base.point(mesh.u[:, ::max(1, mesh.size // 16)]))
    _check_constant_H(scn, r + 1, const_tol)
    an = second_variation_analytic(scn.base, scn.f, r, c, scn.sizes)
    jf = jacobi_functional(scn, r, c=c)
    lam = jf["lambda"]
    d = scn.dt
    vals = [r_area(scn, r, o * d, c) - lam * volume_balance(scn, o * d) for o in _OFF]
    fd = float(np.dot(_D2, vals) / d ** 2)
    # J'' is quadratic in f; near-zero values are compared on the scale of the L2 norm of f
    _, _, _, sq, f0 = _surface_data(scn, 0.0, scn.mesh())
    scale = max(abs(an), float((f0 ** 2 * sq) @ scn.mesh().w))
    rel = abs(fd - an) / max(scale, 1e-300)
    return {"J_pp_analytic": an, "J_pp_fd": fd, "residual": abs(fd - an), "relative": rel,
            "lambda": lam}


# -- the L_r identity for the support function ----------------------------------

def lr_support_identity_check(imm: SpacelikeImmersion, V, r: int, u, c: Optional[float] = None) -> dict:
    """L_r of eta = <V, N> against its expression in curvature and psi."""
    u = _ulist(u)
    n = imm.n
    B = np.broadcast_shapes(*[np.shape(a) for a in u])[0] if np.ndim(u[0]) else 1
    space = imm.ambient
    X = imm.point(u)
    if c is None:
        c = ambient_curvature_constant(space, X.reshape(space.dim, -1))

    def eta(v):
        geo = geo_obj(imm, v, 1)
        return inner(geo.g, as_obj(V.eval(list(geo.X)), 1), geo.N)

    geo = geo_obj(imm, u, 2)
    inv = invariants_from_matrix(geo.A)
    lhs = _fl(lr_trace_obj(imm, eta, r, u, geo, inv), B)
    lhs_div = _fl(lr_divergence_obj(imm, eta, r, u), B)
    trP, trA2P = _trace_terms(inv, geo, r, B)
    e = _fl(eta(u), B)
    psi, dpsi = _field_data(space, V.eval, list(geo.X))
    psi = _fl(psi, B)
    Nf = to_float(geo.N).reshape(space.dim, -1)
    Npsi = sum(np.asarray(primal(dpsi[i]), dtype=float) * Nf[i] for i in range(space.dim))
    Npsi = np.broadcast_to(Npsi, (B,))
    br = b_r(n, r)
    Hr = _fl(inv.H[r], B) if r > 0 else np.ones(B)

    def Hr1(v):
        return invariants_from_matrix(geo_obj(imm, v, 2).A).H[r + 1]

    _, dH = jet(Hr1, u, 1, 0)
    Vt = tangential_obj(geo, as_obj(V.eval(list(geo.X)), 1))
    VgradH = _fl(sum(Vt[a] * dH[a] for a in range(n)), B)
    Hr1v = _fl(inv.H[r + 1], B)
    rhs = trA2P * e - c * trP * e - br * Hr * Npsi + br * Hr1v * psi + br / (r + 1) * VgradH
    return {"residual": float(np.abs(lhs - rhs).max()),
            "divergence_form_residual": float(np.abs(lhs_div - rhs).max()),
            "trace_vs_divergence": float(np.abs(lhs - lhs_div).max()),
            "lhs": lhs, "rhs": rhs}


# -- stability probe ----------------------------------------------------------

def default_test_basis(imm: SpacelikeImmersion) -> list:
    """Tensor products of {1, cos, sin} per parameter axis (3^n functions)."""
    per_axis = []
    for (lo, hi), p in zip(imm.param_domain, imm.periodic):
        w = 2 * math.pi / (hi - lo) if p else math.pi / (hi - lo)
        per_axis.append([
            lambda x, lo=lo: 1.0 + 0.0 * x,
            lambda x, lo=lo, w=w: np.cos(w * (x - lo)),
            lambda x, lo=lo, w=w: np.sin(w * (x - lo)) if p else np.cos(2 * w * (x - lo)),
        ])
    basis = []

    def build(i, chosen):
        if i == len(per_axis):
            basis.append(lambda u, ch=tuple(chosen): _prod([ch[a](u[a]) for a in range(len(ch))]))
            return
        for fn in per_axis[i]:
            build(i + 1, chosen + [fn])

    build(0, [])
    return basis


def _prod(xs):
    out = xs[0]
    for x in xs[1:]:
        out = out * x
    return out


@dataclass
class StabilityReport:
    r: int
    cosh_theta_min: float
    cosh_theta_max: float
    cosh_theta_ok: bool
    hypothesis_fraction: float
    hypothesis_holds: bool
    psi_zero_fraction: float
    J_pp: list
    J_pp_max: float
    strongly_stable_on_basis: bool
    classifier: str
    H: list
    corollary: Optional[dict]
    proof_identity_residual: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def stability_probe(imm: SpacelikeImmersion, V, r: int, test_basis=None, sizes=(16, 16),
                    tol: float = 1e-8, time_of: Optional[Callable] = None,
                    c: Optional[float] = None) -> StabilityReport:
    """Evaluate the strong r-stability hypotheses and the leaf/r-maximal dichotomy on a mesh.

    ``time_of`` maps ambient points to the time coordinate of a GRW chart;
    when given the de Sitter corollary condition is evaluated too.
    """
    n = imm.n
    space = imm.ambient
    mesh = tensor_mesh(imm.param_domain, imm.periodic, sizes)
    u = _ulist(mesh.u)
    B = mesh.u.shape[1]
    geo = geo_obj(imm, u, 2)
    inv = invariants_from_matrix(geo.A)
    Xl = list(geo.X)
    if c is None:
        c = ambient_curvature_constant(space, imm.point(mesh.u[:, ::max(1, B // 16)]))
    Hr1 = _fl(inv.H[r + 1], B)
    if float(np.abs(Hr1 - Hr1.mean()).max()) > 1e-6:
        raise NotConstantHr1(f"H_{r + 1} is not constant on the hypersurface")
    Vx = as_obj(V.eval(Xl), 1)
    VV = _fl(inner(geo.g, Vx, Vx), B)
    if np.any(np.abs(VV) < 1e-12):
        raise SingularV("V vanishes on the hypersurface")
    if np.any(VV > 0):
        raise NotTimelike("V is not timelike on the hypersurface")
    fV = _fl(inner(geo.g, Vx, geo.N), B)
    modV = np.sqrt(-VV)
    cosh = -fV / modV
    psi, dpsi = _field_data(space, V.eval, Xl)
    psi = _fl(psi, B)
    zero_frac = float(np.mean(np.abs(psi) < tol))
    if zero_frac == 1.0:
        raise ConformalFactorVanishes("conformal factor vanishes on the whole hypersurface")
    Vf = to_float(Vx).reshape(space.dim, -1)
    Nf = to_float(geo.N).reshape(space.dim, -1)
    dps = [np.asarray(primal(dpsi[i]), dtype=float) for i in range(space.dim)]
    Vpsi = np.broadcast_to(sum(dps[i] * Vf[i] for i in range(space.dim)), (B,))
    Npsi = np.broadcast_to(sum(dps[i] * Nf[i] for i in range(space.dim)), (B,))
    # flow-parameter reading: d(psi)/dt = V(psi)
    proof_res = float(np.abs(Npsi - Vpsi * cosh / modV).max())
    Hr = _fl(inv.H[r], B) if r > 0 else np.ones(B)
    lhs = Hr / modV * Vpsi
    hyp = lhs >= np.maximum(Hr1 * psi, 0.0) - tol
    corollary = None
    if time_of is not None:
        tt = np.broadcast_to(np.asarray(time_of(imm.point(mesh.u)), dtype=float), (B,))
        cond = Hr >= np.maximum(np.sinh(tt) * Hr1, 0.0) - tol
        corollary = {"H_r_min": float(Hr.min()), "H_r_max": float(Hr.max()),
                     "H_r1_min": float(Hr1.min()), "H_r1_max": float(Hr1.max()),
                     "margin_min": float((Hr - np.maximum(np.sinh(tt) * Hr1, 0.0)).min()),
                     "holds": bool(np.all(cond))}
    basis = test_basis if test_basis is not None else default_test_basis(imm)
    Jpp = [second_variation_analytic(imm, fb, r, c, sizes) for fb in basis]
    Jmax = float(max(Jpp)) if Jpp else float("nan")
    if float(np.abs(Hr1).max()) < tol:
        cls = "r-maximal"
    elif float(np.abs(cosh - 1).max()) < tol:
        cls = "leaf"
    else:
        cls = "neither"
    return StabilityReport(
        r=r, cosh_theta_min=float(cosh.min()), cosh_theta_max=float(cosh.max()),
        cosh_theta_ok=bool(cosh.min() >= 1 - 1e-10), hypothesis_fraction=float(np.mean(hyp)),
        hypothesis_holds=bool(np.all(hyp)), psi_zero_fraction=zero_frac, J_pp=Jpp, J_pp_max=Jmax,
        strongly_stable_on_basis=bool(Jmax <= tol), classifier=cls,
        H=[1.0] + [float(np.mean(_fl(h, B))) for h in inv.H[1:]],
        corollary=corollary, proof_identity_residual=proof_res)
