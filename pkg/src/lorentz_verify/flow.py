"""Flowing a submanifold of a leaf along a closed conformal field.

Given ``phi: M^n -> Xi`` with Xi a leaf of the distribution orthogonal to
a timelike closed conformal field V, the map ``Phi(t, q) = Psi_t(phi(q))``
(Psi the flow of V) is an (n+1)-dimensional Lorentzian immersion.  Its mean
curvature vector is computed here directly from the first and second
derivatives of Phi, which are integrated alongside the flow as variational
equations:

    y' = V(y),  J' = DV J,  K' = D^2V[J, J] + DV K,  s' = psi(y),

with ``J = dPhi/dq`` and ``K = d^2Phi/dq^2``.  The initial orthonormal frame
(tangent frame of phi and normal frame in the leaf) is parallel transported
along each trajectory, and ``s(t)`` accumulates the integral of psi, which
the decay law for the mean curvature consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import tensor as T
from .ad import as_obj, jet, to_batch as _bf
from .errors import (ConformalFactorVanishes, HypothesisUnverified,
                     IntegratorDivergence, LeftChart, SingularV)
from .fields import AmbientVectorField
from .geometry import (ChartedSpace, check_domain, christoffel_obj, coords,
                       g_obj, inner, nabla_field_obj, riemann_obj)
from .hypersurface import psi_obj


@dataclass(frozen=True)
class LeafSubmanifoldImmersion:
    """``q -> phi(q)`` into a leaf of V-perp, with an orthonormal normal frame in the leaf.

    For codimension one in the leaf the normal is found automatically as the
    unit vector orthogonal to ``dphi`` and to V; otherwise ``normal_frame``
    must return the ``k`` leaf normals as ambient vectors.
    """

    ambient: ChartedSpace
    map: Callable
    param_domain: tuple
    periodic: tuple
    V: AmbientVectorField
    name: str = "base"
    normal_frame: Optional[Callable] = None

    @property
    def n(self) -> int:
        return len(self.param_domain)

    @property
    def k(self) -> int:
        return self.ambient.dim - self.n - 1


def _metric_float(space, y):
    y = np.asarray(y, dtype=float)
    return _bf(g_obj(space, [y[i] for i in range(y.shape[0])]), y.shape[-1])


def base_data(base: LeafSubmanifoldImmersion, q) -> dict:
    """Point, tangents, leaf normals and the traced second fundamental form at q."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    ql = [q[i] for i in range(q.shape[0])]
    B = q.shape[-1]
    X, dX, ddX = (_bf(a, B) for a in jet(base.map, ql, 2, 1))
    space = base.ambient
    D, n = space.dim, base.n
    Xl = [X[i] for i in range(D)]
    g = _metric_float(space, X)
    Vx = _bf(as_obj(base.V.eval(Xl), 1), B)
    if base.normal_frame is not None:
        eta = np.stack([np.asarray(v, dtype=float) * np.ones(B) for v in base.normal_frame(ql)], axis=1)
    else:
        if base.k != 1:
            raise ValueError("automatic leaf normal needs codimension one in the leaf")
        omega = np.empty((D, B))
        for i in range(D):
            M = np.concatenate([dX, Vx[:, None, :], np.eye(D)[:, i][:, None, None] * np.ones((1, 1, B))], axis=1)
            omega[i] = np.linalg.det(np.moveaxis(M, -1, 0))
        ginv = np.moveaxis(np.linalg.inv(np.moveaxis(g, -1, 0)), 0, -1)
        e = np.einsum("ij...,j...->i...", ginv, omega)
        e = e / np.sqrt(np.einsum("ij...,i...,j...->...", g, e, e))
        eta = e[:, None, :]
    G0 = np.einsum("ia...,ij...,jb...->ab...", dX, g, dX)
    G0inv = np.moveaxis(np.linalg.inv(np.moveaxis(G0, -1, 0)), 0, -1)
    Gam = _bf(christoffel_obj(space, Xl), B)
    acc = ddX + np.einsum("jkl...,ka...,lb...->jab...", Gam, dX, dX)
    hii = np.einsum("ab...,jab...,jk...,kB...->B...", G0inv, acc, g, eta)
    # orthonormal tangent frame e_a = dX c (Cholesky of G0)
    L = np.linalg.cholesky(np.moveaxis(G0, -1, 0))
    C = np.moveaxis(np.linalg.inv(np.swapaxes(L, 1, 2)), 0, -1)
    etan = np.einsum("ja...,ab...->jb...", dX, C)
    orth = float(np.abs(np.einsum("ia...,ij...,j...->a...", dX, g, Vx)).max())
    return {"q": q, "X": X, "dX": dX, "ddX": ddX, "g": g, "V": Vx, "eta": eta, "hii": hii,
            "tangent_frame": etan, "G0": G0, "orth_V": orth}


# -- plain flow ----------------------------------------------------------------

def _box_event(space: ChartedSpace, D: int, margin: float = 0.0):
    lo = np.array([b[0] for b in space.domain], dtype=float)
    hi = np.array([b[1] for b in space.domain], dtype=float)
    span = np.where(np.isfinite(hi - lo), hi - lo, 1.0)

    def ev(t, Y):
        y = Y.reshape(D, -1)
        d = np.minimum(y - lo[:, None] - margin * span[:, None], hi[:, None] - margin * span[:, None] - y)
        return float(d.min())

    ev.terminal = True
    return ev


def flow_conformal_field(V: AmbientVectorField, p, t: float, rtol: float = 1e-12,
                         atol: float = 1e-12) -> np.ndarray:
    """Psi_t(p) for the flow of V (``p`` of shape ``(dim,)`` or ``(dim, npts)``)."""
    space = V.space
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    P = p[:, None] if single else p
    D = space.dim
    check_domain(space, coords(P))
    if t == 0:
        return p.copy()

    def rhs(_, Y):
        y = Y.reshape(D, -1)
        return _bf(as_obj(V.eval([y[i] for i in range(D)]), 1), y.shape[-1]).reshape(-1)

    ev = _box_event(space, D)
    sol = solve_ivp(rhs, (0.0, t), P.reshape(-1), method="DOP853", rtol=rtol, atol=atol, events=ev)
    if sol.status == 1:
        exc = LeftChart(f"trajectory leaves the chart at t={sol.t_events[0][0]:.6g}")
        exc.exit_time = float(sol.t_events[0][0])
        raise exc
    if sol.status != 0 or not np.all(np.isfinite(sol.y)):
        raise IntegratorDivergence(sol.message)
    out = sol.y[:, -1].reshape(D, -1)
    try:
        check_domain(space, coords(out))
    except Exception as err:
        raise LeftChart(str(err)) from err
    return out[:, 0] if single else out


def exit_time(V: AmbientVectorField, P, t_max: float, rtol=1e-10, atol=1e-12) -> float:
    """First |t| <= |t_max| at which a trajectory from P reaches the chart boundary (inf if none)."""
    try:
        flow_conformal_field(V, P, t_max, rtol, atol)
    except LeftChart as e:
        return abs(getattr(e, "exit_time", 0.0))
    return float("inf")


# -- augmented flow --------------------------------------------------------------

class _Layout:
    def __init__(self, D, n, m, B):
        self.D, self.n, self.m, self.B = D, n, m, B
        self.sizes = [D, D * n, D * n * n, 1, D * m]
        self.offs = np.cumsum([0] + self.sizes)

    def unpack(self, Y):
        D, n, m, B = self.D, self.n, self.m, self.B
        Y = Y.reshape(-1, B)
        o = self.offs
        return (Y[o[0]:o[1]], Y[o[1]:o[2]].reshape(D, n, B), Y[o[2]:o[3]].reshape(D, n, n, B),
                Y[o[3]], Y[o[4]:o[5]].reshape(D, m, B))

    def pack(self, y, J, K, s, F):
        B = self.B
        return np.concatenate([y.reshape(-1, B), J.reshape(-1, B), K.reshape(-1, B),
                               s.reshape(1, B), F.reshape(-1, B)]).reshape(-1)


def _field_jets(V: AmbientVectorField, y):
    yl = [y[i] for i in range(y.shape[0])]
    B = y.shape[-1]
    V0, DV, D2V = (_bf(a, B) for a in jet(V.eval, yl, 2, 1))
    Gam = _bf(christoffel_obj(V.space, yl), B)
    psi = _bf(T.box(psi_obj(V.space, V.eval, yl)), B)
    return V0, DV, D2V, Gam, psi


@dataclass
class FlowedImmersion:
    base: LeafSubmanifoldImmersion
    V: AmbientVectorField
    epsilon: float
    rtol: float
    q: np.ndarray
    fwd: object
    bwd: object
    layout: _Layout
    hq: float
    base_info: dict
    requested_epsilon: float
    nq: int

    def state(self, t: float):
        if abs(t) > self.epsilon * (1 + 1e-12):
            raise ValueError(f"|t|={abs(t)} exceeds the flow half-width {self.epsilon}")
        sol = self.fwd if t >= 0 else self.bwd
        return self.layout.unpack(sol.sol(t) if t != 0 else self.y0)

    @property
    def y0(self):
        return self.fwd.y[:, 0]

    def sample_slice(self):
        return slice(0, self.nq)


def build_flowed_immersion(base: LeafSubmanifoldImmersion, V: AmbientVectorField, eps: float,
                           q=None, nq: int = 12, rtol: float = 1e-12, atol: float = 1e-13,
                           hq: float = 1e-4, psi_tol: float = 1e-8) -> FlowedImmersion:
    """Integrate Phi and its derivative data on ``(-eps, eps) x {q samples}``.

    Each sample ``q`` also carries trajectories at ``q +- hq`` along every
    parameter axis so derivatives of the mean curvature vector along M can
    be formed.  ``eps`` is clipped to 90% of the first exit time from the
    chart.
    """
    space = V.space
    D, n, k = space.dim, base.n, base.k
    if q is None:
        axes = []
        for (lo, hi), per in zip(base.param_domain, base.periodic):
            if per:
                axes.append(lo + (hi - lo) * (np.arange(nq) + 0.5) / nq)
            else:
                axes.append(np.linspace(lo, hi, nq + 2)[1:-1])
        grids = np.meshgrid(*axes, indexing="ij")
        q = np.stack([g_.reshape(-1) for g_ in grids])
    q = np.atleast_2d(np.asarray(q, dtype=float))
    nqs = q.shape[1]
    allq = [q]
    for a in range(n):
        for sgn in (1.0, -1.0):
            qq = q.copy()
            qq[a] += sgn * hq
            allq.append(qq)
    Q = np.concatenate(allq, axis=1)
    info = base_data(base, Q)
    X = info["X"]
    g = info["g"]
    VV = np.einsum("ij...,i...,j...->...", g, info["V"], info["V"])
    if np.any(VV > -1e-12):
        raise SingularV("V vanishes or is not timelike on the base")
    psi0 = _bf(T.box(psi_obj(space, V.eval, [X[i] for i in range(D)])), X.shape[-1])
    if np.any(np.abs(psi0) < psi_tol):
        raise ConformalFactorVanishes("conformal factor vanishes on the base submanifold")
    if info["orth_V"] > 1e-8:
        raise ValueError(f"base is not orthogonal to V ({info['orth_V']:.3g})")

    # clip the half-width so every trajectory stays in the chart with a margin
    t_exit = min(exit_time(V, X, eps), exit_time(V, X, -eps))
    eps_eff = min(eps, 0.9 * t_exit) if np.isfinite(t_exit) else eps

    B = Q.shape[1]
    lay = _Layout(D, n, n + k, B)
    F0 = np.concatenate([info["tangent_frame"], info["eta"]], axis=1)
    Y0 = lay.pack(X, info["dX"], info["ddX"], np.zeros(B), F0)

    def rhs(_, Y):
        y, J, K, s, F = lay.unpack(Y)
        V0, DV, D2V, Gam, psi = _field_jets(V, y)
        dJ = np.einsum("ij...,ja...->ia...", DV, J)
        dK = (np.einsum("ijk...,ja...,kb...->iab...", D2V, J, J)
              + np.einsum("ij...,jab...->iab...", DV, K))
        dF = -np.einsum("ijk...,j...,km...->im...", Gam, V0, F)
        return lay.pack(V0, dJ, dK, psi, dF)

    sols = []
    for tend in (eps_eff, -eps_eff):
        sol = solve_ivp(rhs, (0.0, tend), Y0, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if sol.status != 0 or not np.all(np.isfinite(sol.y)):
            raise IntegratorDivergence(sol.message)
        sols.append(sol)
    fi = FlowedImmersion(base, V, eps_eff, rtol, q, sols[0], sols[1], lay, hq, info, eps, nqs)
    # Lorentz signature of the induced metric on the strip
    for t in (-eps_eff, 0.0, eps_eff):
        Gm = _strip_metric(fi, t)
        if np.any(np.linalg.det(np.moveaxis(Gm, -1, 0)) >= 0):
            raise IntegratorDivergence("flowed map lost rank or Lorentz signature")
    return fi


def _strip_metric(fi: FlowedImmersion, t):
    y, J, K, s, F = fi.state(t)
    V0 = _bf(as_obj(fi.V.eval([y[i] for i in range(y.shape[0])]), 1), y.shape[-1])
    Tn = np.concatenate([V0[:, None], J], axis=1)
    g = _metric_float(fi.V.space, y)
    return np.einsum("ia...,ij...,jb...->ab...", Tn, g, Tn)


def _strip_quantities(fi: FlowedImmersion, t):
    """Mean curvature vector and companions at flow time t for all carried trajectories."""
    space = fi.V.space
    n = fi.base.n
    y, J, K, s, F = fi.state(t)
    V0, DV, D2V, Gam, psi = _field_jets(fi.V, y)
    g = _metric_float(space, y)
    B = y.shape[-1]
    Tn = np.concatenate([V0[:, None], J], axis=1)           # (D, n+1, B)
    S2 = np.empty((space.dim, n + 1, n + 1, B))
    S2[:, 0, 0] = np.einsum("ij...,j...->i...", DV, V0)
    DJ = np.einsum("ij...,ja...->ia...", DV, J)
    S2[:, 0, 1:] = DJ
    S2[:, 1:, 0] = DJ
    S2[:, 1:, 1:] = K
    acc = S2 + np.einsum("ijk...,ja...,kb...->iab...", Gam, Tn, Tn)
    Gm = np.einsum("ia...,ij...,jb...->ab...", Tn, g, Tn)
    Gminv = np.moveaxis(np.linalg.inv(np.moveaxis(Gm, -1, 0)), 0, -1)

    def normal_part(v):
        c = np.einsum("ab...,jb...,jk...,k...->a...", Gminv, Tn, g, v)
        return v - np.einsum("ja...,a...->j...", Tn, c)

    tr = np.einsum("ab...,jab...->j...", Gminv, acc)
    Hbar = normal_part(tr) / (n + 1)
    Gq = Gm[1:, 1:]
    Gqinv = np.moveaxis(np.linalg.inv(np.moveaxis(Gq, -1, 0)), 0, -1)
    trq = np.einsum("ab...,jab...->j...", Gqinv, acc[:, 1:, 1:])
    eq_V = np.einsum("ij...,i...,j...->...", g, trq, V0) + n * psi
    tang = np.einsum("ij...,i...,jk...->k...", g, trq, F[:, :n])
    # nabla_nu nu for nu = V/|V|
    yl = [y[i] for i in range(space.dim)]

    def nu(x):
        Vx = as_obj(fi.V.eval(x), 1)
        return list(T.scale(Vx, 1.0 / np.sqrt(-inner(g_obj(space, x), Vx, Vx))))

    nab = _bf(nabla_field_obj(space, nu, yl), B)
    nuv = _bf(as_obj(nu(yl), 1), B)
    nunu = np.einsum("ij...,j...->i...", nab, nuv)
    return {"y": y, "J": J, "s": s, "F": F, "psi": psi, "Hbar": Hbar, "g": g, "Gam": Gam,
            "V0": V0, "eq_V": eq_V, "tang": tang, "nunu_normal": normal_part(nunu),
            "normal_part": normal_part, "Tn": Tn}


def _frame_norm(g, v):
    """Largest component of v in an orthonormal frame of g (batch last)."""
    D = g.shape[0]
    gm = np.moveaxis(g.reshape(D, D, -1), -1, 0)
    w, Q = np.linalg.eigh(gm)
    comp = np.einsum("bji,jb->bi", Q, v.reshape(D, -1)) * np.sqrt(np.abs(w))
    return np.abs(comp).max(axis=-1)


def mean_curvature_vector(fi: FlowedImmersion, t: float, q_index=None) -> np.ndarray:
    """H-bar at flow time t for the sample parameters (columns)."""
    Hb = _strip_quantities(fi, t)["Hbar"][:, :fi.nq]
    return Hb if q_index is None else Hb[:, q_index]


def verify_ambient_hypothesis(V: AmbientVectorField, points, tol: float = 1e-7) -> dict:
    """Constant sectional curvature, or Ricci(V) = 0, at the given points."""
    space = V.space
    points = np.asarray(points, dtype=float)
    x = coords(points)
    B = points.shape[-1]
    R = _bf(riemann_obj(space, x), B)
    g = _metric_float(space, points)
    ric = np.einsum("kjkl...->jl...", R)
    D = space.dim
    scal = np.einsum("jl...,jl...->...", np.moveaxis(np.linalg.inv(np.moveaxis(g, -1, 0)), 0, -1), ric)
    c = scal / (D * (D - 1))
    eye = np.eye(D).reshape((D, D) + (1,) * (g.ndim - 2))
    model = c * (np.einsum("ik...,lj...->ijkl...", eye * np.ones_like(g), g)
                 - np.einsum("il...,kj...->ijkl...", eye * np.ones_like(g), g))
    cc = float(np.abs(R - model).max())
    Vx = _bf(as_obj(V.eval(x), 1), B)
    ricV = float(np.abs(np.einsum("jl...,l...->j...", ric, Vx)).max())
    ok = cc < tol or ricV < tol
    return {"constant_curvature_residual": cc, "ricci_V": ricV, "satisfied": ok,
            "curvature_estimate": float(np.mean(c))}


def decay_law_check(fi: FlowedImmersion, ts=None, tol_hyp: float = 1e-7) -> dict:
    """Compare H-bar along the strip with its predicted exponential decay.

    Prediction: ``H-bar(t) = exp(-s(t)) / (n+1) * sum_beta h^beta N_beta(t)``
    with ``h^beta`` the traced second fundamental form of the base along the
    leaf normal ``eta_beta`` and ``N_beta`` its parallel transport.  Also
    reports the V-component identity of the q-trace of second derivatives,
    the decay of its tangential components, and the normal part of
    ``D_nu nu``.
    """
    if ts is None:
        ts = np.linspace(-fi.epsilon, fi.epsilon, 9)
    n = fi.base.n
    hii = fi.base_info["hii"][:, :fi.nq]
    pts = fi.base_info["X"][:, :fi.nq]
    hyp = verify_ambient_hypothesis(fi.V, pts, tol_hyp)
    if not hyp["satisfied"]:
        raise HypothesisUnverified("ambient is neither constant curvature nor Ricci-flat along V")
    q0 = _strip_quantities(fi, 0.0)
    tang0 = q0["tang"][:, :fi.nq]
    res = eqv = tres = nun = 0.0
    hsup = 0.0
    for t in ts:
        qq = _strip_quantities(fi, float(t))
        sl = slice(0, fi.nq)
        F = qq["F"][:, n:, sl]
        pred = np.exp(-qq["s"][sl]) / (n + 1) * np.einsum("b...,jb...->j...", hii, F)
        diff = qq["Hbar"][:, sl] - pred
        res = max(res, float(_frame_norm(qq["g"][..., sl], diff).max()))
        hsup = max(hsup, float(_frame_norm(qq["g"][..., sl], qq["Hbar"][:, sl]).max()))
        eqv = max(eqv, float(np.abs(qq["eq_V"][sl]).max()))
        tres = max(tres, float(np.abs(qq["tang"][:, sl] - tang0 * np.exp(-qq["s"][sl])).max()))
        nun = max(nun, float(_frame_norm(qq["g"][..., sl], qq["nunu_normal"][:, sl]).max()))
    return {"residual": res, "sup_Hbar": hsup, "eq_V_residual": eqv,
            "tangential_decay_residual": tres, "tangential_at_0": float(np.abs(tang0).max()),
            "nu_nu_normal": nun, "hypothesis": hyp}


def normal_derivative_sup(fi: FlowedImmersion, ts, ht: float = 1e-4) -> float:
    """sup of the normal connection applied to H-bar along d_t and d_q, by central differences."""
    n = fi.base.n
    nq = fi.nq
    out = 0.0
    for t in ts:
        t = float(np.clip(t, -fi.epsilon + ht, fi.epsilon - ht))
        c = _strip_quantities(fi, t)
        p = _strip_quantities(fi, t + ht)["Hbar"]
        m = _strip_quantities(fi, t - ht)["Hbar"]
        H = c["Hbar"]
        sl = slice(0, nq)
        dt = (p - m)[:, sl] / (2 * ht) + np.einsum("ijk...,j...,k...->i...", c["Gam"][..., sl],
                                                    c["V0"][:, sl], H[:, sl])
        cands = [c["normal_part"](np.concatenate([dt, np.zeros_like(H[:, nq:])], axis=1))[:, sl]]
        for a in range(n):
            hp = H[:, nq * (1 + 2 * a):nq * (2 + 2 * a)]
            hm = H[:, nq * (2 + 2 * a):nq * (3 + 2 * a)]
            dq = (hp - hm) / (2 * fi.hq) + np.einsum("ijk...,j...,k...->i...", c["Gam"][..., sl],
                                                       c["J"][:, a, sl], H[:, sl])
            cands.append(c["normal_part"](np.concatenate([dq, np.zeros_like(H[:, nq:])], axis=1))[:, sl])
        for v in cands:
            out = max(out, float(_frame_norm(c["g"][..., sl], v).max()))
    return out


def frame_orthonormality_residual(fi: FlowedImmersion, ts=None) -> float:
    if ts is None:
        ts = np.linspace(-fi.epsilon, fi.epsilon, 5)
    F0 = fi.state(0.0)[4]
    g0 = _metric_float(fi.V.space, fi.state(0.0)[0])
    gram0 = np.einsum("ia...,ij...,jb...->ab...", F0, g0, F0)
    out = 0.0
    for t in ts:
        y, J, K, s, F = fi.state(float(t))
        g = _metric_float(fi.V.space, y)
        gram = np.einsum("ia...,ij...,jb...->ab...", F, g, F)
        out = max(out, float(np.abs(gram - gram0).max()))
    return out


def simons_equivalence_probe(base: LeafSubmanifoldImmersion, V: AmbientVectorField, eps: float,
                             small: float = 1e-6, large: float = 1e-3, nt: int = 9, **kw) -> dict:
    """The three maximality quantities: base trace, sup|H-bar|, sup|normal derivative of H-bar|."""
    fi = build_flowed_immersion(base, V, eps, **kw)
    ts = np.linspace(-fi.epsilon, fi.epsilon, nt)
    dec = decay_law_check(fi, ts)
    base_trace = float(np.abs(fi.base_info["hii"][:, :fi.nq]).max())
    dH = normal_derivative_sup(fi, ts)
    vals = [base_trace, dec["sup_Hbar"], dH]
    if all(v < small for v in vals):
        verdict = "all_small"
    elif all(v > large for v in vals):
        verdict = "all_large"
    else:
        verdict = "inconsistent"
    return {"base_trace": base_trace, "sup_Hbar": dec["sup_Hbar"], "sup_normal_derivative": dH,
            "verdict": verdict, "equivalent": verdict != "inconsistent",
            "epsilon": fi.epsilon, "decay_residual": dec["residual"]}
