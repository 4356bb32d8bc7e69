"""Concrete ambient spacetimes: flat spaces, warped products, hyperquadrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .ad import derivatives_1d, jet, to_float
from .errors import (FiberCurvatureUnknown, NonpositiveWarp, OutOfInterval,
                     UnsupportedIndex)
from .fields import AmbientVectorField, time_scaled_field
from .geometry import ChartedSpace

BIG = 1e6


# -- warps ---------------------------------------------------------------

WARPS = {
    "cosh": np.cosh,
    "sinh": np.sinh,
    "sin": np.sin,
    "exp": np.exp,
    "identity": lambda t: t,
    "one": lambda t: 1.0 + 0.0 * t,
}


def warp_function(warp):
    if callable(warp):
        return warp
    try:
        return WARPS[warp]
    except KeyError:
        raise KeyError(f"unknown warp {warp!r}; known: {sorted(WARPS)}") from None


# -- fibers --------------------------------------------------------------

def _zero(x):
    return 0.0 * x[0]


def sphere_fiber(n: int = 2) -> ChartedSpace:
    """Round unit sphere in hyperspherical angles (theta_1..theta_{n-1}, phi)."""
    def metric(x):
        g = [[_zero(x) for _ in range(n)] for _ in range(n)]
        s = 1.0
        for i in range(n):
            g[i][i] = s + _zero(x)
            if i < n - 1:
                s = s * np.sin(x[i]) ** 2
        return g

    dom = tuple([(0.0, math.pi)] * (n - 1) + [(-4 * math.pi, 4 * math.pi)])
    box = tuple([(0.35, math.pi - 0.35)] * (n - 1) + [(0.0, 2 * math.pi)])
    return ChartedSpace(f"S{n}", n, (1,) * n, metric, dom, sample_box=box,
                        curvature_constant=1.0, meta={"kind": "sphere"})


def hyperbolic_fiber(n: int = 2) -> ChartedSpace:
    """Hyperbolic space as the graph of the upper hyperboloid over R^n."""
    def metric(x):
        r2 = sum(v * v for v in x)
        w = 1.0 / (1.0 + r2)
        return [[(1.0 if i == j else 0.0) - x[i] * x[j] * w for j in range(n)] for i in range(n)]

    return ChartedSpace(f"H{n}", n, (1,) * n, metric, tuple([(-BIG, BIG)] * n),
                        sample_box=tuple([(-1.2, 1.2)] * n), curvature_constant=-1.0,
                        meta={"kind": "hyperbolic"})


def flat_fiber(n: int = 2) -> ChartedSpace:
    def metric(x):
        return [[(1.0 if i == j else 0.0) + _zero(x) for j in range(n)] for i in range(n)]

    return ChartedSpace(f"R{n}", n, (1,) * n, metric, tuple([(-BIG, BIG)] * n),
                        sample_box=tuple([(-1.5, 1.5)] * n), curvature_constant=0.0,
                        meta={"kind": "flat"})


FIBERS = {"sphere": sphere_fiber, "hyperbolic": hyperbolic_fiber, "flat": flat_fiber}


# -- flat ambient ----------------------------------------------------------

def make_flat(dim: int, index: int = 1, name: Optional[str] = None) -> ChartedSpace:
    """R^dim with the last ``index`` coordinates timelike."""
    if index not in (1, 2) or index >= dim:
        raise UnsupportedIndex(f"index must be 1 or 2 (got {index})")
    sig = tuple([1] * (dim - index) + [-1] * index)

    def metric(x):
        return [[(float(sig[i]) if i == j else 0.0) + _zero(x) for j in range(dim)]
                for i in range(dim)]

    def anchor(x):
        return [0.0] * (dim - 1) + [1.0]

    return ChartedSpace(name or f"flat-{dim}-{index}", dim, sig, metric,
                        tuple([(-BIG, BIG)] * dim),
                        sample_box=tuple([(-2.0, 2.0)] * dim),
                        time_anchor=anchor, curvature_constant=0.0,
                        meta={"kind": "flat", "index": index})


# -- warped products -------------------------------------------------------

@dataclass(frozen=True)
class GRWModel:
    interval: tuple
    warp: Callable
    warp_name: str
    fiber: ChartedSpace
    space: ChartedSpace
    sample_interval: tuple

    @property
    def n(self) -> int:
        return self.fiber.dim

    def canonical_field(self) -> AmbientVectorField:
        """phi(t) d_t, closed conformal with factor phi'(t)."""
        phi = self.warp

        def dphi(t):
            return derivatives_1d(phi, t, 1)[1]

        f = time_scaled_field(self.space, phi, f"{self.warp_name}(t)*dt", dpsi=dphi)
        return AmbientVectorField(self.space, f.eval, f.name, "closed_conformal", f.psi)


def make_grw(interval, warp, fiber: ChartedSpace, name: Optional[str] = None,
             sample_interval=None, warp_name: Optional[str] = None) -> GRWModel:
    """Warped product -I x_phi F with metric -dt^2 + phi(t)^2 g_F."""
    phi = warp_function(warp)
    wname = warp_name or (warp if isinstance(warp, str) else getattr(warp, "__name__", "phi"))
    a, b = float(interval[0]), float(interval[1])
    if sample_interval is None:
        lo = a if math.isfinite(a) else -2.0
        hi = b if math.isfinite(b) else 3.0
        pad = 0.05 * (hi - lo)
        sample_interval = (lo + pad, hi - pad)
    grid = np.linspace(sample_interval[0], sample_interval[1], 257)
    if np.any(np.asarray(phi(grid)) <= 0):
        raise NonpositiveWarp(f"warp {wname} is not positive on {interval}")
    n = fiber.dim
    D = n + 1

    def metric(x):
        t, y = x[0], list(x[1:])
        p2 = phi(t) ** 2
        gF = fiber.metric(y)
        z = _zero(x)
        g = [[z for _ in range(D)] for _ in range(D)]
        g[0][0] = -1.0 + z
        for i in range(n):
            for j in range(n):
                g[i + 1][j + 1] = p2 * gF[i][j]
        return g

    def anchor(x):
        return [1.0] + [0.0] * n

    tlo = max(a, -BIG)
    thi = min(b, BIG)
    fbox = fiber.box()
    space = ChartedSpace(
        name or f"grw-{wname}-{fiber.name}", D, tuple([-1] + [1] * n), metric,
        ((tlo, thi),) + tuple(fiber.domain),
        sample_box=(tuple(sample_interval),) + tuple(fbox),
        time_anchor=anchor,
        meta={"kind": "grw", "warp": wname, "fiber": fiber.name})
    return GRWModel((a, b), phi, wname, fiber, space, tuple(sample_interval))


def grw_curvature_residual(model: GRWModel, c_target: float, npts: int = 201):
    """Residuals of the two constant-curvature conditions on a warped product.

    ``res1 = sup |phi''/phi - c|`` and ``res2 = sup |(phi'^2 + k)/phi^2 - c|``
    over a grid of the sampling interval, k being the fiber curvature.
    """
    k = model.fiber.curvature_constant
    if k is None:
        raise FiberCurvatureUnknown(f"fiber {model.fiber.name} has no declared curvature")
    t = np.linspace(model.sample_interval[0], model.sample_interval[1], npts)
    f0, f1, f2 = (np.asarray(v, dtype=float) for v in derivatives_1d(model.warp, t, 2))
    res1 = float(np.max(np.abs(f2 / f0 - c_target)))
    res2 = float(np.max(np.abs((f1 ** 2 + k) / f0 ** 2 - c_target)))
    return {"res1": res1, "res2": res2}


def slice_data(model: GRWModel, t0: float):
    a, b = model.interval
    if not (a < t0 < b):
        raise OutOfInterval(f"t0={t0} outside {model.interval}")
    f0, f1 = (float(v) for v in derivatives_1d(model.warp, float(t0), 1))
    return {"umbilicity_factor": -f1 / f0, "V_at_slice": f0, "psi_at_slice": f1}


# -- hyperquadrics ---------------------------------------------------------

@dataclass(frozen=True)
class HyperquadricModel:
    ambient_flat: ChartedSpace
    level: float
    space: ChartedSpace
    embed: Callable

    def quadric_residual(self, u) -> float:
        u = np.asarray(u, dtype=float)
        X = np.asarray([np.asarray(v, dtype=float) for v in self.embed([u[i] for i in range(u.shape[0])])])
        sig = np.array(self.ambient_flat.signature, dtype=float)
        q = np.einsum("i,i...->...", sig, X * X)
        return float(np.max(np.abs(q - self.level)))


def make_hyperquadric(kind: str, n: int = 2) -> HyperquadricModel:
    """Graph chart of de Sitter space in L^{n+1} or anti-de Sitter space in R^{n+1}_2.

    de Sitter: coordinates u = (x_2, ..., x_{n+1}) with
    x_1 = sqrt(1 + x_{n+1}^2 - x_2^2 - ... - x_n^2).
    anti-de Sitter: coordinates u = (x_1, ..., x_n) with
    x_{n+1} = sqrt(1 + x_1^2 + ... + x_{n-1}^2 - x_n^2).
    In both charts the last coordinate is the future direction.
    """
    if n < 2:
        raise ValueError("hyperquadric dimension must be at least 2")
    if kind in ("deSitter", "de-sitter", "desitter"):
        flat = make_flat(n + 1, 1, f"L{n + 1}")
        level = 1.0

        def embed(u):
            r = 1.0 + u[-1] ** 2 - sum(v * v for v in u[:-1])
            return [np.sqrt(r)] + list(u)

        def inside(u):
            return sum(np.asarray(v) ** 2 for v in u[:-1]) < 0.8

        box = tuple([(-0.6, 0.6)] * (n - 1) + [(-1.0, 1.0)])
    elif kind in ("antiDeSitter", "anti-de-sitter", "antidesitter"):
        flat = make_flat(n + 1, 2, f"R{n + 1}_2")
        level = -1.0

        def embed(u):
            r = 1.0 + sum(v * v for v in u[:-1]) - u[-1] ** 2
            return list(u) + [np.sqrt(r)]

        def inside(u):
            return 1.0 + sum(np.asarray(v) ** 2 for v in u[:-1]) - np.asarray(u[-1]) ** 2 > 0.05

        box = tuple([(-1.0, 1.0)] * (n - 1) + [(-0.6, 0.6)])
    else:
        raise ValueError(f"unknown hyperquadric kind {kind!r}")
    sig = flat.signature

    def metric(u):
        X, dX = jet(embed, u, 1, 1)
        return [[sum(sig[k] * dX[k, a] * dX[k, b] for k in range(n + 1)) for b in range(n)]
                for a in range(n)]

    def anchor(u):
        return [0.0] * (n - 1) + [1.0]

    space = ChartedSpace(f"{kind}-hyperquadric-{n}", n, tuple([1] * (n - 1) + [-1]), metric,
                         tuple([(-BIG, BIG)] * n), sample_box=box, inside=inside,
                         time_anchor=anchor, meta={"kind": "hyperquadric", "level": level})
    return HyperquadricModel(flat, level, space, embed)


# -- built-ins -------------------------------------------------------------

def de_sitter_grw(n: int = 2) -> GRWModel:
    return make_grw((-math.inf, math.inf), "cosh", sphere_fiber(n), name="de-sitter-grw",
                    sample_interval=(-1.5, 1.5))


def de_sitter_hyperbolic_grw(n: int = 2) -> GRWModel:
    """de Sitter space sliced by hyperbolic spaces: -(0, inf) x_sinh H^n."""
    return make_grw((0.0, math.inf), "sinh", hyperbolic_fiber(n), name="de-sitter-hyperbolic-grw",
                    sample_interval=(0.3, 2.0))


def anti_de_sitter_grw(n: int = 2) -> GRWModel:
    return make_grw((0.0, math.pi), "sin", hyperbolic_fiber(n), name="anti-de-sitter-grw",
                    sample_interval=(0.2, math.pi - 0.2))


def t_warped_flat(n: int = 2) -> GRWModel:
    """-(0, inf) x_t R^n, a flat-fiber model whose canonical field is Ricci-null."""
    return make_grw((0.0, math.inf), "identity", flat_fiber(n), name="t-warped-flat",
                    sample_interval=(0.5, 3.0))
