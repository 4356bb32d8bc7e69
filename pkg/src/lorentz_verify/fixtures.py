"""Named ambient models, fields, immersions and built-in scenario suites.

Scenario documents refer to these by name; ``build_*`` turn a descriptor
dict into library objects.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UnresolvedReference
from .fields import AmbientVectorField, constant_field, position_field, time_scaled_field
from .flow import LeafSubmanifoldImmersion
from .geometry import ChartedSpace
from .hypersurface import SpacelikeImmersion
from .models import (GRWModel, anti_de_sitter_grw, de_sitter_grw,
                     de_sitter_hyperbolic_grw, make_flat, make_hyperquadric,
                     t_warped_flat, warp_function)


@dataclass
class Ambient:
    name: str
    space: ChartedSpace
    grw: Optional[GRWModel] = None
    c: Optional[float] = None


def _grw(builder, c):
    def make(n):
        m = builder(n)
        return Ambient(m.space.name, m.space, m, c)
    return make


def _flat(n):
    return Ambient("minkowski", make_flat(n + 1, 1, "minkowski"), None, 0.0)


def _quadric(kind, c):
    def make(n):
        q = make_hyperquadric(kind, n + 1)
        return Ambient(q.space.name, q.space, None, c)
    return make


MODELS = {
    "anti-de-sitter-grw": (_grw(anti_de_sitter_grw, -1.0), "-(0, pi) x_sin H^n, constant curvature -1"),
    "anti-de-sitter-quadric": (_quadric("antiDeSitter", -1.0), "anti-de Sitter hyperquadric in R^{n+2}_2, graph chart"),
    "de-sitter-grw": (_grw(de_sitter_grw, 1.0), "-R x_cosh S^n, constant curvature 1"),
    "de-sitter-hyperbolic-grw": (_grw(de_sitter_hyperbolic_grw, 1.0), "-(0, inf) x_sinh H^n, constant curvature 1"),
    "de-sitter-quadric": (_quadric("deSitter", 1.0), "de Sitter hyperquadric in L^{n+2}, graph chart"),
    "minkowski": (_flat, "Lorentz space L^{n+1}, last coordinate timelike"),
    "t-warped-flat": (_grw(t_warped_flat, None), "-(0, inf) x_t R^n, Ricci-null canonical field"),
}


def build_ambient(desc: dict) -> Ambient:
    name = desc.get("model")
    if name not in MODELS:
        raise UnresolvedReference(f"unknown model {name!r}")
    return MODELS[name][0](int(desc.get("n", 2)))


# -- fields -------------------------------------------------------------------

def desitter_W(space: ChartedSpace) -> AmbientVectorField:
    """A closed conformal field on -R x_cosh S^2 independent of the canonical one.

    It is the ambient translation along the polar axis of L^4 written in the
    GRW chart; its factor is ``-cosh t cos(theta)``.
    """
    def ev(x):
        return [-np.sinh(x[0]) * np.cos(x[1]), -np.sin(x[1]) / np.cosh(x[0]), 0.0 * x[0]]
    return AmbientVectorField(space, ev, "desitter-W", "closed_conformal")


def build_field(amb: Ambient, desc: dict) -> AmbientVectorField:
    kind = desc.get("kind")
    sp = amb.space
    if kind == "canonical":
        if amb.grw is None:
            raise UnresolvedReference(f"model {amb.name} has no canonical GRW field")
        return amb.grw.canonical_field()
    if kind == "position":
        return position_field(sp)
    if kind == "constant":
        return constant_field(sp, desc["vector"])
    if kind == "time-scaled":
        return time_scaled_field(sp, warp_function(desc["warp"]), f"{desc['warp']}(t)*dt")
    if kind == "desitter-W":
        return desitter_W(sp)
    raise UnresolvedReference(f"unknown field kind {kind!r}")


FIELD_KINDS = {
    "canonical": "phi(t) d_t on a GRW model (closed conformal, factor phi')",
    "constant": "constant coordinate vector (parallel on flat models)",
    "desitter-W": "closed conformal companion field on de-sitter-grw (n=2)",
    "position": "position field x (homothetic on flat models)",
    "time-scaled": "w(t) d_t for a named warp w",
}


# -- immersions ---------------------------------------------------------------

def build_immersion(amb: Ambient, desc: dict, fields: dict):
    kind = desc.get("kind")
    sp = amb.space
    if kind == "slice":
        t0 = float(desc["t0"])
        n = sp.dim - 1
        fib = amb.grw.fiber if amb.grw is not None else None
        if fib is None:
            raise UnresolvedReference("slice needs a GRW model")
        if "domain" in desc:
            dom = tuple(tuple(d) for d in desc["domain"])
            per = tuple(desc.get("periodic", [False] * n))
        elif fib.name.startswith("S"):
            pad = float(desc.get("pad", 0.0))
            dom = tuple([(pad, math.pi - pad)] * (n - 1) + [(0.0, 2 * math.pi)])
            per = tuple([False] * (n - 1) + [True])
        else:
            dom = tuple([(-1.0, 1.0)] * n)
            per = (False,) * n
        return SpacelikeImmersion(sp, lambda u: [t0 + 0 * u[0]] + list(u), dom, per, f"slice-t{t0:g}")
    if kind == "hyperplane":
        h = float(desc.get("height", 0.7))
        return SpacelikeImmersion(sp, lambda u: [u[0], u[1], h + 0 * u[0]], ((-1, 1), (-1, 1)),
                                  (False, False), "hyperplane")
    if kind == "hyperboloid":
        return SpacelikeImmersion(sp, lambda u: [u[0], u[1], np.sqrt(1 + u[0] ** 2 + u[1] ** 2)],
                                  ((-1, 1), (-1, 1)), (False, False), "hyperboloid")
    if kind == "bump":
        a = float(desc.get("amplitude", 0.05))
        return SpacelikeImmersion(
            sp, lambda u: [u[0], u[1], np.sqrt(1 + u[0] ** 2 + u[1] ** 2) + a * np.exp(-2 * (u[0] ** 2 + u[1] ** 2))],
            ((-1, 1), (-1, 1)), (False, False), "bump")
    if kind in ("leaf-circle", "leaf-curve"):
        V = fields[desc["field"]]
        t0 = float(desc["t0"])
        if kind == "leaf-circle":
            th = float(desc.get("theta", math.pi / 2))
            return LeafSubmanifoldImmersion(sp, lambda q: [t0 + 0 * q[0], th + 0 * q[0], q[0]],
                                            ((0.0, 2 * math.pi),), (True,), V, f"circle-{th:.4g}")
        bend = float(desc.get("bend", 0.0))
        off = float(desc.get("offset", 0.0))
        return LeafSubmanifoldImmersion(sp, lambda q: [t0 + 0 * q[0], q[0], off + bend * q[0] ** 2],
                                        ((-1.0, 1.0),), (False,), V, "leaf-curve")
    raise UnresolvedReference(f"unknown immersion kind {kind!r}")


IMMERSION_KINDS = {
    "bump": "hyperboloid with a Gaussian bump (non-umbilical) in minkowski",
    "hyperboloid": "H^2 as the graph x3 = sqrt(1 + x1^2 + x2^2) in minkowski",
    "hyperplane": "spacelike plane x3 = const in minkowski",
    "leaf-circle": "circle theta = const inside the slice {t0} x S^2 (flow base)",
    "leaf-curve": "curve (s, offset + bend s^2) inside a slice {t0} x H^2 or R^2 (flow base)",
    "slice": "{t0} x fiber of a GRW model",
}


# -- suites -------------------------------------------------------------------

_DS = {"model": "de-sitter-grw", "n": 2}
_ADS = {"model": "anti-de-sitter-grw", "n": 2}

SUITES = {
    "ambient-suite": {
        "description": "constant curvature of the de Sitter and anti-de Sitter GRW models",
        "scenario": {
            "schema_version": 1, "id": "ambient-suite", "seed": 7, "ambient": _DS,
            "fields": [], "immersions": [],
            "checks": [
                {"name": "sectional_curvature", "params": {"npts": 100, "c": 1.0}, "tol": 1e-7},
                {"name": "warp_curvature", "params": {"c": 1.0}, "tol": 1e-10},
                {"name": "sectional_curvature", "params": {"npts": 100, "c": -1.0, "model": _ADS}, "tol": 1e-7},
                {"name": "warp_curvature", "params": {"c": -1.0, "model": _ADS}, "tol": 1e-10},
                {"name": "levi_civita", "params": {"npts": 20}, "tol": 1e-10},
            ],
        },
    },
    "conformal-suite": {
        "description": "certificates of position, sinh, sin and projected fields",
        "scenario": {
            "schema_version": 1, "id": "conformal-suite", "seed": 11,
            "ambient": {"model": "minkowski", "n": 2},
            "fields": [{"name": "x", "kind": "position"}, {"name": "e", "kind": "constant", "vector": [0.3, 0.0, 1.0]}],
            "immersions": [{"name": "H2", "kind": "hyperboloid"}],
            "checks": [
                {"name": "conformal_certificate", "params": {"field": "x", "label": "homothetic", "psi": 1.0}, "tol": 1e-10},
                {"name": "conformal_certificate", "params": {
                    "model": {"model": "de-sitter-hyperbolic-grw", "n": 2},
                    "field_desc": {"kind": "time-scaled", "warp": "sinh"}, "label": "closed_conformal",
                    "psi_of_t": "cosh"}, "tol": 1e-8},
                {"name": "conformal_certificate", "params": {
                    "model": _ADS, "field_desc": {"kind": "time-scaled", "warp": "sin"},
                    "label": "closed_conformal", "psi_of_t": "cos"}, "tol": 1e-8},
                {"name": "leaf_projection", "params": {"eta": "e", "field": "x", "immersion": "H2"}, "tol": 1e-7},
            ],
        },
    },
    "desitter-slice-suite": {
        "description": "slice {1} x S^2 of de Sitter: shape operator, support identities, L_r identity, stability",
        "scenario": {
            "schema_version": 1, "id": "desitter-slice-suite", "seed": 3, "ambient": _DS,
            "fields": [{"name": "V", "kind": "canonical"}, {"name": "W", "kind": "desitter-W"}],
            "immersions": [{"name": "slice", "kind": "slice", "t0": 1.0, "pad": 0.4},
                           {"name": "sphere", "kind": "slice", "t0": 1.0}],
            "mesh": [12, 12],
            "checks": [
                {"name": "slice_shape_operator", "params": {"t0": [0.5, 1.0, 1.5]}, "tol": 1e-8},
                {"name": "slice_shape_operator", "params": {"t0": [0.5, 1.0, 1.5], "model": _ADS}, "tol": 1e-8},
                {"name": "slice_shape_operator", "params": {"t0": [0.5, 1.0, 1.5],
                                                            "model": {"model": "de-sitter-hyperbolic-grw", "n": 2}},
                 "tol": 1e-8},
                {"name": "support_identities", "params": {"immersion": "slice", "field": "V", "companion": "W"},
                 "tol": 1e-5},
                {"name": "lr_support_identity", "params": {"immersion": "slice", "field": "V", "r": 1}, "tol": 1e-5},
                {"name": "stability_probe", "params": {"immersion": "sphere", "field": "V", "r": 1,
                                                       "expect": "leaf"}, "tol": 1e-8},
            ],
        },
    },
    "newton-suite": {
        "description": "Newton tensors and trace identities on random symmetric matrices",
        "scenario": {
            "schema_version": 1, "id": "newton-suite", "seed": 5, "ambient": _DS, "fields": [], "immersions": [],
            "checks": [{"name": "newton_suite", "params": {"count": 1000, "dims": [2, 3]}, "tol": 1e-9}],
        },
    },
    "simons-great-circle": {
        "description": "flow of a great circle of {1} x S^2 along the canonical de Sitter field",
        "scenario": {
            "schema_version": 1, "id": "simons-great-circle", "seed": 1, "ambient": _DS,
            "fields": [{"name": "V", "kind": "canonical"}],
            "immersions": [{"name": "gc", "kind": "leaf-circle", "field": "V", "t0": 1.0, "theta": math.pi / 2}],
            "checks": [{"name": "simons_flow", "params": {"base": "gc", "field": "V", "eps": 0.4,
                                                          "expect": "all_small"}, "tol": 1e-6}],
        },
    },
    "simons-small-circle": {
        "description": "flow of a small circle of {1} x S^2: decay law of the mean curvature vector",
        "scenario": {
            "schema_version": 1, "id": "simons-small-circle", "seed": 1, "ambient": _DS,
            "fields": [{"name": "V", "kind": "canonical"}],
            "immersions": [{"name": "sc", "kind": "leaf-circle", "field": "V", "t0": 1.0, "theta": math.pi / 3}],
            "checks": [{"name": "simons_flow", "params": {"base": "sc", "field": "V", "eps": 0.4,
                                                          "expect": "all_large"}, "tol": 1e-5}],
        },
    },
    "variational-slice-suite": {
        "description": "volume, r-area and Jacobi functionals of normal variations of {1} x S^2",
        "scenario": {
            "schema_version": 1, "id": "variational-slice-suite", "seed": 2, "ambient": _DS,
            "fields": [{"name": "V", "kind": "canonical"}],
            "immersions": [{"name": "sphere", "kind": "slice", "t0": 1.0}],
            "mesh": [10, 10],
            "checks": [
                {"name": "first_variation_volume", "params": {"immersion": "sphere", "speed": "one"}, "tol": 1e-6},
                {"name": "first_variation_r_area", "params": {"immersion": "sphere", "speed": "mode", "r": 0}, "tol": 1e-4},
                {"name": "first_variation_r_area", "params": {"immersion": "sphere", "speed": "mode", "r": 1}, "tol": 1e-4},
                {"name": "second_variation", "params": {"immersion": "sphere", "speed": "mode", "r": 1}, "tol": 1e-3},
            ],
        },
    },
}


def builtin_scenario(name: str) -> dict:
    if name not in SUITES:
        raise UnresolvedReference(f"unknown built-in suite {name!r}")
    return copy.deepcopy(SUITES[name]["scenario"])


SPEEDS = {
    "one": lambda u: 1.0 + 0.0 * u[0],
    "mode": lambda u: 1.0 + 0.3 * np.sin(u[0]) * np.cos(u[-1]),
    "cos": lambda u: np.cos(u[0]),
}
