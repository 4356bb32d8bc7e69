"""Ambient vector fields given by coordinate expressions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import ChartedSpace


@dataclass(frozen=True)
class AmbientVectorField:
    """A vector field on a charted space.

    ``eval`` takes the list of coordinate scalars and returns the list of
    components.  ``psi`` optionally carries a closed-form conformal factor;
    it is only used for reporting and cross-checks, never by the
    certificate itself.
    """

    space: ChartedSpace
    eval: Callable
    name: str = "field"
    declared_class: Optional[str] = None
    psi: Optional[Callable] = None

    def __call__(self, x):
        return self.eval(x)

    def scaled(self, lam: float) -> "AmbientVectorField":
        f = self.eval
        psi = self.psi
        return AmbientVectorField(
            self.space, lambda x: [lam * v for v in f(x)], f"{lam:g}*{self.name}",
            None, None if psi is None else (lambda x: lam * psi(x)))

    def at(self, p) -> np.ndarray:
        from .ad import to_float, as_obj
        p = np.asarray(p, dtype=float)
        return to_float(as_obj(self.eval([p[i] for i in range(p.shape[0])]), 1))


def _zero_like(x):
    return 0.0 * x[0]


def constant_field(space: ChartedSpace, vec, name="constant") -> AmbientVectorField:
    vec = [float(v) for v in vec]
    return AmbientVectorField(
        space, lambda x: [v + _zero_like(x) for v in vec], name, "parallel",
        lambda x: _zero_like(x))


def position_field(space: ChartedSpace, name="position") -> AmbientVectorField:
    """x -> x on a flat space in Cartesian coordinates (homothetic, factor 1)."""
    return AmbientVectorField(space, lambda x: list(x), name, "homothetic",
                              lambda x: 1.0 + _zero_like(x))


def time_scaled_field(space: ChartedSpace, fn, name="time-scaled", dpsi=None) -> AmbientVectorField:
    """fn(t) d_t in coordinates whose first entry is the time t."""
    def ev(x):
        return [fn(x[0])] + [_zero_like(x) for _ in x[1:]]
    return AmbientVectorField(space, ev, name, None,
                              None if dpsi is None else (lambda x: dpsi(x[0])))
