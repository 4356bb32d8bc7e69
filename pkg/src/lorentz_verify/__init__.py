"""Numerical verification toolkit for spacelike submanifolds of Lorentz manifolds
carrying closed conformal vector fields."""

__version__ = "0.1.0"

from .errors import GeometryError  # noqa: E402,F401
