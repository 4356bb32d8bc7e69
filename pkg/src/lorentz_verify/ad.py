"""Forward-mode automatic differentiation with nested, tagged dual numbers.

A :class:`Dual` is ``a + b*eps`` with ``eps**2 == 0``.  Both parts may be
floats, numpy arrays (a batch of sample points evaluated in one pass) or
other duals, which is how higher derivatives are obtained: differentiating a
function that itself differentiates something nests one dual inside another.

Each differentiation pass draws a fresh tag from a global counter.  Inner
passes therefore always carry larger tags than the passes enclosing them, and
an operation between duals of different tags treats the lower-tagged operand
as a constant.  This is the usual cure for perturbation confusion.

Functions to be differentiated take a sequence of coordinate components and
must be written with ordinary arithmetic and numpy ufuncs (``np.sin``,
``np.cosh``, ...); :class:`Dual` implements ``__array_ufunc__`` for the
elementary functions below.
"""

from __future__ import annotations

import itertools

import numpy as np

_tags = itertools.count(1)


def new_tag() -> int:
    return next(_tags)


def _split(x, tag):
    if isinstance(x, Dual) and x.tag == tag:
        return x.a, x.b
    return x, 0.0


def _maxtag(*xs):
    return max(x.tag for x in xs if isinstance(x, Dual))


class Dual:
    __slots__ = ("a", "b", "tag")

    def __init__(self, a, b, tag):
        self.a = a
        self.b = b
        self.tag = tag

    def __repr__(self):
        return f"Dual({self.a!r}, {self.b!r}, tag={self.tag})"

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, o):
        if isinstance(o, Dual):
            if o.tag == self.tag:
                return Dual(self.a + o.a, self.b + o.b, self.tag)
            if o.tag > self.tag:
                return o.__radd__(self)
        return Dual(self.a + o, self.b, self.tag)

    def __radd__(self, o):
        return Dual(o + self.a, self.b, self.tag)

    def __sub__(self, o):
        if isinstance(o, Dual):
            if o.tag == self.tag:
                return Dual(self.a - o.a, self.b - o.b, self.tag)
            if o.tag > self.tag:
                return o.__rsub__(self)
        return Dual(self.a - o, self.b, self.tag)

    def __rsub__(self, o):
        return Dual(o - self.a, -self.b, self.tag)

    def __mul__(self, o):
        if isinstance(o, Dual):
            if o.tag == self.tag:
                return Dual(self.a * o.a, self.a * o.b + self.b * o.a, self.tag)
            if o.tag > self.tag:
                return o.__rmul__(self)
        return Dual(self.a * o, self.b * o, self.tag)

    def __rmul__(self, o):
        return Dual(o * self.a, o * self.b, self.tag)

    def __truediv__(self, o):
        if isinstance(o, Dual):
            if o.tag == self.tag:
                q = self.a / o.a
                return Dual(q, (self.b - q * o.b) / o.a, self.tag)
            if o.tag > self.tag:
                return o.__rtruediv__(self)
        return Dual(self.a / o, self.b / o, self.tag)

    def __rtruediv__(self, o):
        q = o / self.a
        return Dual(q, -q * self.b / self.a, self.tag)

    def __neg__(self):
        return Dual(-self.a, -self.b, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if isinstance(k, Dual):
            return np.exp(k * np.log(self))
        if k == 2:
            return self * self
        if k == 1:
            return self
        if k == 0:
            return Dual(self.a ** 0, 0.0 * self.b, self.tag)
        return Dual(self.a ** k, k * self.a ** (k - 1) * self.b, self.tag)

    def __rpow__(self, c):
        return np.exp(self * np.log(c))

    def __abs__(self):
        return Dual(abs(self.a), np.sign(primal(self.a)) * self.b, self.tag)

    # comparisons act on the primal value; derivatives of branch choices are 0
    def __lt__(self, o):
        return primal(self) < primal(o)

    def __le__(self, o):
        return primal(self) <= primal(o)

    def __gt__(self, o):
        return primal(self) > primal(o)

    def __ge__(self, o):
        return primal(self) >= primal(o)

    # -- numpy interop ------------------------------------------------------
    def __array_ufunc__(self, ufunc, method, *args, **kwargs):
        if method != "__call__" or kwargs.get("out") is not None:
            return NotImplemented
        if any(isinstance(a, np.ndarray) and a.dtype == object for a in args):
            # component array: wrap the dual so numpy loops elementwise
            return ufunc(*(_box(a) if isinstance(a, Dual) else a for a in args))
        if len(args) == 1:
            rule = _UNARY.get(ufunc)
            if rule is None:
                return NotImplemented
            return rule(args[0])
        if len(args) == 2:
            x, y = args
            if ufunc is np.add:
                return x + y if isinstance(x, Dual) else y.__radd__(x)
            if ufunc is np.subtract:
                return x - y if isinstance(x, Dual) else y.__rsub__(x)
            if ufunc is np.multiply:
                return x * y if isinstance(x, Dual) else y.__rmul__(x)
            if ufunc is np.true_divide:
                return x / y if isinstance(x, Dual) else y.__rtruediv__(x)
            if ufunc is np.power:
                if isinstance(x, Dual):
                    return x ** y
                return y.__rpow__(x)
            if ufunc is np.arctan2:
                return _arctan2(x, y)
            if ufunc is np.hypot:
                return np.sqrt(x * x + y * y)
        return NotImplemented


def _box(x):
    out = np.empty((), dtype=object)
    out[()] = x
    return out


def _unary(f, df):
    def rule(x):
        return Dual(f(x.a), df(x.a) * x.b, x.tag)
    return rule


def _sqrt_rule(x):
    r = np.sqrt(x.a)
    return Dual(r, x.b / (2.0 * r), x.tag)


def _tan_rule(x):
    t = np.tan(x.a)
    return Dual(t, (1.0 + t * t) * x.b, x.tag)


def _tanh_rule(x):
    t = np.tanh(x.a)
    return Dual(t, (1.0 - t * t) * x.b, x.tag)


def _exp_rule(x):
    e = np.exp(x.a)
    return Dual(e, e * x.b, x.tag)


_UNARY = {
    np.negative: lambda x: -x,
    np.positive: lambda x: x,
    np.sin: _unary(np.sin, np.cos),
    np.cos: _unary(np.cos, lambda a: -np.sin(a)),
    np.tan: _tan_rule,
    np.sinh: _unary(np.sinh, np.cosh),
    np.cosh: _unary(np.cosh, np.sinh),
    np.tanh: _tanh_rule,
    np.exp: _exp_rule,
    np.expm1: _unary(np.expm1, np.exp),
    np.log: _unary(np.log, lambda a: 1.0 / a),
    np.log1p: _unary(np.log1p, lambda a: 1.0 / (1.0 + a)),
    np.sqrt: _sqrt_rule,
    np.square: lambda x: x * x,
    np.reciprocal: lambda x: 1.0 / x,
    np.absolute: abs,
    np.arcsin: _unary(np.arcsin, lambda a: 1.0 / np.sqrt(1.0 - a * a)),
    np.arccos: _unary(np.arccos, lambda a: -1.0 / np.sqrt(1.0 - a * a)),
    np.arctan: _unary(np.arctan, lambda a: 1.0 / (1.0 + a * a)),
    np.arcsinh: _unary(np.arcsinh, lambda a: 1.0 / np.sqrt(a * a + 1.0)),
    np.arccosh: _unary(np.arccosh, lambda a: 1.0 / np.sqrt(a * a - 1.0)),
    np.arctanh: _unary(np.arctanh, lambda a: 1.0 / (1.0 - a * a)),
}


def _arctan2(y, x):
    tag = _maxtag(y, x)
    ya, yb = _split(y, tag)
    xa, xb = _split(x, tag)
    r2 = xa * xa + ya * ya
    return Dual(np.arctan2(ya, xa), (xa * yb - ya * xb) / r2, tag)


# object arrays apply ufuncs by calling a same-named method on each element
for _uf in list(_UNARY):
    setattr(Dual, _uf.__name__, (lambda uf: lambda self: uf(self))(_uf))


def primal(x):
    """Strip every dual layer and return the underlying float/array."""
    while isinstance(x, Dual):
        x = x.a
    return x


def _strip(x, tag):
    if isinstance(x, Dual) and x.tag == tag:
        return x.a
    return x


def _tangent(x, tag):
    if isinstance(x, Dual) and x.tag == tag:
        return x.b
    return 0.0 * x


# -- structured values ----------------------------------------------------

def as_obj(value, ndim):
    """Convert a function result to an object array with ``ndim`` component axes.

    Lists, tuples and object arrays are read structurally.  A float ndarray is
    split along its first ``ndim`` axes; any remaining axes are batch axes and
    stay inside the elements.
    """
    if ndim == 0:
        if isinstance(value, np.ndarray) and value.dtype == object:
            return value.reshape(()) if value.size == 1 else value
        out = np.empty((), dtype=object)
        out[()] = value
        return out
    if isinstance(value, np.ndarray) and value.dtype != object:
        shape = value.shape[:ndim]
        out = np.empty(shape, dtype=object)
        for idx in np.ndindex(*shape):
            out[idx] = value[idx]
        return out
    if isinstance(value, np.ndarray) and value.ndim == ndim:
        return value
    rows = [as_obj(v, ndim - 1) for v in value]
    out = np.empty((len(rows),) + rows[0].shape, dtype=object)
    for i, r in enumerate(rows):
        out[i, ...] = r
    return out


def obj_map(fn, arr):
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(*arr.shape):
        out[idx] = fn(arr[idx])
    return out


def obj_stack(arrs):
    """Stack object arrays along a new trailing axis."""
    out = np.empty(arrs[0].shape + (len(arrs),), dtype=object)
    for i, a in enumerate(arrs):
        out[..., i] = a
    return out


def to_float(arr) -> np.ndarray:
    """Object array of floats/batch arrays -> float array, component axes first."""
    arr = np.asarray(arr, dtype=object) if not isinstance(arr, np.ndarray) else arr
    if arr.dtype != object:
        return arr.astype(float)
    vals = [np.asarray(primal(v), dtype=float) for v in arr.flat]
    if not vals:
        return np.zeros(arr.shape)
    bshape = np.broadcast_shapes(*(v.shape for v in vals))
    out = np.empty(arr.shape + bshape)
    for idx, v in zip(np.ndindex(*arr.shape), vals):
        out[idx] = v
    return out


def to_batch(arr, B: int) -> np.ndarray:
    """to_float with the batch axis materialised (constant entries broadcast to B)."""
    a = np.asarray(arr, dtype=object) if not isinstance(arr, np.ndarray) else arr
    out = to_float(a)
    if out.ndim == a.ndim:
        out = out[..., None]
    return np.broadcast_to(out, a.shape + (B,)).copy()


# -- differentiation drivers ----------------------------------------------

def _perturb(x, i, tag):
    return [Dual(xk, 1.0 if k == i else 0.0, tag) for k, xk in enumerate(x)]


def _jet_fn(f, ndim, order):
    if order == 0:
        return lambda x: [as_obj(f(list(x)), ndim)]
    inner = _jet_fn(f, ndim, order - 1)

    def lifted(x):
        tag = new_tag()
        passes = [inner(_perturb(x, i, tag)) for i in range(len(x))]
        base = [obj_map(lambda v: _strip(v, tag), F) for F in passes[0]]
        top = obj_stack([obj_map(lambda v: _tangent(v, tag), p[-1]) for p in passes])
        return base + [top]

    return lifted


def jet(f, x, order: int, ndim: int = 0):
    """Derivatives of ``f`` at ``x`` up to ``order``.

    Returns ``[F0, F1, ..., F_order]``; ``Fk`` is an object array of shape
    ``out_shape + (m,) * k`` whose trailing axes index the differentiation
    variables, so ``F2[..., i, j]`` is the second partial in ``x_i, x_j``.
    ``ndim`` is the number of component axes of ``f``'s output.
    """
    return _jet_fn(f, ndim, order)(list(x))


def jacobian(f, x, ndim: int = 0):
    return jet(f, x, 1, ndim)[1]


def derivatives_1d(f, t, order: int):
    """Values ``[f(t), f'(t), ..., f^(order)(t)]`` for a scalar function of one variable."""
    F = jet(lambda x: f(x[0]), [t], order, 0)
    return [F[k][(0,) * k] if k else F[0][()] for k in range(order + 1)]
