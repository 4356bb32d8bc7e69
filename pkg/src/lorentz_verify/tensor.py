"""Small-matrix algebra on object arrays, plus finite-difference jets.

Matrices here are at most 4x4 and their entries may be duals or batched
arrays, so determinants use cofactor expansion and inverses the adjugate:
no pivoting, hence no data-dependent branching that would break
differentiation.
"""

from __future__ import annotations

import numpy as np

from .ad import as_obj, jet, obj_stack


def zeros_obj(shape):
    out = np.empty(shape, dtype=object)
    out.fill(0.0)
    return out


def eye_obj(n):
    out = zeros_obj((n, n))
    for i in range(n):
        out[i, i] = 1.0
    return out


def det(M):
    n = M.shape[0]
    if n == 1:
        return M[0, 0]
    if n == 2:
        return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if n == 3:
        return (M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
                - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
                + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0]))
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(M, 0, axis=0), j, axis=1)
        total = total + (-1) ** j * M[0, j] * det(minor)
    return total


def adjugate(M):
    n = M.shape[0]
    if n == 1:
        return np.array([[1.0]], dtype=object)
    adj = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(M, j, axis=0), i, axis=1)
            adj[i, j] = (-1) ** (i + j) * det(minor)
    return adj


def box(s):
    """Wrap a scalar-like (possibly a batch array) so numpy treats it as one element."""
    out = np.empty((), dtype=object)
    out[()] = s
    return out


def scale(M, s):
    return np.asarray(M, dtype=object) * box(s)


def inv(M):
    return scale(adjugate(M), 1.0 / det(M))


def ein(spec, *ops):
    return np.einsum(spec, *[np.asarray(o, dtype=object) for o in ops])


def trace(M):
    return sum(M[i, i] for i in range(M.shape[0]))


def fd_jet(f, x, order: int, ndim: int = 0, h=None):
    """Central-difference analogue of :func:`ad.jet` for orders 1 and 2.

    ``x`` must hold plain floats or float arrays.  Second derivatives are
    taken as differences of first differences, so the step for each level
    can be chosen separately; the defaults trade truncation against
    round-off for double precision.
    """
    if order > 2:
        raise ValueError("finite-difference jets stop at order 2")
    x = [np.asarray(v, dtype=float) for v in x]
    if order == 0:
        return [as_obj(f(list(x)), ndim)]
    h1 = 1e-5 if order == 1 else 1e-4
    if h is not None:
        h1 = h

    def shifted(i, s):
        y = list(x)
        y[i] = y[i] + s
        return y

    if order == 1:
        F0 = as_obj(f(list(x)), ndim)
        cols = []
        for i in range(len(x)):
            fp = as_obj(f(shifted(i, h1)), ndim)
            fm = as_obj(f(shifted(i, -h1)), ndim)
            cols.append((fp - fm) * (0.5 / h1))
        return [F0, obj_stack(cols)]

    inner = lambda y: fd_jet(f, y, 1, ndim)
    lo = inner(x)
    cols = []
    for i in range(len(x)):
        fp = inner(shifted(i, h1))[1]
        fm = inner(shifted(i, -h1))[1]
        cols.append((fp - fm) * (0.5 / h1))
    return lo + [obj_stack(cols)]


def exact_jet(f, x, order, ndim=0):
    return jet(f, x, order, ndim)
