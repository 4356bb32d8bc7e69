"""Elementary symmetric functions of a shape operator and its Newton tensors.

Sign conventions: the characteristic polynomial is
``det(t I - A) = sum_k (-1)^k S_k t^(n-k)``, so ``S_k`` is the k-th
elementary symmetric function of the eigenvalues; the normalized mean
curvatures are ``H_r = (-1)^r S_r / C(n, r)``; the Newton tensors follow
``P_0 = I``, ``P_r = (-1)^r S_r I + A P_(r-1)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from . import tensor as T
from .ad import as_obj, to_float


def b_r(n: int, r: int) -> int:
    return (n - r) * comb(n, r)


def b_r_alt(n: int, r: int) -> int:
    return (r + 1) * comb(n, r + 1)


def sigma_subsets(values, r: int):
    """r-th elementary symmetric function by explicit sum over index subsets."""
    values = list(values)
    if r == 0:
        return 1.0
    return sum(np.prod([values[i] for i in idx], axis=0)
               for idx in itertools.combinations(range(len(values)), r)) if r <= len(values) else 0.0


def elementary_symmetric(A):
    """[S_0, ..., S_n] from traces of powers (Newton-Girard); works on duals."""
    n = A.shape[0]
    p = []
    Ak = A
    for k in range(1, n + 1):
        p.append(T.trace(Ak))
        if k < n:
            Ak = T.ein("ij,jk->ik", Ak, A)
    e = [1.0]
    for k in range(1, n + 1):
        acc = 0.0
        for i in range(1, k + 1):
            acc = acc + (-1) ** (i - 1) * e[k - i] * p[i - 1]
        e.append(acc * (1.0 / k))
    return e


def newton_tensors(A, S=None):
    n = A.shape[0]
    if S is None:
        S = elementary_symmetric(A)
    P = [T.eye_obj(n) + 0.0 * A]
    for r in range(1, n + 1):
        P.append(T.scale(T.eye_obj(n), (-1) ** r * S[r]) + T.ein("ij,jk->ik", A, P[-1]))
    return P


@dataclass
class CurvatureInvariants:
    """Per-point curvature data of a hypersurface (object arrays or floats)."""

    A: object
    S: list
    H: list
    P: list
    n: int

    @property
    def eigenvalues(self):
        Af = to_float(self.A)
        Am = np.moveaxis(Af.reshape(self.n, self.n, -1), -1, 0)
        return np.sort(np.linalg.eigvals(Am).real, axis=-1)

    def floats(self) -> "CurvatureInvariants":
        return CurvatureInvariants(to_float(self.A), [np.asarray(to_float(T.box(s))) for s in self.S],
                                   [np.asarray(to_float(T.box(h))) for h in self.H],
                                   [to_float(p) for p in self.P], self.n)


def invariants_from_matrix(A) -> CurvatureInvariants:
    A = A if (isinstance(A, np.ndarray) and A.dtype == object) else as_obj(np.asarray(A, dtype=float), 2)
    n = A.shape[0]
    S = elementary_symmetric(A)
    H = [None] + [(-1) ** r * S[r] * (1.0 / comb(n, r)) for r in range(1, n + 1)]
    P = newton_tensors(A, S)
    return CurvatureInvariants(A, S, H, P, n)


def newton_identities_check(inv: CurvatureInvariants, symmetric_frame: bool = True) -> dict:
    """Residuals of the Newton-tensor identities against an eigenvalue oracle.

    The oracle diagonalizes A numerically and evaluates elementary symmetric
    functions by subset sums, independently of the trace recursion.
    Returns sup-residuals keyed by identity family.
    """
    f = inv.floats()
    n = f.n
    A = f.A.reshape(n, n, -1)
    B = A.shape[-1]
    S = [np.broadcast_to(np.asarray(s, dtype=float).reshape(-1), (B,)) for s in f.S]
    P = [p.reshape(n, n, -1) * np.ones((1, 1, B)) for p in f.P]
    Am = np.moveaxis(A, -1, 0)
    res = {"P_n": float(np.abs(P[n]).max())}
    tr = lambda M: np.einsum("ii...->...", M)
    mm = lambda X, Y: np.einsum("ij...,jk...->ik...", X, Y)
    Hs = [None] + [(-1) ** r * S[r] / comb(n, r) for r in range(1, n + 1)]
    S_ext = S + [np.zeros(B), np.zeros(B)]
    H_ext = Hs + [np.zeros(B), np.zeros(B)]
    r1 = r2 = r3 = 0.0
    for r in range(n):
        b = b_r(n, r)
        trP = tr(P[r])
        r1 = max(r1, np.abs(trP - (-1) ** r * (n - r) * S[r]).max())
        if r >= 1:
            r1 = max(r1, np.abs(trP - b * Hs[r]).max())
        trAP = tr(mm(A, P[r]))
        r2 = max(r2, np.abs(trAP - (-1) ** r * (r + 1) * S_ext[r + 1]).max(),
                 np.abs(trAP + b * H_ext[r + 1]).max())
        trAAP = tr(mm(mm(A, A), P[r]))
        r3 = max(r3, np.abs(trAAP - (-1) ** r * (S[1] * S_ext[r + 1] - (r + 2) * S_ext[r + 2])).max())
    res["trace_i"] = float(r1)
    res["trace_ii"] = float(r2)
    res["trace_iii"] = float(r3)
    res["b_r_integer"] = int(max(abs(b_r(n, r) - b_r_alt(n, r)) for r in range(n + 1)))

    # eigenvalue oracle
    if symmetric_frame:
        lam, vec = np.linalg.eigh(0.5 * (Am + np.swapaxes(Am, 1, 2)))
    else:
        lam, vec = np.linalg.eig(Am)
        lam, vec = lam.real, vec.real
    lam = lam.T  # (n, B)
    rs = 0.0
    for r in range(n + 1):
        rs = max(rs, np.abs(S[r] - sigma_subsets(lam, r)).max())
    res["S_vs_sigma"] = float(rs)
    re = 0.0
    for r in range(n + 1):
        Pm = np.moveaxis(P[r], -1, 0)
        for i in range(n):
            others = [lam[j] for j in range(n) if j != i]
            s_ri = sigma_subsets(others, r) if r <= n - 1 else np.zeros(B)
            ei = vec[:, :, i]
            lhs = np.einsum("bij,bj->bi", Pm, ei)
            rhs = np.broadcast_to((-1) ** r * np.asarray(s_ri, dtype=float), (B,))[:, None] * ei
            re = max(re, np.abs(lhs - rhs).max())
    res["eigen_action"] = float(re)
    res["commutator"] = float(max(np.abs(mm(A, p) - mm(p, A)).max() for p in P))
    return res
