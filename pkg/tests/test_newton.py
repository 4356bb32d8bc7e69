from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lorentz_verify.newton import (b_r, b_r_alt, elementary_symmetric, invariants_from_matrix,
                                   newton_identities_check, newton_tensors, sigma_subsets)
from lorentz_verify.ad import as_obj, to_float


def sym(n):
    return arrays(np.float64, (n, n), elements=st.floats(-3, 3)).map(lambda M: 0.5 * (M + M.T))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_b_r_two_forms(n):
    for r in range(n + 1):
        assert b_r(n, r) == b_r_alt(n, r)


@settings(max_examples=60)
@given(st.sampled_from([2, 3]).flatmap(sym))
def test_newton_identities_random(A):
    r = newton_identities_check(invariants_from_matrix(A[..., None]))
    scale = max(1.0, float(np.abs(A).max())) ** (A.shape[0] + 1)
    for k, v in r.items():
        if isinstance(v, float):
            assert v <= 1e-11 * scale, k


@settings(max_examples=40)
@given(sym(3))
def test_elementary_symmetric_vs_subsets(A):
    S = [float(to_float(np.asarray(s, dtype=object))) if not isinstance(s, float) else s
         for s in elementary_symmetric(as_obj(A, 2))]
    lam = np.linalg.eigvalsh(A)
    for r in range(4):
        assert S[r] == pytest.approx(sigma_subsets(lam, r), abs=1e-10 * (1 + np.abs(A).max()) ** 3)


def test_diagonal_example():
    A = np.diag([1.0, 2.0, 3.0])
    inv = invariants_from_matrix(A)
    f = inv.floats()
    assert [float(s) for s in f.S] == pytest.approx([1, 6, 11, 6])
    # H_r = (-1)^r S_r / C(3, r)
    assert float(f.H[2]) == pytest.approx(11 / 3)
    P = newton_tensors(as_obj(A, 2))
    assert np.allclose(to_float(P[3]), 0)
    # P_1 e_i = (-S_1(A_i)) e_i with A_i the matrix without eigenvalue i
    assert np.allclose(np.diag(to_float(P[1])), [-5, -4, -3])


def test_umbilical_invariants():
    lam = 0.7
    inv = invariants_from_matrix(lam * np.eye(3)).floats()
    for r in range(1, 4):
        # umbilical: H_r = (-lam)^r
        assert float(inv.H[r]) == pytest.approx((-lam) ** r)
        assert float(inv.S[r]) == pytest.approx(comb(3, r) * lam ** r)
