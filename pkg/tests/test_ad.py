import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorentz_verify import tensor as T
from lorentz_verify.ad import Dual, derivatives_1d, jet, to_float

finite = st.floats(-2.0, 2.0, allow_nan=False)


@given(finite)
def test_derivatives_of_exp_sin(t):
    d = [float(v) for v in derivatives_1d(lambda x: np.exp(x) * np.sin(x), t, 3)]
    e, s, c = math.exp(t), math.sin(t), math.cos(t)
    ref = [e * s, e * (s + c), 2 * e * c, 2 * e * (c - s)]
    assert np.allclose(d, ref, rtol=1e-12, atol=1e-12)


@given(st.floats(0.2, 3.0))
def test_sqrt_tanh_third_derivative_matches_closed_form(t):
    # d^3/dt^3 sqrt(t) = 3/8 t^(-5/2)
    d = derivatives_1d(np.sqrt, t, 3)
    assert float(d[3]) == pytest.approx(0.375 * t ** -2.5, rel=1e-12)
    th = derivatives_1d(np.tanh, t, 2)
    sech2 = 1 / math.cosh(t) ** 2
    assert float(th[2]) == pytest.approx(-2 * math.tanh(t) * sech2, rel=1e-10, abs=1e-14)


def test_nested_passes_do_not_confuse_perturbations():
    # d/dx [x * d/dy (x + y)] at y = 0 is 1; perturbation confusion would give 2
    def inner(x):
        return derivatives_1d(lambda y: x + y, 0.0, 1)[1]
    d = derivatives_1d(lambda x: x * inner(x), 1.0, 1)
    assert float(d[1]) == pytest.approx(1.0)


def test_hessian_is_symmetric_and_batched():
    f = lambda x: x[0] ** 2 * np.cos(x[1]) + np.exp(x[0] * x[1])
    x = [np.array([0.3, -0.2, 1.1]), np.array([0.5, 0.9, -0.4])]
    F0, F1, F2 = jet(f, x, 2)
    H = to_float(F2)
    assert H.shape == (2, 2, 3)
    assert np.allclose(H, np.swapaxes(H, 0, 1), atol=1e-14)
    a, b = x
    ref01 = -2 * a * np.sin(b) + np.exp(a * b) * (1 + a * b)
    assert np.allclose(H[0, 1], ref01, rtol=1e-13)


@settings(max_examples=25)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_exact_jet_agrees_with_fd_oracle(a, b):
    f = lambda x: [np.sin(x[0]) * x[1], np.cosh(x[0] - x[1])]
    ex = to_float(T.exact_jet(f, [a, b], 2, 1)[2])
    fd = to_float(T.fd_jet(f, [a, b], 2, 1)[2])
    assert np.allclose(ex, fd, atol=1e-6)


def test_fd_jet_refuses_order_three():
    with pytest.raises(ValueError):
        T.fd_jet(lambda x: x[0], [0.0], 3)


def test_dual_arithmetic():
    x = Dual(2.0, 1.0, 1)
    y = (x * x + 3) / x
    assert y.a == pytest.approx(3.5)
    assert y.b == pytest.approx(1 - 3 / 4)


def test_det_and_inverse_of_object_matrices():
    M = np.array([[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]])
    from lorentz_verify.ad import as_obj
    Mo = as_obj(M, 2)
    assert float(to_float(T.box(T.det(Mo)))) == pytest.approx(np.linalg.det(M))
    assert np.allclose(to_float(T.inv(Mo)), np.linalg.inv(M))
