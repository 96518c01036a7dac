import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qndsim.kernels import Kernel, gram_matrix, one_minus_exp_over_rate, orthonormal_coefficients, phi


def _phi_mp(k, z):
    mpmath.mp.dps = 40
    return float(mpmath.quad(lambda t: t**k * mpmath.exp(-z * t), [0, 1]))


@pytest.mark.parametrize("k", [0, 1, 2, 5, 12, 20])
@pytest.mark.parametrize("z", [0.0, 1e-8, 0.3, 1.999, 2.0, 7.5, 60.0, 8860.0, 1e6])
def test_phi_matches_high_precision_quadrature(k, z):
    assert phi(k, z) == pytest.approx(_phi_mp(k, z), rel=1e-12)


def test_phi_broadcasts():
    out = phi(np.array([[0], [1]]), np.array([0.0, 3.0]))
    assert out.shape == (2, 2)
    assert out[0, 0] == pytest.approx(1.0) and out[1, 0] == pytest.approx(0.5)


def _random_kernel(tau, draw_terms):
    c, k, mu = zip(*draw_terms)
    return Kernel(tau, c, k, [m / tau for m in mu])


terms = st.lists(
    st.tuples(st.one_of(st.just(0.0), st.floats(0.01, 3), st.floats(-3, -0.01)), st.integers(0, 3), st.sampled_from([0.0, 0.01, 0.5, 3.0, 40.0, 2000.0])),
    min_size=1,
    max_size=4,
)


@settings(max_examples=40, deadline=None)
@given(terms, terms, st.sampled_from([1e-6, 4e-5, 1.0]))
def test_closed_form_inner_matches_quadrature(t1, t2, tau):
    a = _random_kernel(tau, t1)
    b = _random_kernel(tau, t2)
    exact = a.inner(b)
    scale = math.sqrt(a.norm2() * b.norm2()) + 1e-300
    assert abs(exact - a.quad_inner(b)) <= 1e-9 * scale


@settings(max_examples=30, deadline=None)
@given(terms, st.sampled_from([4e-5, 1.0]))
def test_closed_form_integral_matches_quadrature(t1, tau):
    a = _random_kernel(tau, t1)
    scale = math.sqrt(tau * a.norm2()) + 1e-300
    assert abs(a.integral() - a.quad_integral()) <= 1e-9 * scale


def test_algebra_and_evaluation():
    tau = 2.0
    a = Kernel.exponential(tau, 2.0, 1.5)
    b = Kernel.constant(tau, 1.0)
    s = np.linspace(0, tau, 7)
    assert np.allclose((a + b)(s), 2 * np.exp(-1.5 * (tau - s)) + 1)
    assert np.allclose((a - a)(s), 0.0) and (a - a).is_zero
    assert np.allclose((3 * a / 2)(s), 3 * np.exp(-1.5 * (tau - s)))
    with pytest.raises(ValueError):
        a + Kernel.constant(1.0, 1.0)


@pytest.mark.parametrize("mu", [0.0, 1e-7, 1e-3, 0.049, 0.051, 5.0])
def test_one_minus_exp_over_rate(mu):
    tau = 1.0
    k = one_minus_exp_over_rate(tau, mu, 2.0)
    x = tau - np.linspace(0, tau, 11)
    expected = 2 * x if mu == 0 else 2 * (-np.expm1(-mu * x)) / mu
    assert np.allclose(k(tau - x), expected, rtol=1e-13, atol=1e-15)


def test_orthonormal_coefficients_reproduce_gram_matrix():
    tau = 1.0
    ks = [Kernel.constant(tau, 1.0), Kernel.exponential(tau, 1.0, 3.0), Kernel.monomial(tau, 1.0, 1),
          Kernel.constant(tau, 2.0)]
    C = orthonormal_coefficients(ks)
    assert C.shape == (4, 3)  # the last kernel is parallel to the first
    assert np.allclose(C @ C.T, gram_matrix(ks), atol=1e-14)
    assert C[0, 1:] == pytest.approx([0.0, 0.0], abs=1e-15)
