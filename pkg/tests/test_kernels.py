import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from driftclass.kernels import (
    build_bump_kernel, build_legendre_kernel, eval_kernel, eval_scaled,
    gauss_legendre_integral, kernel_moment,
)


@pytest.fixture(scope="module")
def k2():
    return build_legendre_kernel(2)


def test_order_two_coefficients(k2):
    # 9/8 - 15/8 x^2 from the normalized Legendre expansion
    assert k2.coefficients[0] == pytest.approx(9 / 8, abs=1e-14)
    assert k2.coefficients[1] == 0.0
    assert k2.coefficients[2] == pytest.approx(-15 / 8, abs=1e-14)
    assert k2(0.0) == pytest.approx(1.125, abs=1e-14)


def test_endpoint_value_and_outside(k2):
    assert k2(1.0) == pytest.approx(-0.75, abs=1e-14)
    assert k2(-1.0) == pytest.approx(-0.75, abs=1e-14)
    assert eval_kernel(k2, 1.5) == 0.0
    assert eval_kernel(k2, -1.0000001) == 0.0


@pytest.mark.parametrize("order", [1, 2, 3, 4, 6])
def test_moments(order):
    K = build_legendre_kernel(order)
    assert abs(kernel_moment(K, 0) - 1.0) <= 1e-8
    for k in range(1, order + 1):
        assert abs(kernel_moment(K, k)) <= 1e-8


def test_odd_moment_beyond_order(k2):
    assert abs(kernel_moment(k2, 3)) <= 1e-8


@pytest.mark.parametrize("order", [2, 4])
def test_legendre_even(order):
    K = build_legendre_kernel(order)
    x = np.linspace(-1, 1, 101)
    np.testing.assert_array_equal(K(x), K(-x))


def test_invalid_order():
    with pytest.raises(ValueError):
        build_legendre_kernel(0)


@pytest.mark.parametrize("order", [2, 4])
def test_norms_match_dense_grid(order):
    K = build_legendre_kernel(order)
    x = np.linspace(-1, 1, 200_001)
    v = K(x)
    assert np.max(np.abs(v)) == pytest.approx(K.sup_norm, rel=1e-6)
    l2 = math.sqrt(gauss_legendre_integral(lambda u: K(u) ** 2, -1, 1))
    assert l2 == pytest.approx(K.l2_norm, rel=1e-6)
    slopes = np.abs(np.diff(v) / np.diff(x))
    assert slopes.max() == pytest.approx(K.lipschitz, rel=1e-4)


def test_bump_values():
    K = build_bump_kernel(1.0)
    assert K(0.0) == pytest.approx(math.exp(-1.0), abs=1e-15)
    assert K(0.5) == 0.0
    assert K(-0.6) == 0.0
    K2 = build_bump_kernel(2.0)
    assert K2(0.25) == pytest.approx(2.0 * math.exp(-4.0 / 3.0), rel=1e-14)


def test_bump_positive_exactly_inside():
    K = build_bump_kernel(1.0)
    inside = np.linspace(-0.499, 0.499, 999)
    assert np.all(K(inside) > 0)
    assert np.all(K(np.array([-0.5, 0.5, 0.7, -3.0])) == 0)


def test_bump_norms_match_dense_grid():
    K = build_bump_kernel(1.5)
    x = np.linspace(-0.5, 0.5, 200_001)
    v = K(x)
    assert np.max(v) == pytest.approx(K.sup_norm, rel=1e-6)
    assert np.max(np.abs(np.diff(v) / np.diff(x))) == pytest.approx(K.lipschitz, rel=1e-4)
    l2 = math.sqrt(gauss_legendre_integral(lambda u: K(u) ** 2, -0.5, 0.5))
    assert l2 == pytest.approx(K.l2_norm, rel=1e-6)


@pytest.mark.parametrize("a", [0.0, -1.0])
def test_bump_invalid_amplitude(a):
    with pytest.raises(ValueError):
        build_bump_kernel(a)


def test_scaled_values(k2):
    assert eval_scaled(k2, 0.5, 0.0) == pytest.approx(2.25, abs=1e-14)
    assert eval_scaled(k2, 0.1, 0.2) == 0.0
    x = np.linspace(-2, 2, 41)
    np.testing.assert_array_equal(eval_scaled(k2, 1.0, x), eval_kernel(k2, x))
    with pytest.raises(ValueError):
        eval_scaled(k2, 0.0, 0.1)


@pytest.mark.parametrize("h", [1.0, 0.3, 0.05])
def test_scaled_integrates_to_one(k2, h):
    assert gauss_legendre_integral(lambda x: eval_scaled(k2, h, x), -h, h) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("order", [2, 4])
def test_absolute_moments_finite(order):
    K = build_legendre_kernel(order)
    for k in range(order + 2):
        assert np.isfinite(gauss_legendre_integral(lambda x: np.abs(x**k * K(x)), -1, 1))


@given(
    x=st.floats(-1, 1, allow_nan=False),
    y=st.floats(-1, 1, allow_nan=False),
    order=st.sampled_from([2, 4]),
)
def test_lipschitz_property(x, y, order):
    K = build_legendre_kernel(order)
    assert abs(K(x) - K(y)) <= K.lipschitz * abs(x - y) + 1e-12


def test_lipschitz_random_pairs(rng):
    for K in (build_legendre_kernel(2), build_bump_kernel(1.0)):
        lo, hi = K.support
        x, y = rng.uniform(lo, hi, (2, 100_000))
        assert np.all(np.abs(K(x) - K(y)) <= K.lipschitz * np.abs(x - y) + 1e-12)


@given(x=st.floats(-10, 10, allow_nan=False))
def test_zero_outside_support(x):
    for K in (build_legendre_kernel(2), build_bump_kernel(1.0)):
        lo, hi = K.support
        if x < lo or x > hi:
            assert eval_kernel(K, x) == 0.0


def test_quadrature_exact_on_polynomials():
    assert gauss_legendre_integral(lambda x: x**10, -1, 1) == pytest.approx(2 / 11, abs=1e-14)
