import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetuplink.numerics import (
    IntegralResult,
    NonConvergenceError,
    QuadratureSpec,
    bessel_i0_scaled,
    integrate_finite,
    integrate_finite_multi,
    integrate_semi_infinite,
)


def test_linear():
    res = integrate_finite(lambda x: x, 0.0, 1.0)
    assert res.converged
    assert res.value == pytest.approx(0.5, rel=1e-10)
    assert res.error <= max(1e-12, 1e-8 * abs(res.value))


def test_sine():
    res = integrate_finite(np.sin, 0.0, math.pi)
    assert res.value == pytest.approx(2.0, rel=1e-10)


def test_integrable_endpoint_singularity():
    res = integrate_finite(lambda x: 1.0 / np.sqrt(np.maximum(x, 1e-300)), 0.0, 1.0)
    assert res.value == pytest.approx(2.0, rel=1e-7)


def test_exponential_tail():
    res = integrate_semi_infinite(lambda x: np.exp(-x), 0.0)
    assert res.converged
    assert res.value == pytest.approx(1.0, rel=1e-9)
    assert res.cutoff is not None


def test_gaussian_moment():
    res = integrate_semi_infinite(lambda x: x * np.exp(-x * x / 2.0), 0.0)
    assert res.value == pytest.approx(1.0, rel=1e-9)


def test_rayleigh_normalization_slow_scale():
    lam = 1e-4
    res = integrate_semi_infinite(
        lambda t: 2.0 * math.pi * lam * t * np.exp(-math.pi * lam * t * t), 0.0
    )
    assert res.value == pytest.approx(1.0, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    coeffs=st.lists(st.floats(-5, 5), min_size=1, max_size=8),
    a=st.floats(-3, 3),
    width=st.floats(0.1, 5),
)
def test_polynomial_exactness(coeffs, a, width):
    poly = np.polynomial.Polynomial(coeffs)
    res = integrate_finite(poly, a, a + width)
    exact = poly.integ()(a + width) - poly.integ()(a)
    assert res.value == pytest.approx(exact, rel=1e-8, abs=1e-9)


@pytest.mark.parametrize("split", [0.3, 1.0, 2.5])
def test_additivity(split):
    f = lambda x: np.exp(-x) * np.sin(3 * x) ** 2
    left = integrate_finite(f, 0.0, split)
    right = integrate_finite(f, split, 4.0)
    whole = integrate_finite(f, 0.0, 4.0)
    assert abs(left.value + right.value - whole.value) <= 2 * (
        left.error + right.error + whole.error
    ) + 1e-12


def test_non_convergence_reported():
    spec = QuadratureSpec(rel_tol=1e-14, abs_tol=1e-16, max_subdivisions=2)
    res = integrate_finite(
        lambda x: np.abs(np.sin(100.0 / np.maximum(x, 1e-12))), 1e-3, 1.0, spec
    )
    assert not res.converged
    assert math.isfinite(res.value)
    with pytest.raises(NonConvergenceError):
        res.check()


def test_multi_component_matches_componentwise():
    def f(x):
        return np.stack([x, np.exp(-x), np.sin(x)], axis=1)

    values, errors, aggregate = integrate_finite_multi(f, 0.0, 2.0)
    assert aggregate.converged
    expected = [2.0, 1.0 - math.exp(-2.0), 1.0 - math.cos(2.0)]
    assert values == pytest.approx(expected, rel=1e-8)
    assert (errors >= 0).all()


def _i0_series(x, terms=40):
    total, term = 0.0, 1.0
    for k in range(terms):
        if k > 0:
            term *= (x * x / 4.0) / (k * k)
        total += term
    return total


def test_bessel_at_zero():
    assert bessel_i0_scaled(0.0) == 1.0


def test_bessel_against_series_oracle():
    # independent oracle: power series of I0, scaled by exp(-x)
    want = math.exp(-1.0) * _i0_series(1.0)
    assert bessel_i0_scaled(1.0) == pytest.approx(want, rel=1e-12)
    assert bessel_i0_scaled(1.0) == pytest.approx(0.46575960759364043, rel=1e-10)


def test_bessel_large_argument_asymptotic():
    # e^-x I0(x) ~ (2 pi x)^(-1/2) * (1 + 1/(8x) + 9/(128 x^2))
    x = 100.0
    asym = (1.0 + 1.0 / (8 * x) + 9.0 / (128 * x * x)) / math.sqrt(2 * math.pi * x)
    value = bessel_i0_scaled(x)
    assert math.isfinite(value)
    assert value == pytest.approx(asym, rel=1e-6)
    assert value == pytest.approx(0.03994, abs=2e-5)


def test_bessel_monotone_and_bounded():
    xs = np.linspace(0.0, 50.0, 400)
    vals = bessel_i0_scaled(xs)
    assert np.all(np.diff(vals) < 0)
    assert np.all(vals > 0) and np.all(vals <= 1.0)


def test_bessel_rejects_negative():
    with pytest.raises(ValueError):
        bessel_i0_scaled(-0.5)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_subdivisions=0)
