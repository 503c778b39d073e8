import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from delaybsde import bessel
from delaybsde.errors import DomainError

mp.mp.dps = 40

# dense around every branch switch
SEAMS = [bessel.I_SERIES_MAX, bessel.K_SERIES_MAX, bessel.K_ASYMPTOTIC_MIN]
POINTS = np.unique(np.concatenate([
    np.logspace(-8, np.log10(60.0), 120),
    *[s + np.array([-1e-9, 0.0, 1e-9, -0.01, 0.01]) for s in SEAMS],
]))


def _mp(fn, order, w, scale):
    v = fn(order, mp.mpf(w)) * mp.exp(scale * mp.mpf(w))
    return float(v)


@pytest.mark.parametrize(
    "ours, order, fn, scale",
    [
        (bessel.i0e, 0, mp.besseli, -1),
        (bessel.i1e, 1, mp.besseli, -1),
        (bessel.k0e, 0, mp.besselk, 1),
        (bessel.k1e, 1, mp.besselk, 1),
    ],
)
def test_scaled_against_mpmath(ours, order, fn, scale):
    got = ours(POINTS)
    ref = np.array([_mp(fn, order, w, scale) for w in POINTS])
    np.testing.assert_allclose(got, ref, rtol=1e-13)


def test_unscaled_known_values():
    np.testing.assert_allclose(bessel.i0(2.0), 2.279585302336067, rtol=1e-15)
    np.testing.assert_allclose(bessel.k0(1.0), 0.4210244382407083, rtol=1e-15)
    np.testing.assert_allclose(bessel.k1(1.0), 0.6019072301972346, rtol=1e-15)
    np.testing.assert_allclose(bessel.scaled_wk1(10.0), 1.8648773453825581e-4, rtol=1e-14)


def test_values_at_zero():
    assert bessel.i0(0.0) == 1.0
    assert bessel.i1(0.0) == 0.0
    assert bessel.scaled_wk1(0.0) == 1.0
    v = bessel.evaluate(0.0)
    assert v.i0 == 1.0 and math.isinf(v.k0) and math.isinf(v.k1)


def test_agrees_with_scipy_everywhere():
    w = np.linspace(1e-4, 80.0, 4001)
    for ours, ref in ((bessel.i0e, special.i0e), (bessel.i1e, special.i1e),
                      (bessel.k0e, special.k0e), (bessel.k1e, special.k1e)):
        np.testing.assert_allclose(ours(w), ref(w), rtol=5e-14)


def test_scalar_in_scalar_out():
    assert isinstance(bessel.i0e(1.5), float)
    assert bessel.k1e(np.array([1.0, 2.0])).shape == (2,)


def test_wronskian_tiny_argument():
    w = 1e-6
    assert abs(w * (bessel.i0(w) * bessel.k1(w) + bessel.i1(w) * bessel.k0(w)) - 1.0) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-6, max_value=50.0))
def test_wronskian_property(w):
    val = w * (bessel.i0e(w) * bessel.k1e(w) + bessel.i1e(w) * bessel.k0e(w))
    assert abs(val - 1.0) <= 1e-13


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1e-3, max_value=40.0), st.floats(min_value=1e-3, max_value=1.0))
def test_monotonicity(w, dw):
    # I_n increasing, K_n and w K_1 decreasing
    assert bessel.i0(w + dw) > bessel.i0(w)
    assert bessel.i1(w + dw) > bessel.i1(w)
    assert bessel.k0(w + dw) < bessel.k0(w)
    assert bessel.k1(w + dw) < bessel.k1(w)
    assert bessel.scaled_wk1(w + dw) < bessel.scaled_wk1(w)


def test_small_argument_limits():
    w = np.array([1e-8, 1e-6, 1e-4])
    np.testing.assert_allclose(bessel.i1(w) / w, 0.5, rtol=1e-7)
    np.testing.assert_allclose(bessel.k0(w) / -np.log(w), 1.0, rtol=0.1)


def test_derivative_relations_unscaled_moderate_range():
    w = np.linspace(0.1, 5.0, 50)
    h = 1e-6
    cd = lambda f: (f(w + h) - f(w - h)) / (2 * h)  # noqa: E731
    np.testing.assert_allclose(cd(bessel.i0), bessel.i1(w), atol=1e-8)
    np.testing.assert_allclose(cd(bessel.k0), -bessel.k1(w), atol=1e-6)
    np.testing.assert_allclose(cd(bessel.i1), bessel.i0(w) - bessel.i1(w) / w, atol=1e-8)
    np.testing.assert_allclose(cd(bessel.k1), -bessel.k0(w) - bessel.k1(w) / w, atol=1e-5)


def test_domain_errors():
    with pytest.raises(DomainError):
        bessel.i0(-1.0)
    with pytest.raises(DomainError):
        bessel.bessel_k(0, 0.0)
    with pytest.raises(DomainError):
        bessel.bessel_k(0, -1.0)
    with pytest.raises(DomainError):
        bessel.bessel_i(2, 1.0)
    with pytest.raises(DomainError):
        bessel.evaluate(-0.5)


def test_generic_order_entry_points():
    assert bessel.bessel_i(0, 2.0) == bessel.i0(2.0)
    assert bessel.bessel_k(1, 3.0) == bessel.k1(3.0)


def test_antiderivatives_against_quadrature():
    from delaybsde.checks import antiderivative_errors

    errs = antiderivative_errors()
    assert max(errs.values()) <= 1e-8, errs


def test_mpmath_antiderivatives():
    # int_a^b w I0 = [w I1], int_a^b w K0 = -[w K1]
    a, b = 0.3, 4.0
    ref_i = float(mp.quad(lambda w: w * mp.besseli(0, w), [a, b]))
    ref_k = float(mp.quad(lambda w: w * mp.besselk(0, w), [a, b]))
    np.testing.assert_allclose(b * bessel.i1(b) - a * bessel.i1(a), ref_i, rtol=1e-13)
    np.testing.assert_allclose(-(b * bessel.k1(b) - a * bessel.k1(a)), ref_k, rtol=1e-13)


def test_order_one_weighted_forms_are_not_antiderivatives():
    # w I0 is not an antiderivative of w I1, nor is -w K0 one of w K1
    a, b = 0.5, 3.0
    ref_i = float(mp.quad(lambda w: w * mp.besseli(1, w), [a, b]))
    ref_k = float(mp.quad(lambda w: w * mp.besselk(1, w), [a, b]))
    assert abs(b * bessel.i0(b) - a * bessel.i0(a) - ref_i) > 0.1
    assert abs(-(b * bessel.k0(b) - a * bessel.k0(a)) - ref_k) > 0.1
