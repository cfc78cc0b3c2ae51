import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from mfinvariance.fields import c_norm_sq_quadrature
from mfinvariance.specialfn import HurstPair, c_norm, c_norm_sq, d_coef, log_gamma, log_gamma_ratio

hurst = st.floats(0.501, 0.999)


@given(st.floats(1e-8, 1e6))
def test_log_gamma_matches_mpmath(x):
    with mpmath.workdps(30):
        ref = float(mpmath.loggamma(mpmath.mpf(x)))
    assert abs(log_gamma(x) - ref) <= 1e-15 * max(1.0, abs(ref)) + 1e-15


@given(st.floats(0.05, 50.0))
def test_log_gamma_relative_accuracy_on_core_range(x):
    with mpmath.workdps(30):
        ref = float(mpmath.loggamma(mpmath.mpf(x)))
    if ref != 0.0:
        assert abs(log_gamma(x) / ref - 1.0) <= 1e-13


def test_log_gamma_recurrence():
    x = np.linspace(0.05, 60.0, 2001)
    np.testing.assert_allclose(log_gamma(x + 1.0), log_gamma(x) + np.log(x), rtol=0, atol=1e-12)


def test_log_gamma_at_one_fifth():
    assert log_gamma(0.2) == pytest.approx(math.log(4.5908437119988), rel=1e-13)


def test_log_gamma_known_values():
    assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-16)
    assert log_gamma(2.0) == pytest.approx(0.0, abs=1e-16)
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)
    assert log_gamma(10.0) == pytest.approx(math.log(362880.0), rel=1e-15)


def test_log_gamma_vectorised_and_domain():
    x = np.array([0.3, 1.7, 25.0])
    np.testing.assert_allclose(log_gamma(x), [math.lgamma(v) for v in x], rtol=1e-14)
    with pytest.raises(ValueError):
        log_gamma(0.0)
    with pytest.raises(ValueError):
        log_gamma(-1.5)


@given(st.floats(0.0, 1e7), st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_log_gamma_ratio(x, a, b):
    with mpmath.workdps(40):
        ref = float(mpmath.loggamma(mpmath.mpf(x) + a) - mpmath.loggamma(mpmath.mpf(x) + b))
    assert abs(log_gamma_ratio(x, a, b) - ref) <= 1e-13 * max(1.0, abs(ref))


def test_c_norm_frozen():
    # C(1/2)^2 = 2 pi, closed form pi / (H Gamma(2H) sin(pi H))
    assert c_norm(0.5) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-14)
    assert c_norm_sq(0.75) == pytest.approx(6.684340, abs=1e-5)


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_c_norm_sq_spectral_integral(H):
    assert abs(c_norm_sq(H) - c_norm_sq_quadrature(H)) < 1e-6


@given(hurst)
def test_d_coef_diagonal(H):
    assert abs(d_coef(H, H) - 0.5) < 1e-12


@given(hurst, hurst)
def test_d_coef_symmetric_and_bounded(h1, h2):
    assert abs(d_coef(h1, h2) - d_coef(h2, h1)) <= 1e-15
    # Cauchy-Schwarz on the harmonizable representation
    assert d_coef(h1, h2) <= 0.5 + 1e-12


def test_d_coef_frozen():
    with mpmath.workdps(30):
        h1, h2 = mpmath.mpf("0.6"), mpmath.mpf("0.8")
        ref = mpmath.sqrt(mpmath.gamma(2 * h1 + 1) * mpmath.gamma(2 * h2 + 1) * mpmath.sinpi(h1) * mpmath.sinpi(h2)) \
            / (2 * mpmath.gamma(h1 + h2 + 1) * mpmath.sinpi((h1 + h2) / 2))
    assert d_coef(0.6, 0.8) == pytest.approx(float(ref), rel=1e-13)
    assert d_coef(0.6, 0.8) == pytest.approx(0.46689, abs=1e-5)


def test_d_coef_dense_grid():
    g = np.linspace(0.501, 0.999, 997)
    assert np.max(np.abs(d_coef(g, g) - 0.5)) < 1e-12


def test_c_norm_continuous():
    jumps = []
    for n in (1001, 2001, 4001):
        c = c_norm(np.linspace(0.501, 0.999, n))
        assert np.all(np.isfinite(c)) and np.all(c > 0)
        jumps.append(np.max(np.abs(np.diff(c)) / c[:-1]))
    assert jumps[0] > jumps[1] > jumps[2]
    assert jumps[2] < 0.1


def test_c_norm_domain():
    with pytest.raises(ValueError):
        c_norm(1.0)
    with pytest.raises(ValueError):
        c_norm(0.0)


def test_hurst_pair():
    p = HurstPair(0.6, 0.8)
    assert (p.d1, p.d2) == pytest.approx((0.1, 0.3))
    assert tuple(p.swapped()) == (0.8, 0.6)
    with pytest.raises(ValueError):
        HurstPair(0.5, 0.7)
    with pytest.raises(ValueError):
        HurstPair(0.7, 1.0)
