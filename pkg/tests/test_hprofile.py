import numpy as np
import pytest
from hypothesis import given, strategies as st

from mfinvariance.errors import UnsupportedProfileError
from mfinvariance.hprofile import HurstProfile, constant, linear_clamped, piecewise_linear, sinusoidal

times = st.floats(0.0, 50.0)


def test_constant():
    h = constant(0.75)
    assert h(3.0) == 0.75
    assert h.derivative(1.0) == 0.0
    assert (h.a, h.b) == (0.75, 0.75)


@given(times)
def test_sinusoid_in_range(t):
    h = sinusoidal(0.75, 0.15)
    assert 0.6 - 1e-15 <= h(t) <= 0.9 + 1e-15


def test_sinusoid_value_and_derivative():
    h = sinusoidal(0.75, 0.15)
    assert h(1.0) == pytest.approx(0.75 + 0.15 * np.sin(1.0), rel=1e-15)
    assert h(1.0) == pytest.approx(0.8762, abs=1e-4)
    step = 1e-5
    fd = (h(1.0 + step) - h(1.0 - step)) / (2 * step)
    assert abs(fd - h.derivative(1.0)) <= h.second_derivative_bound() * step ** 2


@given(times)
def test_linear_clamped_range(t):
    h = linear_clamped(0.55, 0.4, 0.55, 0.95)
    assert 0.55 <= h(t) <= 0.95


def test_linear_clamped_breakpoints_and_derivative():
    h = linear_clamped(0.55, 0.4, 0.55, 0.95)
    np.testing.assert_allclose(h.breakpoints(), [1.0])
    with pytest.raises(UnsupportedProfileError):
        h.derivative(0.5)
    assert not h.is_smooth


def test_piecewise_linear():
    h = piecewise_linear([[0, 0.6], [1, 0.8], [2, 0.7]])
    assert h(0.5) == pytest.approx(0.7)
    assert h(5.0) == pytest.approx(0.7)
    assert h.derivative(0.5) == pytest.approx(0.2)
    with pytest.raises(UnsupportedProfileError):
        h.derivative(1.0)
    assert h.min_on(0.5, 2.0) == pytest.approx(0.7)


@pytest.mark.parametrize("bad", [
    dict(kind="constant", params={"value": 0.5}),
    dict(kind="constant", params={"value": 1.0}),
    dict(kind="sinusoidal", params={"mean": 0.75, "amplitude": 0.3}),
    dict(kind="linear-clamped", params={"start": 0.6, "slope": 0.1}),
    dict(kind="linear-clamped", params={"start": 0.6, "slope": 0.1}, a=0.4, b=0.9),
    dict(kind="piecewise-linear", params={"knots": [[1, 0.6], [0, 0.7]]}),
    dict(kind="wavelet", params={}),
])
def test_invalid_profiles(bad):
    with pytest.raises(ValueError):
        HurstProfile(**bad)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        constant(0.7)(-0.1)


@given(st.floats(0.0, 5.0), st.floats(0.01, 3.0))
def test_min_on_sinusoid(lo, width):
    h = sinusoidal(0.75, 0.15, frequency=2.0, phase=0.3)
    dense = np.min(h(np.linspace(lo, lo + width, 20001)))
    assert h.min_on(lo, lo + width) <= dense + 1e-12
    assert h.min_on(lo, lo + width) >= dense - 1e-6


@pytest.mark.parametrize("h", [constant(0.7), sinusoidal(0.75, 0.15, 2.0, 0.1),
                               linear_clamped(0.55, 0.4, 0.55, 0.95),
                               piecewise_linear([[0, 0.6], [1, 0.8]])])
def test_dict_round_trip(h):
    assert HurstProfile.from_dict(h.to_dict()) == h
