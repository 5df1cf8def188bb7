import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from rydgate import ConfigError, calibrate_area, drag_coefficients
from rydgate.pulses import (
    PulseShape,
    drag_envelope,
    drag_shape,
    envelope,
    envelope_derivative,
    envelope_fn,
    gaussian_envelope,
    gaussian_shape,
    peak_amplitude,
    pulse_area,
    shape_spectrum,
    spectrum,
    square_envelope,
    square_shape,
)

TWO_PI = 2.0 * math.pi

# S1 control-pulse null pair (GHz converted to rad/ns)
NULLS_CONTROL = (-TWO_PI * 2.961, -TWO_PI * 3.161)
NULL_TARGET = (-TWO_PI * 1.54,)


def unit_gaussian(duration=30.0, sigma=20.0, order=2):
    return PulseShape(kind="gaussian", duration=duration, amplitude=1.0,
                      sigma=sigma, derivative_order=order)


# -- generalized Gaussian -----------------------------------------------------

def test_gaussian_midpoint_value():
    # direct scalar evaluation of the defining expression
    shape = unit_gaussian()
    expected = (1.0 - math.exp(-225.0 / 800.0)) ** 3
    assert gaussian_envelope(shape, 15.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.014735027585684764, rel=1e-12)


def test_gaussian_boundaries_and_outside():
    shape = unit_gaussian()
    assert gaussian_envelope(shape, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert gaussian_envelope(shape, 30.0) == pytest.approx(0.0, abs=1e-15)
    assert gaussian_envelope(shape, -0.5) == 0.0
    assert gaussian_envelope(shape, 30.5) == 0.0


def test_gaussian_symmetry():
    shape = unit_gaussian()
    for x in (1.0, 4.5, 9.9, 14.0):
        left = gaussian_envelope(shape, 15.0 - x)
        right = gaussian_envelope(shape, 15.0 + x)
        assert left == pytest.approx(right, rel=1e-13)


def test_derivative_order_zero_matches_envelope():
    shape = unit_gaussian(order=4)
    t = np.linspace(0.0, 30.0, 61)
    np.testing.assert_allclose(envelope_derivative(shape, t, 0),
                               gaussian_envelope(shape, t), rtol=1e-13)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivative_matches_finite_differences(order):
    shape = unit_gaussian(order=4)
    t0 = 10.0  # T/3
    h = 0.05
    # central finite differences of the analytic (order-1) derivative
    lower = lambda t: envelope_derivative(shape, t, order - 1)
    fd = (lower(t0 + h) - lower(t0 - h)) / (2.0 * h)
    fd4 = (-lower(t0 + 2 * h) + 8 * lower(t0 + h) - 8 * lower(t0 - h)
           + lower(t0 - 2 * h)) / (12.0 * h)
    exact = envelope_derivative(shape, t0, order)
    assert fd4 == pytest.approx(exact, rel=1e-6)
    assert fd == pytest.approx(exact, rel=1e-2)


@pytest.mark.parametrize("order", [2, 4])
def test_boundary_derivatives_vanish(order):
    shape = unit_gaussian(order=order)
    peak = peak_amplitude(shape)
    for k in range(order + 1):
        for t in (0.0, shape.duration):
            assert abs(envelope_derivative(shape, t, k)) < 1e-12 * max(peak, 1.0)


@pytest.mark.parametrize("make", [
    lambda: calibrate_area(unit_gaussian(order=4), math.pi),
    lambda: drag_shape(18.0, 2.0 * math.pi, NULL_TARGET),
])
def test_boundary_vanishing_by_finite_differences(make):
    # central-difference estimates of derivatives 0..N of the base envelope at
    # the pulse edges, on the zero-clamped waveform, stay below 1e-8 * peak.
    # (The derivative-supplemented drag waveform itself only vanishes in
    # value: its edge slope picks up the base's order-(N+1) derivatives.)
    # The small step needs more than double precision (cancellation noise is
    # amplified by h^-k), so the stencil samples the independent
    # high-precision envelope; oracle/production agreement is checked first.
    from _oracles import mp_envelope

    shape = make()
    base = shape if shape.kind == "gaussian" else replace(
        shape, kind="gaussian", drag_coeffs=(), null_frequencies=())
    peak = peak_amplitude(shape)
    fn = envelope_fn(shape)
    for t in (0.3 * shape.duration, 0.71 * shape.duration):
        assert float(mp_envelope(shape, t)) == pytest.approx(fn(t), rel=1e-12)
    assert abs(envelope(shape, 0.0)) < 1e-10 * peak
    assert abs(envelope(shape, shape.duration)) < 1e-10 * peak

    h = 1e-7
    for t0 in (0.0, base.duration):
        f = {k: float(mp_envelope(base, t0 + k * h)) for k in (-2, -1, 0, 1, 2)}
        estimates = [
            f[0],
            (f[1] - f[-1]) / (2 * h),
            (f[1] - 2 * f[0] + f[-1]) / h**2,
            (f[2] - 2 * f[1] + 2 * f[-1] - f[-2]) / (2 * h**3),
            (f[-2] - 4 * f[-1] + 6 * f[0] - 4 * f[1] + f[2]) / h**4,
        ]
        for est in estimates[: base.derivative_order + 1]:
            assert abs(est) < 1e-8 * peak


# -- drag coefficients --------------------------------------------------------

def test_drag_coefficients_single_null():
    d1 = TWO_PI * 1.54
    coeffs = drag_coefficients((d1,))
    assert coeffs == pytest.approx((1.0 / d1**2,), rel=1e-14)


def test_drag_coefficients_two_nulls():
    d1, d2 = TWO_PI * 2.961, TWO_PI * 3.161
    a2, a4 = drag_coefficients((d1, d2))
    assert a2 == pytest.approx(1.0 / d1**2 + 1.0 / d2**2, rel=1e-14)
    assert a4 == pytest.approx(1.0 / (d1**2 * d2**2), rel=1e-14)


def test_drag_coefficients_invariances():
    d1, d2 = -TWO_PI * 2.961, TWO_PI * 3.161
    base = drag_coefficients((d1, d2))
    assert drag_coefficients((d2, d1)) == pytest.approx(base, rel=1e-14)
    assert drag_coefficients((-d1, -d2)) == pytest.approx(base, rel=1e-14)


def test_drag_coefficients_large_second_null_recovers_single():
    d1 = TWO_PI * 1.54
    a2, a4 = drag_coefficients((d1, 1e8))
    assert a2 == pytest.approx(1.0 / d1**2, rel=1e-10)
    assert abs(a4) < 1e-15  # -> 0 in the far-null limit


def test_drag_coefficients_rejections():
    with pytest.raises(ConfigError, match="distinct"):
        drag_coefficients((1.0, -1.0))
    with pytest.raises(ConfigError, match="nonzero"):
        drag_coefficients((0.0,))
    with pytest.raises(ConfigError):
        drag_coefficients(())


# -- drag envelopes -----------------------------------------------------------

def test_drag_zero_coefficients_reduce_to_gaussian():
    shape = PulseShape(kind="drag", duration=20.0, amplitude=1.0,
                       derivative_order=2, drag_coeffs=(0.0,),
                       null_frequencies=NULL_TARGET)
    gauss = PulseShape(kind="gaussian", duration=20.0, amplitude=1.0,
                       derivative_order=2)
    t = np.linspace(0.0, 20.0, 41)
    np.testing.assert_allclose(drag_envelope(shape, t),
                               gaussian_envelope(gauss, t), rtol=1e-13)


def test_drag_envelope_is_base_plus_derivatives():
    shape = drag_shape(12.5, math.pi, NULLS_CONTROL)
    t = np.linspace(0.0, 12.5, 101)
    composed = gaussian_envelope(shape, t)
    for k, alpha in enumerate(shape.drag_coeffs, start=1):
        composed = composed + alpha * envelope_derivative(shape, t, 2 * k)
    np.testing.assert_allclose(drag_envelope(shape, t), composed,
                               rtol=1e-9, atol=1e-10)


def test_drag_boundary_zero():
    shape = drag_shape(12.5, math.pi, NULLS_CONTROL)
    assert drag_envelope(shape, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert drag_envelope(shape, 12.5) == pytest.approx(0.0, abs=1e-12)


def test_drag_area_matches_base_area():
    shape = drag_shape(15.0, 2.0 * math.pi, NULL_TARGET)
    base_area, _ = quad(lambda t: gaussian_envelope(shape, t), 0.0, 15.0,
                        epsabs=1e-13, limit=200)
    full_area, _ = quad(lambda t: drag_envelope(shape, t), 0.0, 15.0,
                        epsabs=1e-13, limit=200)
    assert full_area == pytest.approx(base_area, rel=1e-9)
    assert full_area == pytest.approx(2.0 * math.pi, rel=1e-9)


def test_missing_drag_coefficients_rejected():
    with pytest.raises(ConfigError):
        PulseShape(kind="drag", duration=10.0, derivative_order=4)


# -- square -------------------------------------------------------------------

def test_square_envelope_values():
    shape = square_shape(10.0, math.pi)
    assert square_envelope(shape, 5.0) == pytest.approx(math.pi / 10.0, rel=1e-14)
    assert square_envelope(shape, -1.0) == 0.0
    assert square_envelope(shape, 11.0) == 0.0
    area, _ = quad(lambda t: square_envelope(shape, t), 0.0, 10.0)
    assert area == pytest.approx(math.pi, rel=1e-12)


# -- spectrum -----------------------------------------------------------------

def test_spectrum_at_zero_is_area():
    shape = drag_shape(15.0, 2.0 * math.pi, NULL_TARGET)
    s0 = shape_spectrum(shape, 0.0)
    assert s0.real == pytest.approx(2.0 * math.pi, rel=1e-10)
    assert s0.imag == pytest.approx(0.0, abs=1e-10)


def test_square_spectrum_closed_form():
    theta, duration = math.pi, 10.0
    shape = square_shape(duration, theta)
    for delta in (0.7, 3.3, -11.0):
        x = delta * duration / 2.0
        expected = theta * np.exp(1j * x) * math.sin(x) / x
        got = shape_spectrum(shape, delta)
        assert got == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("duration,nulls", [
    (12.5, NULLS_CONTROL),
    (25.0, NULL_TARGET),
])
def test_drag_nulls_by_quadrature(duration, nulls):
    shape = drag_shape(duration, math.pi, nulls)
    s0 = abs(shape_spectrum(shape, 0.0))
    for delta in nulls:
        assert abs(shape_spectrum(shape, delta)) < 1e-10 * s0


def test_gaussian_exceeds_drag_at_null_frequency():
    duration = 12.5
    drag = drag_shape(duration, math.pi, NULLS_CONTROL)
    gauss = gaussian_shape(duration, math.pi, derivative_order=4)
    for delta in NULLS_CONTROL:
        assert abs(shape_spectrum(gauss, delta)) > 1e3 * abs(shape_spectrum(drag, delta))


def test_spectral_suppression_ordering():
    # |S_square(delta)| > |S_gaussian(delta)| at |delta| T ~ 50, and the drag
    # value at its own null is far below both
    duration = 30.0
    delta = 50.0 / duration
    square = square_shape(duration, math.pi)
    gauss = gaussian_shape(duration, math.pi, derivative_order=4)
    drag = drag_shape(duration, math.pi, NULLS_CONTROL)
    s_square = abs(shape_spectrum(square, delta))
    s_gauss = abs(shape_spectrum(gauss, delta))
    s_drag = abs(shape_spectrum(drag, drag.null_frequencies[0]))
    assert s_square > s_gauss > s_drag


def test_spectrum_nonconvergence_raises():
    from rydgate.errors import SpectrumError

    jagged = lambda t: math.sin(1.0 / (abs(t - 7.618) + 1e-12))
    with pytest.raises(SpectrumError, match="achieved"):
        spectrum(jagged, 0.0, 20.0, peak=1.0)


# -- calibration --------------------------------------------------------------

def test_calibrate_square():
    shape = square_shape(20.0, 2.0 * math.pi)
    assert shape.amplitude == pytest.approx(math.pi / 10.0, rel=1e-14)


@pytest.mark.parametrize("kind_shape", [
    lambda: gaussian_shape(18.0, math.pi, derivative_order=4),
    lambda: drag_shape(18.0, 2.0 * math.pi, NULL_TARGET),
    lambda: square_shape(18.0, -math.pi),
])
def test_calibrated_area_round_trip(kind_shape):
    shape = kind_shape()
    assert pulse_area(shape) == pytest.approx(shape.area, rel=1e-9)


def test_negative_area_flips_amplitude():
    pos = gaussian_shape(12.0, math.pi)
    neg = gaussian_shape(12.0, -math.pi)
    assert neg.amplitude == pytest.approx(-pos.amplitude, rel=1e-14)


def test_amp_scale_scales_area():
    shape = drag_shape(16.0, 2.0 * math.pi, NULL_TARGET, amp_scale=1.03)
    assert pulse_area(shape) == pytest.approx(1.03 * 2.0 * math.pi, rel=1e-9)


def test_calibrate_rejects_zero_area():
    with pytest.raises(ConfigError):
        square_shape(10.0, 0.0)


# -- delimited exports ----------------------------------------------------------

def test_export_waveform_and_spectrum(tmp_path):
    import csv

    from rydgate.pulses import export_spectrum, export_waveform

    shape = drag_shape(14.0, math.pi, NULL_TARGET)
    wpath = tmp_path / "wave.csv"
    export_waveform(shape, wpath, samples=51)
    with open(wpath) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 51
    assert float(rows[0]["amplitude_rad_per_ns"]) == pytest.approx(0.0, abs=1e-12)

    spath = tmp_path / "spec.csv"
    export_spectrum(shape, (0.0, NULL_TARGET[0]), spath)
    with open(spath) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["delta_GHz"] for r in rows] == ["0", "-1.54"]
    assert float(rows[0]["abs_S"]) == pytest.approx(math.pi, rel=1e-9)
    assert float(rows[1]["abs_S"]) < 1e-9 * math.pi
