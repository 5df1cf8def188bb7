"""Shaped drive envelopes: square, generalized Gaussian, and derivative-
supplemented (DRAG-style) waveforms with exact spectral nulls.

The generalized Gaussian of duration T,

    eps0(t) = A * [exp(-(t-T/2)^2 / 2 sigma^2) - exp(-(T/2)^2 / 2 sigma^2)]^(N+1),

vanishes together with its first N derivatives at t = 0 and t = T.  Adding
even derivatives,

    eps_x(t) = eps0(t) + sum_k alpha_{2k} d^{2k} eps0 / dt^{2k},   k = 1..N/2,

multiplies the finite Fourier transform S(eps0, delta) by the polynomial
q(delta) = 1 + sum_k alpha_{2k} (-1)^k delta^{2k}, so choosing the alphas as
elementary symmetric polynomials of 1/delta_j^2 places exact spectral zeros at
the m = N/2 requested frequencies delta_j.  All derivatives are evaluated in
closed form (binomial expansion into pure Gaussians times Hermite
polynomials); nothing in the production path is numerically differentiated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite as _herm
from scipy.integrate import quad
from scipy.special import eval_hermite

from .errors import ConfigError, SpectrumError

TWO_PI = 2.0 * math.pi

PULSE_KINDS = ("square", "gaussian", "drag")


@dataclass(frozen=True)
class PulseShape:
    """Immutable description of one shaped envelope.

    ``derivative_order`` is N = 2m: how many derivatives of the base envelope
    vanish at both ends (which legitimizes the spectral identities), and twice
    the number of spectral nulls a drag shape carries.  The full drag waveform
    still vanishes in value at the edges, but not in slope.  ``amplitude`` is
    the calibrated prefactor A (rad/ns) realizing the signed pulse area;
    ``amp_scale`` is an extra multiplicative trim on top of the calibration.
    """

    kind: str
    duration: float                       # T (ns)
    amplitude: float = 0.0                # A (rad/ns)
    area: float = 0.0                     # theta (rad), sign carried by amplitude
    sigma: float = 0.0                    # Gaussian width (ns); 0 -> 2T/3
    derivative_order: int = 0             # N = 2m (even)
    drag_coeffs: tuple[float, ...] = ()   # alpha_2, alpha_4, ... (ns^2, ns^4, ...)
    null_frequencies: tuple[float, ...] = ()  # delta_1..delta_m (rad/ns)
    detuning: float = 0.0                 # constant drive offset Lambda (rad/ns)
    amp_scale: float = 1.0                # dimensionless trim s

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ConfigError(f"unknown pulse kind {self.kind!r}")
        if not (self.duration > 0.0 and math.isfinite(self.duration)):
            raise ConfigError("pulse duration must be positive")
        if self.derivative_order < 0 or self.derivative_order % 2:
            raise ConfigError("derivative_order must be an even non-negative integer")
        if self.kind == "drag" and len(self.drag_coeffs) != self.derivative_order // 2:
            raise ConfigError("drag shape needs derivative_order/2 coefficients")
        if self.kind != "square" and self.sigma == 0.0:
            object.__setattr__(self, "sigma", 2.0 * self.duration / 3.0)

    @property
    def scaled_amplitude(self) -> float:
        return self.amplitude * self.amp_scale


def drag_coefficients(null_frequencies) -> tuple[float, ...]:
    """Derivative coefficients alpha_{2k} nulling the listed frequencies.

    alpha_{2k} is the k-th elementary symmetric polynomial in 1/delta_j^2,
    the unique choice making q(delta) = prod_j (1 - delta^2/delta_j^2) vanish
    at every requested delta_j.  Frequencies must be nonzero with pairwise
    distinct magnitudes (higher-multiplicity nulls are not supported).
    """
    deltas = tuple(float(d) for d in null_frequencies)
    if not deltas:
        raise ConfigError("need at least one null frequency")
    if any(d == 0.0 or not math.isfinite(d) for d in deltas):
        raise ConfigError("null frequencies must be finite and nonzero")
    mags = sorted(abs(d) for d in deltas)
    for lo, hi in zip(mags, mags[1:]):
        if math.isclose(lo, hi, rel_tol=1e-12):
            raise ConfigError(
                "null frequencies must have pairwise distinct magnitudes; "
                f"got |delta| = {lo:.6g} twice"
            )
    inv_sq = [1.0 / d**2 for d in deltas]
    # elementary symmetric polynomials e_1..e_m via the product recurrence
    elem = [1.0] + [0.0] * len(inv_sq)
    for x in inv_sq:
        for k in range(len(inv_sq), 0, -1):
            elem[k] += x * elem[k - 1]
    return tuple(elem[1:])


def null_polynomial(shape: PulseShape, delta) -> np.ndarray | float:
    """q(delta) = 1 + sum_k alpha_{2k} (-1)^k delta^{2k}; S_drag = q * S_base."""
    delta = np.asarray(delta, dtype=float)
    out = np.ones_like(delta)
    for k, alpha in enumerate(shape.drag_coeffs, start=1):
        out = out + alpha * (-1.0) ** k * delta ** (2 * k)
    return out if out.ndim else float(out)


# -- generalized Gaussian internals -----------------------------------------

@lru_cache(maxsize=256)
def _binomial_terms(duration, sigma, order):
    """Expansion of [u(t) - c0]^(N+1) into pure Gaussians.

    Returns (c0_const, terms) with terms = ((c_j, a_j), ...) for j = 1..N+1,
    where u^j = exp(-a_j x^2), x = t - T/2, and c0_const is the j = 0 constant.
    """
    c0 = math.exp(-duration**2 / (8.0 * sigma**2))
    npow = order + 1
    terms = []
    for j in range(1, npow + 1):
        cj = math.comb(npow, j) * (-c0) ** (npow - j)
        terms.append((cj, j / (2.0 * sigma**2)))
    return (-c0) ** npow, tuple(terms)


def _hermite_monomial(k: int) -> np.ndarray:
    """Monomial coefficients of the physicists' Hermite polynomial H_k."""
    return _herm.herm2poly([0.0] * k + [1.0])


@lru_cache(maxsize=256)
def _fast_eval_data(duration, sigma, order, drag_coeffs):
    """Per-Gaussian monomial polynomials for the combined drag waveform.

    For each j the bracket 1 + sum_k alpha_{2k} a_j^k H_{2k}(sqrt(a_j) x) is
    expanded into a plain polynomial in x, so evaluation costs one exp and one
    Horner step per j.
    """
    const, terms = _binomial_terms(duration, sigma, order)
    degree = 2 * len(drag_coeffs)
    polys = []
    exps = []
    for cj, aj in terms:
        coeffs = np.zeros(degree + 1)
        coeffs[0] = 1.0
        for k, alpha in enumerate(drag_coeffs, start=1):
            herm = _hermite_monomial(2 * k)
            scale = np.sqrt(aj) ** np.arange(2 * k + 1)
            coeffs[: 2 * k + 1] += alpha * aj**k * herm * scale
        polys.append(cj * coeffs[::-1])  # np.polyval ordering (highest first)
        exps.append(aj)
    return const, tuple(exps), tuple(polys)


def _eval_shaped(shape: PulseShape, t, drag: bool):
    const, exps, polys = _fast_eval_data(
        shape.duration, shape.sigma, shape.derivative_order,
        shape.drag_coeffs if drag else (),
    )
    t = np.asarray(t, dtype=float)
    x = t - 0.5 * shape.duration
    out = np.full_like(x, const)
    for aj, poly in zip(exps, polys):
        out += np.polyval(poly, x) * np.exp(-aj * x * x)
    out *= shape.scaled_amplitude
    inside = (t >= 0.0) & (t <= shape.duration)
    out = np.where(inside, out, 0.0)
    return out if out.ndim else float(out)


def gaussian_envelope(shape: PulseShape, t):
    """Generalized-Gaussian base envelope at time t (zero outside [0, T])."""
    if shape.kind == "square":
        raise ConfigError("gaussian_envelope needs a gaussian or drag shape")
    return _eval_shaped(shape, t, drag=False)


def envelope_derivative(shape: PulseShape, t, order: int):
    """Exact order-th time derivative of the generalized Gaussian base.

    Closed form: each binomial term exp(-a_j x^2) differentiates to
    (-1)^k a_j^(k/2) H_k(sqrt(a_j) x) exp(-a_j x^2).  Orders up to N are
    guaranteed to vanish at t = 0 and t = T; higher orders are legal but lose
    that guarantee.
    """
    if order < 0:
        raise ConfigError("derivative order must be non-negative")
    const, terms = _binomial_terms(shape.duration, shape.sigma, shape.derivative_order)
    t = np.asarray(t, dtype=float)
    x = t - 0.5 * shape.duration
    out = np.full_like(x, const if order == 0 else 0.0)
    sign = -1.0 if order % 2 else 1.0
    for cj, aj in terms:
        root = math.sqrt(aj)
        out += cj * sign * root**order * eval_hermite(order, root * x) * np.exp(-aj * x * x)
    out *= shape.scaled_amplitude
    inside = (t >= 0.0) & (t <= shape.duration)
    out = np.where(inside, out, 0.0)
    return out if out.ndim else float(out)


def drag_envelope(shape: PulseShape, t):
    """Base envelope plus its coefficient-weighted even derivatives."""
    if shape.kind != "drag":
        raise ConfigError("drag_envelope needs a drag shape")
    if not shape.drag_coeffs:
        raise ConfigError("drag shape has no coefficients")
    return _eval_shaped(shape, t, drag=True)


def square_envelope(shape: PulseShape, t):
    """Constant theta/T inside the open interval (0, T), zero outside."""
    t = np.asarray(t, dtype=float)
    value = shape.area / shape.duration * shape.amp_scale
    out = np.where((t > 0.0) & (t < shape.duration), value, 0.0)
    return out if out.ndim else float(out)


def envelope(shape: PulseShape, t):
    """Evaluate any shape's envelope at time t."""
    if shape.kind == "square":
        return square_envelope(shape, t)
    if shape.kind == "drag":
        return drag_envelope(shape, t)
    return gaussian_envelope(shape, t)


def envelope_fn(shape: PulseShape):
    """Vectorized callable t -> envelope value, for propagators and exports."""
    return lambda t: envelope(shape, t)


# -- areas and calibration ---------------------------------------------------

def _base_integral(shape: PulseShape) -> float:
    """Integral of the unit-amplitude base envelope over [0, T]."""
    if shape.kind == "square":
        return shape.duration
    const, terms = _binomial_terms(shape.duration, shape.sigma, shape.derivative_order)

    def base(t):
        x = t - 0.5 * shape.duration
        tot = const
        for cj, aj in terms:
            tot += cj * math.exp(-aj * x * x)
        return tot

    value, err = quad(base, 0.0, shape.duration, epsabs=1e-14, epsrel=1e-13, limit=200)
    if abs(value) < 1e3 * max(err, 1e-300):
        raise ConfigError("base envelope integrates to zero; cannot calibrate")
    return value


def calibrate_area(shape: PulseShape, theta: float) -> PulseShape:
    """Set the amplitude so the envelope integrates to theta (times amp_scale).

    The derivative terms of a drag shape integrate to boundary values, which
    vanish, so calibration against the base integral is exact for drag too.
    """
    if theta == 0.0 or not math.isfinite(theta):
        raise ConfigError("pulse area must be nonzero and finite")
    if shape.kind == "square":
        return replace(shape, amplitude=theta / shape.duration, area=theta)
    integral = _base_integral(shape)
    return replace(shape, amplitude=theta / integral, area=theta)


def pulse_area(shape: PulseShape) -> float:
    """Quadrature of the envelope as evaluated (amplitude and trim included)."""
    fn = envelope_fn(shape)
    value, _ = quad(fn, 0.0, shape.duration, epsabs=1e-13, epsrel=1e-12, limit=400)
    return value


# -- shape factories ----------------------------------------------------------

def square_shape(duration, area, amp_scale=1.0, detuning=0.0) -> PulseShape:
    return calibrate_area(
        PulseShape(kind="square", duration=float(duration), amp_scale=amp_scale,
                   detuning=detuning),
        area,
    )


def gaussian_shape(duration, area, derivative_order=2, sigma=None,
                   amp_scale=1.0, detuning=0.0) -> PulseShape:
    return calibrate_area(
        PulseShape(kind="gaussian", duration=float(duration),
                   sigma=0.0 if sigma is None else float(sigma),
                   derivative_order=int(derivative_order),
                   amp_scale=amp_scale, detuning=detuning),
        area,
    )


def drag_shape(duration, area, null_frequencies, sigma=None,
               amp_scale=1.0, detuning=0.0) -> PulseShape:
    """Drag shape with N = 2m chosen from the m requested null frequencies."""
    nulls = tuple(float(d) for d in null_frequencies)
    coeffs = drag_coefficients(nulls)
    return calibrate_area(
        PulseShape(kind="drag", duration=float(duration),
                   sigma=0.0 if sigma is None else float(sigma),
                   derivative_order=2 * len(nulls),
                   drag_coeffs=coeffs, null_frequencies=nulls,
                   amp_scale=amp_scale, detuning=detuning),
        area,
    )


def peak_amplitude(shape: PulseShape, samples: int = 2001) -> float:
    """Max |envelope| on a dense grid; feasibility check for hardware limits."""
    t = np.linspace(0.0, shape.duration, samples)
    return float(np.max(np.abs(envelope(shape, t))))


# -- finite Fourier transform -------------------------------------------------

def spectrum(f, delta: float, duration: float, peak: float | None = None) -> complex:
    """S(f, delta) = integral_0^T f(t) exp(i delta t) dt by adaptive quadrature.

    Oscillatory-weight (QAWO) quadrature is used once the window spans several
    oscillation periods; below that, plain adaptive quadrature of the weighted
    integrand is both cheaper and better conditioned.  Absolute tolerance is
    1e-12 * peak * T, with ``peak`` estimated from samples of f when not
    supplied.  Raises SpectrumError with the achieved tolerance when the
    quadrature reports a larger error.
    """
    if peak is None:
        t = np.linspace(0.0, duration, 513)
        peak = float(np.max(np.abs(np.asarray(f(t), dtype=float))))
    epsabs = 1e-12 * max(peak * duration, 1e-30)
    cycles = abs(delta) * duration / TWO_PI
    limit = max(100, int(abs(delta) * duration / math.pi) + 50)
    if cycles <= 8.0:
        re, re_err = quad(lambda t: f(t) * math.cos(delta * t), 0.0, duration,
                          epsabs=epsabs, epsrel=1e-12, limit=limit)
        if delta == 0.0:
            im, im_err = 0.0, 0.0
        else:
            im, im_err = quad(lambda t: f(t) * math.sin(delta * t), 0.0, duration,
                              epsabs=epsabs, epsrel=1e-12, limit=limit)
    else:
        re, re_err = quad(f, 0.0, duration, weight="cos", wvar=delta,
                          epsabs=epsabs, limit=limit)
        im, im_err = quad(f, 0.0, duration, weight="sin", wvar=delta,
                          epsabs=epsabs, limit=limit)
    achieved = max(re_err, im_err)
    if achieved > 50.0 * epsabs:
        raise SpectrumError(
            f"spectrum quadrature at delta={delta:.6g} rad/ns achieved only "
            f"{achieved:.3e} (requested {epsabs:.3e})"
        )
    return complex(re, im)


def shape_spectrum(shape: PulseShape, delta: float) -> complex:
    return spectrum(envelope_fn(shape), delta, shape.duration,
                    peak=peak_amplitude(shape))


# -- delimited exports --------------------------------------------------------

def export_waveform(shape: PulseShape, path, samples: int = 1001) -> None:
    """Write t_ns, amplitude_rad_per_ns rows at a fixed sample rate."""
    t = np.linspace(0.0, shape.duration, samples)
    values = np.atleast_1d(envelope(shape, t))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_ns", "amplitude_rad_per_ns"])
        for ti, vi in zip(t, values):
            writer.writerow([f"{ti:.12g}", f"{vi:.12g}"])


def export_spectrum(shape: PulseShape, deltas, path) -> None:
    """Write delta_GHz, abs_S, re_S, im_S rows over the requested grid."""
    fn = envelope_fn(shape)
    peak = peak_amplitude(shape)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta_GHz", "abs_S", "re_S", "im_S"])
        for delta in deltas:
            s = spectrum(fn, float(delta), shape.duration, peak=peak)
            writer.writerow([
                f"{delta / TWO_PI:.12g}", f"{abs(s):.12g}",
                f"{s.real:.12g}", f"{s.imag:.12g}",
            ])
