"""Avalanche-photodiode front end: integrate-and-dump statistics.

The receiver photocurrent is integrated over the ISI-free and ISI-present
intervals of each block.  For an ideal integrator the outputs are exactly
Gaussian with signal-dependent variance:

    over an interval I:  Normal( G * E_I,  sigma_sh^2 * E_I + sigma_th^2 * |I| )

where E_I = integral of |r(t)|^2 over I, G = M R is the enhanced
responsivity, sigma_sh^2 = e M^2 F R is the two-sided shot-noise power
spectral density per watt, and sigma_th^2 = 2 k T / R_L is the thermal PSD.
Dark current, intensity noise, and quantization are negligible here and are
not modeled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import e as _ELEMENTARY_CHARGE
from scipy.constants import k as _BOLTZMANN

from .waveform import SampledField

__all__ = [
    "ApdParams",
    "NoiseModel",
    "Observation",
    "excess_noise_factor",
    "build_noise_model",
    "analytic_moments",
    "detect_analytic",
    "interval_integrals",
    "field_moments",
    "detect_field",
    "draw_observations",
]


def excess_noise_factor(gain: float, k_factor: float) -> float:
    """McIntyre excess noise  F = k M + (1 - k)(2 - 1/M)  of an APD."""
    if gain < 1.0:
        raise ValueError("avalanche gain must be at least 1")
    return k_factor * gain + (1.0 - k_factor) * (2.0 - 1.0 / gain)


@dataclass(frozen=True)
class ApdParams:
    """Physical receiver parameters.

    Defaults describe the reference receiver used throughout: a 10 GBd-class
    APD at 300 K with gain 20, ionization ratio 0.6, unit-gain responsivity
    0.5 A/W (enhanced responsivity 10 A/W), and a 15 ohm load.
    """

    temperature: float = 300.0       # K
    load_resistance: float = 15.0    # ohm
    gain: float = 20.0               # avalanche gain M
    k_factor: float = 0.6            # ionization ratio
    responsivity: float = 0.5        # unit-gain responsivity, A/W

    def __post_init__(self):
        if min(self.temperature, self.load_resistance, self.responsivity) <= 0.0:
            raise ValueError("temperature, load resistance, responsivity must be positive")
        if self.gain < 1.0:
            raise ValueError("avalanche gain must be at least 1")
        if not 0.0 <= self.k_factor <= 1.0:
            raise ValueError("ionization ratio must lie in [0, 1]")

    @property
    def excess_noise(self) -> float:
        return excess_noise_factor(self.gain, self.k_factor)


@dataclass(frozen=True)
class NoiseModel:
    """Derived detection parameters: shot PSD per watt, thermal PSD, mean gain."""

    sigma_sh_sq: float   # A^2/(Hz W): multiply by optical power for shot PSD
    sigma_th_sq: float   # A^2/Hz
    signal_gain: float   # A/W

    def __post_init__(self):
        if min(self.sigma_sh_sq, self.sigma_th_sq, self.signal_gain) < 0.0:
            raise ValueError("noise model parameters must be nonnegative")


def build_noise_model(p: ApdParams) -> NoiseModel:
    """Shot PSD e M^2 F R, thermal PSD 2 k T / R_L, signal gain M R."""
    return NoiseModel(
        sigma_sh_sq=_ELEMENTARY_CHARGE * p.gain**2 * p.excess_noise * p.responsivity,
        sigma_th_sq=2.0 * _BOLTZMANN * p.temperature / p.load_resistance,
        signal_gain=p.gain * p.responsivity,
    )


@dataclass
class Observation:
    """Integrated detector outputs in ampere-seconds: y over the n ISI-free
    intervals, z over the n-1 overlap intervals."""

    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        if self.z.shape[-1] != self.y.shape[-1] - 1:
            raise ValueError("need one fewer overlap output than symbol outputs")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.z))):
            raise ValueError("observation entries must be finite")


def analytic_moments(block, beta: float, T: float, nm: NoiseModel):
    """Exact Gaussian parameters of the back-to-back observation of ``block``.

    Returns (y_mean, y_var, z_mean, z_var).  ``block`` may carry leading batch
    dimensions; the moments have closed forms

        y_k ~ N( G a2 (1-b) T |x_k|^2,  (1-b) T (a2 |x_k|^2 s_sh + s_th) )
        z_l ~ N( G a2 b T psi_l,        b T (a2 psi_l s_sh + s_th) )

    with a2 = alpha^2 = 4/(4-beta) and psi_l the overlap kernel of adjacent
    symbols.
    """
    x = np.asarray(block, dtype=complex)
    alpha_sq = 4.0 / (4.0 - beta)
    mag = alpha_sq * np.abs(x) ** 2
    ps = alpha_sq * (0.25 * np.abs(x[..., :-1] + x[..., 1:]) ** 2
                     + 0.125 * np.abs(x[..., :-1] - x[..., 1:]) ** 2)
    wy = (1.0 - beta) * T
    wz = beta * T
    y_mean = nm.signal_gain * wy * mag
    y_var = wy * (mag * nm.sigma_sh_sq + nm.sigma_th_sq)
    z_mean = nm.signal_gain * wz * ps
    z_var = wz * (ps * nm.sigma_sh_sq + nm.sigma_th_sq)
    return y_mean, y_var, z_mean, z_var


def draw_observations(moments, rng: np.random.Generator, size: int | None = None):
    """Draw independent Gaussian observations from precomputed moments.

    ``moments`` is the (y_mean, y_var, z_mean, z_var) tuple; ``size`` adds a
    leading batch axis.  Returns (y, z) arrays.
    """
    y_mean, y_var, z_mean, z_var = moments
    if size is not None:
        y_mean = np.broadcast_to(y_mean, (size,) + np.shape(y_mean))
        z_mean = np.broadcast_to(z_mean, (size,) + np.shape(z_mean))
        y_var = np.broadcast_to(y_var, (size,) + np.shape(y_var))
        z_var = np.broadcast_to(z_var, (size,) + np.shape(z_var))
    y = rng.normal(y_mean, np.sqrt(y_var))
    z = rng.normal(z_mean, np.sqrt(z_var))
    return y, z


def detect_analytic(block, beta: float, T: float, nm: NoiseModel,
                    rng: np.random.Generator) -> Observation:
    """One noisy observation of a back-to-back block (received field equals
    the transmitted field; any link loss must already be folded into the
    symbol amplitudes).  All 2n-1 outputs are drawn independently."""
    y, z = draw_observations(analytic_moments(block, beta, T, nm), rng)
    return Observation(y, z)


def interval_integrals(field: SampledField, intervals) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoidal integrals of |r(t)|^2 over each (a, b) interval.

    Interval endpoints that fall between samples are handled by linear
    interpolation of the sampled power.  Returns (integrals, lengths).

    Raises
    ------
    ValueError
        If an interval reaches outside the sampled support.
    """
    intervals = np.asarray(intervals, dtype=float)
    if intervals.size == 0:
        return np.zeros(0), np.zeros(0)
    if intervals.ndim != 2 or intervals.shape[1] != 2:
        raise ValueError("intervals must be an (m, 2) array of (start, end) pairs")
    power = np.abs(field.samples) ** 2
    slack = 1e-9 * field.dt
    if intervals.min() < field.t0 - slack or intervals.max() > field.t_end + slack:
        raise ValueError("interval reaches outside the sampled field support")
    # cumulative trapezoid at sample points, then linear-interpolated tails
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (power[1:] + power[:-1]) * field.dt)))
    pos = np.clip((intervals - field.t0) / field.dt, 0.0, power.size - 1.0)
    base = np.minimum(pos.astype(np.int64), power.size - 2)
    frac = pos - base
    p0 = power[base]
    p1 = power[base + 1]
    cum_at = cum[base] + field.dt * (p0 * frac + 0.5 * (p1 - p0) * frac**2)
    return cum_at[:, 1] - cum_at[:, 0], intervals[:, 1] - intervals[:, 0]


def field_moments(field: SampledField, y_intervals, z_intervals, nm: NoiseModel):
    """Gaussian observation parameters for an arbitrary received field.

    Means are G times the interval power integrals; variances add the shot
    term (PSD per watt times integrated power) and the thermal term (PSD
    times interval length).  The field must be sampled densely enough for
    trapezoidal quadrature, at least 64 samples per symbol period.
    """
    ey, ly = interval_integrals(field, y_intervals)
    ez, lz = interval_integrals(field, z_intervals)
    return (
        nm.signal_gain * ey,
        ey * nm.sigma_sh_sq + ly * nm.sigma_th_sq,
        nm.signal_gain * ez,
        ez * nm.sigma_sh_sq + lz * nm.sigma_th_sq,
    )


def detect_field(field: SampledField, y_intervals, z_intervals, nm: NoiseModel,
                 rng: np.random.Generator) -> Observation:
    """One noisy observation of an arbitrary received field (e.g. after fiber
    propagation), with per-interval statistics from quadrature."""
    y, z = draw_observations(field_moments(field, y_intervals, z_intervals, nm), rng)
    return Observation(y, z)
