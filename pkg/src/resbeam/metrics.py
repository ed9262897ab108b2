"""Trace analyses: start-up transients, reopen pulses, spectral bounds.

These operate on recorded power waveforms and back both the figure presets
and the regression checks, so the definitions here are the reference ones:
a transient has settled once the trace stays inside a relative band around
its final level, the oscillation frequency is the reciprocal mean spacing
of the prominent peaks, and pulse width is measured at half maximum with
linear interpolation on the flanks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .waveform import Waveform, spectrum


@dataclass(frozen=True)
class RelaxationMetrics:
    peak_power: float
    peak_time: float
    steady_power: float
    frequency: float       # nan when fewer than two prominent peaks
    settle_time: float     # nan when the trace never settles
    ratio: float           # peak to steady; nan when steady is zero

    def settled(self) -> bool:
        return math.isfinite(self.settle_time)


def steady_level(wave: Waveform, tail_fraction: float = 0.1) -> float:
    """Mean over the trailing fraction of the trace."""
    n = max(1, int(len(wave.samples) * tail_fraction))
    return float(np.mean(wave.samples[-n:]))


def settle_time(wave: Waveform, band: float = 0.05) -> float:
    """Time after which the trace stays within +-band of its final level.

    Returns nan if the final level is zero or the last sample is already
    outside the band.
    """
    final = steady_level(wave)
    if final <= 0.0:
        return math.nan
    outside = np.abs(wave.samples - final) > band * final
    if not outside.any():
        return float(wave.t0)
    last = int(np.nonzero(outside)[0][-1])
    if last + 1 >= len(wave.samples):
        return math.nan
    return float(wave.t0 + (last + 1) * wave.dt)


def relaxation_metrics(wave: Waveform, band: float = 0.05,
                       prominence_fraction: float = 0.02) -> RelaxationMetrics:
    """Characterize a pump-on power transient."""
    x = wave.samples
    peak_idx = int(np.argmax(x))
    peak_power = float(x[peak_idx])
    steady = steady_level(wave)
    freq = math.nan
    if peak_power > 0.0:
        peaks, _props = signal.find_peaks(
            x, prominence=prominence_fraction * peak_power)
        if len(peaks) >= 2:
            spacing = float(np.mean(np.diff(peaks))) * wave.dt
            freq = 1.0 / spacing
    ratio = peak_power / steady if steady > 0.0 else math.nan
    return RelaxationMetrics(
        peak_power=peak_power,
        peak_time=float(wave.t0 + peak_idx * wave.dt),
        steady_power=steady,
        frequency=freq,
        settle_time=settle_time(wave, band),
        ratio=ratio)


@dataclass(frozen=True)
class PulseMetrics:
    peak_power: float
    peak_time: float
    fwhm: float
    n_pulses: int


def _cross_time(x: np.ndarray, i: int, j: int, level: float,
                t0: float, dt: float) -> float:
    # linear interpolation of the crossing between samples i and j
    if x[j] == x[i]:
        return t0 + j * dt
    frac = (level - x[i]) / (x[j] - x[i])
    return t0 + (i + frac) * dt


def pulse_metrics(wave: Waveform, count_fraction: float = 0.5) -> PulseMetrics:
    """Measure the dominant pulse in a trace.

    n_pulses counts excursions above count_fraction of the maximum with
    hysteresis (re-armed only after a drop below half that level), so the
    round-trip-period ripple riding on one macro pulse does not split it
    and low-level ringing afterwards is not counted.
    """
    x = wave.samples
    peak_idx = int(np.argmax(x))
    peak = float(x[peak_idx])
    if peak <= 0.0:
        return PulseMetrics(peak, float(wave.t0 + peak_idx * wave.dt),
                            math.nan, 0)
    half = 0.5 * peak
    i = peak_idx
    while i > 0 and x[i] > half:
        i -= 1
    t_rise = _cross_time(x, i, i + 1, half, wave.t0, wave.dt) \
        if x[i] <= half else float(wave.t0)
    j = peak_idx
    while j < len(x) - 1 and x[j] > half:
        j += 1
    t_fall = _cross_time(x, j - 1, j, half, wave.t0, wave.dt) \
        if x[j] <= half else float(wave.t0 + (len(x) - 1) * wave.dt)

    level = count_fraction * peak
    release = 0.5 * level
    n_pulses = 0
    armed = True
    for v in x:
        if armed and v >= level:
            n_pulses += 1
            armed = False
        elif not armed and v < release:
            armed = True
    return PulseMetrics(peak, float(wave.t0 + peak_idx * wave.dt),
                        t_fall - t_rise, n_pulses)


def spectral_energy_fraction(wave: Waveform, f_cut: float,
                             window: str = "hann") -> float:
    """Fraction of non-DC spectral energy at or below f_cut."""
    freqs, mag = spectrum(wave, window=window)
    energy = mag[1:] ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return 1.0
    below = float(np.sum(energy[freqs[1:] <= f_cut]))
    return below / total
