"""Intensity modulation and the delay-divide receiver chain.

Transmit side: an OOK bitstream becomes the modulator drive, a DC bias
plus a small swing, held one bit period per bit.

Receive side, in pipeline order: optical splitter and photodetector into a
load resistor (optional additive Gaussian noise), anti-alias lowpass, ADC
(nearest-sample pick, clip, floor quantization), zero-order-hold
reconstruction back to the simulation rate, delay by one circulation
period and divide, a second lowpass, then symbol-rate sampling with an
exhaustive phase search and per-segment mean thresholding.  Dividing the
received power by its one-round-trip-old copy cancels the accumulated
echo product and leaves the static loss times the round-trip gain times
the modulator drive of half a period ago, which is what the decision
stage slices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps_signal

from .gain import LIGHT_SPEED
from .waveform import Waveform

DENOMINATOR_FLOOR_V = 1e-12


@dataclass(frozen=True)
class ModulationConfig:
    bit_rate: float = 1e9
    p_bias: float = 0.98
    bits: tuple[int, ...] = ()

    def __post_init__(self):
        if self.bit_rate <= 0:
            raise ValueError("bit_rate must be positive")
        if not 0.0 <= self.p_bias <= 1.0:
            raise ValueError("p_bias must be in [0, 1]")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")


@dataclass(frozen=True)
class FilterSpec:
    passband_edge: float = 1e9
    stopband_edge: float = 1.2e9
    attenuation_db: float = 40.0

    def __post_init__(self):
        if not 0 < self.passband_edge < self.stopband_edge:
            raise ValueError("filter edges must satisfy 0 < pass < stop")
        if self.attenuation_db <= 0:
            raise ValueError("attenuation must be positive")


@dataclass(frozen=True)
class DemodConfig:
    """Receiver-chain parameters."""

    split_ratio: float = 0.1
    responsivity: float = 0.6
    r_load: float = 1.0
    lpf1: FilterSpec = field(default_factory=FilterSpec)
    lpf2: FilterSpec = field(default_factory=FilterSpec)
    t_adc: float = 5e-10
    adc_bits: int = 10
    v_max: float = 2.5
    n_c: int | None = None
    distance_hint: float | None = None
    segment_len: int = 500
    sigma_n2: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError("split_ratio must be in (0, 1)")
        if self.responsivity <= 0 or self.r_load <= 0:
            raise ValueError("responsivity and r_load must be positive")
        if self.t_adc <= 0:
            raise ValueError("t_adc must be positive")
        if self.adc_bits < 1:
            raise ValueError("adc_bits must be at least 1")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")
        if self.segment_len < 2:
            raise ValueError("segment_len must be at least 2")
        if self.sigma_n2 < 0:
            raise ValueError("sigma_n2 must be non-negative")
        if self.n_c is None and self.distance_hint is None:
            raise ValueError("need n_c or a distance hint")


def random_bits(n: int, seed: int) -> tuple[int, ...]:
    rng = np.random.default_rng(seed)
    return tuple(int(b) for b in rng.integers(0, 2, n))


def make_control_signal(cfg: ModulationConfig, dt: float,
                        duration: float) -> Waveform:
    """NRZ modulator drive s = (1 - p) x + p over the given duration.

    Bits are held one bit period each; past the end of the bitstream the
    drive rests at the bias.
    """
    sps = int(round(1.0 / (cfg.bit_rate * dt)))
    if sps < 2:
        raise ValueError("bit period shorter than two samples")
    n = int(round(duration / dt))
    x = np.zeros(n)
    for k, bit in enumerate(cfg.bits):
        if k * sps >= n:
            break
        x[k * sps:(k + 1) * sps] = bit
    return Waveform((1.0 - cfg.p_bias) * x + cfg.p_bias, dt, "", 0.0)


def photodetect(p_out: Waveform, cfg: DemodConfig,
                seed: int | None = None) -> Waveform:
    """Split, detect, and load: V = r rho R_load P plus seeded noise."""
    if np.any(p_out.samples < 0):
        raise ValueError("negative optical power")
    v = cfg.split_ratio * cfg.responsivity * cfg.r_load * p_out.samples
    if cfg.sigma_n2 > 0.0:
        rng = np.random.default_rng(seed)
        v = v + rng.normal(0.0, math.sqrt(cfg.sigma_n2), size=len(v))
    return Waveform(v, p_out.dt, "V", p_out.t0)


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray
    fs: float
    method: str

    @property
    def group_delay(self) -> int:
        """Samples of delay introduced by the linear-phase taps."""
        return (len(self.taps) - 1) // 2


_design_cache: dict = {}


def design_lowpass(spec: FilterSpec, fs: float) -> FirFilter:
    """Equiripple linear-phase FIR meeting the spec at sample rate fs.

    The tap count starts at the standard estimate and grows until the
    stopband target is met; if the equiripple design fails to converge a
    Kaiser-window design takes over.  Designs are memoized; at simulator
    sample rates they run to thousands of taps.
    """
    cached = _design_cache.get((spec, fs))
    if cached is not None:
        return cached
    fir = _design_lowpass(spec, fs)
    _design_cache[(spec, fs)] = fir
    return fir


def _design_lowpass(spec: FilterSpec, fs: float) -> FirFilter:
    if spec.stopband_edge >= 0.5 * fs:
        raise ValueError("stopband edge at or above Nyquist")
    width = spec.stopband_edge - spec.passband_edge
    numtaps = int(math.ceil(spec.attenuation_db * fs / (22.0 * width))) | 1
    for _ in range(8):
        try:
            taps = sps_signal.remez(
                numtaps, [0.0, spec.passband_edge, spec.stopband_edge,
                          0.5 * fs], [1.0, 0.0], fs=fs)
        except Exception:
            break
        if _stopband_ok(taps, spec, fs):
            return FirFilter(taps, fs, "remez")
        numtaps = int(numtaps * 1.2) | 1
    n, beta = sps_signal.kaiserord(spec.attenuation_db + 5.0,
                                   width / (0.5 * fs))
    taps = sps_signal.firwin(n | 1,
                             0.5 * (spec.passband_edge + spec.stopband_edge),
                             window=("kaiser", beta), fs=fs)
    if not _stopband_ok(taps, spec, fs):
        raise ValueError("filter spec unmeetable at this sample rate")
    return FirFilter(taps, fs, "kaiser")


def _stopband_ok(taps, spec, fs) -> bool:
    w, h = sps_signal.freqz(taps, worN=4096, fs=fs)
    stop = np.abs(h[w >= spec.stopband_edge])
    return 20.0 * math.log10(stop.max()) <= -spec.attenuation_db


def lowpass(wave: Waveform, fir: FirFilter) -> Waveform:
    """Apply the filter with its group delay compensated.

    Centered convolution of the odd-length linear-phase taps aligns the
    output with the input; the first and last group_delay samples carry
    edge transients and should be excluded downstream.
    """
    y = sps_signal.fftconvolve(wave.samples, fir.taps, mode="same")
    return Waveform(y, wave.dt, wave.unit, wave.t0)


@dataclass(frozen=True)
class AdcCapture:
    """Quantized sample-and-hold output."""

    levels: np.ndarray
    t_adc: float
    n_clipped: int
    source_dt: float
    source_len: int


def adc(wave: Waveform, cfg: DemodConfig) -> AdcCapture:
    """Sample at T_adc (nearest input sample), clip, floor-quantize.

    Clipping to [0, v_max] is silent apart from the saturation count; the
    quantizer keeps the floor of each level, so codes map to the voltages
    k v_max / 2^bits.
    """
    if cfg.t_adc < wave.dt:
        raise ValueError("t_adc below the input sample interval")
    ratio = cfg.t_adc / wave.dt
    n_out = int(math.floor((len(wave.samples) - 1) / ratio)) + 1
    idx = np.rint(np.arange(n_out) * ratio).astype(np.int64)
    idx = np.minimum(idx, len(wave.samples) - 1)
    picked = wave.samples[idx]
    clipped = np.clip(picked, 0.0, cfg.v_max)
    n_clipped = int(np.count_nonzero(clipped != picked))
    q = cfg.v_max / 2**cfg.adc_bits
    codes = np.floor(clipped / q)
    np.minimum(codes, 2**cfg.adc_bits - 1, out=codes)
    return AdcCapture(codes * q, cfg.t_adc, n_clipped, wave.dt,
                      len(wave.samples))


def zoh_upsample(capture: AdcCapture) -> Waveform:
    """Hold each ADC level until the next sample instant, on the source grid."""
    ratio = capture.t_adc / capture.source_dt
    j = np.arange(capture.source_len)
    idx = np.floor(j / ratio + 1e-9).astype(np.int64)
    idx = np.minimum(idx, len(capture.levels) - 1)
    return Waveform(capture.levels[idx], capture.source_dt, "V", 0.0)


def delay_divide(v: np.ndarray, n_c_samples: int):
    """y[n] = v[n] / v[n - n_c]; returns (y, valid).

    The first n_c_samples outputs have no past copy and are flagged as
    warm-up; denominators below the floor are flagged invalid.  Flagged
    samples hold the neutral value 1.
    """
    if n_c_samples < 1:
        raise ValueError("delay must be at least one sample")
    if n_c_samples >= len(v):
        raise ValueError("sequence shorter than the delay")
    y = np.ones_like(v)
    valid = np.zeros(len(v), dtype=bool)
    den = v[:len(v) - n_c_samples]
    ok = den > DENOMINATOR_FLOOR_V
    np.divide(v[n_c_samples:], den, out=y[n_c_samples:], where=ok)
    y[n_c_samples:][~ok] = 1.0
    valid[n_c_samples:] = ok
    return y, valid


@dataclass(frozen=True)
class BerReport:
    bits_compared: int
    errors: int
    ber: float
    phase: int
    n_c: int
    thresholds: tuple[float, ...]
    seed: int | None = None


def ber(tx_bits, rx_bits) -> float:
    if len(tx_bits) != len(rx_bits):
        raise ValueError("bitstream length mismatch")
    if len(tx_bits) == 0:
        raise ValueError("empty comparison")
    tx = np.asarray(tx_bits)
    rx = np.asarray(rx_bits)
    return float(np.count_nonzero(tx != rx)) / len(tx)


def _threshold_segments(symbols: np.ndarray, segment_len: int):
    """Per-segment mean threshold; a sample exactly at it decides 0."""
    decided = np.empty(len(symbols), dtype=np.int64)
    thresholds = []
    for i0 in range(0, len(symbols), segment_len):
        seg = symbols[i0:i0 + segment_len]
        thr = float(seg.mean())
        thresholds.append(thr)
        decided[i0:i0 + len(seg)] = seg > thr
    return decided, thresholds


def decide_bits(y: np.ndarray, valid: np.ndarray, samples_per_bit: int,
                tx_bits, tx_offset_samples: int, segment_len: int = 500):
    """Symbol decisions at the best sampling phase.

    Every integer phase within one bit period is tried; symbols map back
    to transmitted bit indices through tx_offset_samples (where bit 0 of
    the stream sits on the y grid), get thresholded per segment, and the
    phase with the lowest mismatch wins, earliest phase on ties.  Returns
    (rx_bits, tx_indices, phase, thresholds).
    """
    tx = np.asarray(tx_bits, dtype=np.int64)
    best = None
    best_rate = math.inf
    for phase in range(samples_per_bit):
        pos = np.arange(phase, len(y), samples_per_bit)
        pos = pos[valid[pos]]
        if len(pos) == 0:
            continue
        tx_idx = (pos - tx_offset_samples) // samples_per_bit
        keep = (tx_idx >= 0) & (tx_idx < len(tx))
        pos, tx_idx = pos[keep], tx_idx[keep]
        if len(pos) == 0:
            continue
        decided, thresholds = _threshold_segments(y[pos], segment_len)
        rate = np.count_nonzero(decided != tx[tx_idx]) / len(decided)
        if rate < best_rate:
            best_rate = rate
            best = (decided, tx_idx, phase, thresholds)
    if best is None:
        raise ValueError("no usable symbols (all samples invalid)")
    return best


def estimate_delay(v: np.ndarray, dt: float, hint_n_c: int, window: int,
                   lpf2: FirFilter, samples_per_bit: int, tx_bits,
                   mod_start_sample: int, segment_len: int = 500) -> int:
    """Exhaustive delay search around the hint, minimizing training BER.

    Ties resolve to the smallest delay.
    """
    if window < 0:
        raise ValueError("window must be non-negative")
    best = None
    for cand in range(max(1, hint_n_c - window), hint_n_c + window + 1):
        if cand >= len(v):
            continue
        try:
            rep, _, _ = _decide_from_divided(v, dt, cand, lpf2,
                                             samples_per_bit, tx_bits,
                                             mod_start_sample, segment_len)
        except ValueError:
            continue
        if best is None or rep.ber < best[0].ber:
            best = (rep, cand)
    if best is None:
        raise ValueError("delay search window produced no usable delay")
    return best[1]


def _decide_from_divided(v, dt, n_c, lpf2, samples_per_bit, tx_bits,
                         mod_start_sample, segment_len, seed=None):
    y, valid = delay_divide(v, n_c)
    y_f = sps_signal.fftconvolve(y, lpf2.taps, mode="same")
    valid = _valid_after(valid, n_c, lpf2)
    tx_offset = mod_start_sample + n_c // 2
    rx, tx_idx, phase, thresholds = decide_bits(
        y_f, valid, samples_per_bit, tx_bits, tx_offset, segment_len)
    tx = np.asarray(tx_bits, dtype=np.int64)[tx_idx]
    errors = int(np.count_nonzero(rx != tx))
    report = BerReport(len(rx), errors, errors / len(rx), phase, n_c,
                       tuple(thresholds), seed)
    return report, rx, y_f


@dataclass(frozen=True)
class DemodResult:
    report: BerReport
    rx_bits: np.ndarray
    y: Waveform
    n_clipped: int


def demodulate(p_out: Waveform, cfg: DemodConfig, mod: ModulationConfig,
               mod_start: float = 0.0, seed: int | None = None,
               delay_search: int = 0) -> DemodResult:
    """Run the whole receiver chain against a known transmitted stream.

    mod_start is when bit 0 reached the modulator, on the p_out timebase.
    delay_search widens the delay estimate around the configured n_c or
    the distance hint; 0 trusts the hint exactly.
    """
    dt = p_out.dt
    samples_per_bit = int(round(1.0 / (mod.bit_rate * dt)))
    if samples_per_bit < 2:
        raise ValueError("bit period shorter than two samples")
    v_pd = photodetect(p_out, cfg, seed)
    fs = 1.0 / dt
    lpf1 = design_lowpass(cfg.lpf1, fs)
    lpf2 = design_lowpass(cfg.lpf2, fs)
    v_f = lowpass(v_pd, lpf1)
    capture = adc(v_f, cfg)
    v_rec = zoh_upsample(capture)

    if cfg.n_c is not None:
        hint = cfg.n_c
    else:
        hint = int(round(2.0 * cfg.distance_hint / (LIGHT_SPEED * dt)))
    mod_start_sample = int(round((mod_start - p_out.t0) / dt))
    if delay_search > 0:
        n_c = estimate_delay(v_rec.samples, dt, hint, delay_search, lpf2,
                             samples_per_bit, mod.bits, mod_start_sample,
                             cfg.segment_len)
    else:
        n_c = hint

    rep, rx, y_f = _decide_from_divided(v_rec.samples, dt, n_c, lpf2,
                                        samples_per_bit, mod.bits,
                                        mod_start_sample, cfg.segment_len,
                                        seed)
    return DemodResult(rep, rx, Waveform(y_f, dt, "", p_out.t0),
                       capture.n_clipped)


def _valid_after(valid, n_c, lpf2):
    v = valid.copy()
    v[:n_c + len(lpf2.taps)] = False
    gd = lpf2.group_delay
    if gd > 0:
        v[-gd:] = False
    return v
