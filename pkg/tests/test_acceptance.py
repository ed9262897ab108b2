"""Acceptance criteria, run at full fidelity.

Eight numbered tests, each printing one summary line so a plain pytest
run shows every criterion's verdict at a glance.  The slow pieces (six
cold 0.6 ms transients, the intrusion run, the modulated traces) are
module fixtures shared across criteria; expect several minutes total.
Tolerances are pinned as module constants and never loosened at runtime.
"""
import math
from dataclasses import replace

import numpy as np
import pytest

from resbeam.cavity import (
    CavityConfig,
    DelayLine,
    IntrusionEvent,
    ModulationWindow,
    PumpPhase,
    RecordWindow,
    Scenario,
    gain_monitor,
    run,
    solve_stationary_state,
    steady_scenario,
)
from resbeam.config import load_config, manifest_text
from resbeam.gain import n2_fixed_point, pump_rate, slice_step
from resbeam.geometry import beam_radius, ray_matrix
from resbeam.metrics import (pulse_metrics, relaxation_metrics,
                             spectral_energy_fraction)
from resbeam.modem import adc, demodulate, random_bits
from resbeam.presets import modulated_trace
from resbeam.steady_state import output_power
from resbeam.waveform import Waveform

# pinned tolerances and targets
TOL_STABLE = 0.02             # stable-state power vs closed form
SUB_THRESHOLD_FLOOR = 0.02    # trickle bound, fraction of operating output
TOL_N2_ANCHOR = 1e-3
TOL_SLOPE_ANCHOR = 1e-3
TOL_SWING_ANCHOR = 5e-3
RELAX_FREQ_HZ = 50e3          # at the 60 W operating point
RELAX_FREQ_TOL = 0.20
SETTLE_LIMIT_S = 0.5e-3
DARK_LIMIT_W = 1e-2
PULSE_PEAK_W = 1493.0
PULSE_PEAK_TOL = 0.25
PULSE_WIDTH_LIMIT_S = 1e-6
GAIN_CUTOFF_HZ = 250e3
GAIN_ENERGY_FRACTION = 0.99
FEC_BER = 3.8e-3

TRANSIENT_DURATION = 6e-4
TRANSIENT_TAIL = 5e-5

ANCHOR_PHI = 5.679339e16      # photon density of a 10 W resonant beam
ANCHOR_N2 = 1.181963e24
ANCHOR_SLOPE = -5.531587e10
ANCHOR_STEP_DN2 = 6.283152e18


def _report(capsys, num, label, checks, detail=""):
    failed = [name for name, ok in checks if not ok]
    line = f"acceptance {num} {label}: {'PASS' if not failed else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    if failed:
        line += " [failing: " + ", ".join(failed) + "]"
    with capsys.disabled():
        print(line, flush=True)
    assert not failed, line


def _increasing(xs):
    return all(a < b for a, b in zip(xs, xs[1:]))


@pytest.fixture(scope="module")
def cfg():
    return load_config()


def _cavity(cfg, r_m2):
    if r_m2 == cfg.loss.r_m2:
        return cfg.cavity
    return CavityConfig(cfg.geometry, replace(cfg.loss, r_m2=r_m2),
                        cfg.medium, cfg.pump,
                        n_l=cfg.cavity.n_l, n_r=cfg.cavity.n_r)


def _theory(cfg, p_in, r_m2):
    return output_power(p_in, replace(cfg.loss, r_m2=r_m2), cfg.pump,
                        cfg.geometry.a_g, cfg.medium.i_s)


@pytest.fixture(scope="module")
def transients(cfg):
    """Cold-start output transients shared by criteria 1 and 3."""
    cells = [(20.0, 0.90), (40.0, 0.90), (60.0, 0.90), (80.0, 0.90),
             (60.0, 0.95), (60.0, 0.995)]
    out = {}
    for p_in, r_m2 in cells:
        scen = steady_scenario(TRANSIENT_DURATION, p_in, records=(
            RecordWindow(0.0, TRANSIENT_DURATION, 4096, ("p_out",)),))
        out[(p_in, r_m2)] = run(scen, _cavity(cfg, r_m2)).channel("p_out")
    return out


def _tail_mean(wave):
    tail = wave.slice_time(TRANSIENT_DURATION - TRANSIENT_TAIL,
                           TRANSIENT_DURATION)
    return float(np.mean(tail.samples))


def _stable_point(cavity, p_in, duration=20e-6, tail=8e-6):
    state = solve_stationary_state(cavity, p_in)
    scen = steady_scenario(duration, p_in, records=(
        RecordWindow(0.0, duration, 64, ("p_out",)),))
    wave = run(scen, cavity, initial_state=state).channel("p_out")
    return float(np.mean(wave.slice_time(duration - tail, duration).samples))


@pytest.fixture(scope="module")
def mod_trace(cfg):
    """Warm 1000-bit modulated run shared by criteria 6 and 7."""
    return modulated_trace(cfg, 1000)


def test_1_stable_state_output(capsys, cfg, transients):
    """Simulated stable output tracks the closed form on both sweep axes."""
    cells = [(p, 0.90) for p in (30.0, 40.0, 50.0, 60.0, 70.0, 80.0)]
    cells += [(60.0, r) for r in (0.85, 0.95, 0.995)]
    floor = SUB_THRESHOLD_FLOOR * _theory(cfg, 60.0, 0.90).p_out

    checks = []
    max_dev = 0.0
    n_lasing = 0
    for p_in, r_m2 in cells:
        if (p_in, r_m2) in transients:
            p_sim = _tail_mean(transients[(p_in, r_m2)])
        else:
            p_sim = _stable_point(_cavity(cfg, r_m2), p_in)
        theory = _theory(cfg, p_in, r_m2)
        name = f"p_in={p_in:g},r_m2={r_m2:g}"
        if theory.below_threshold:
            # the closed form clamps to zero; the simulation keeps its
            # spontaneous trickle, so bound it against the operating output
            checks.append((name + " trickle", p_sim < floor))
        else:
            dev = abs(p_sim / theory.p_out - 1.0)
            max_dev = max(max_dev, dev)
            n_lasing += 1
            checks.append((name, dev <= TOL_STABLE))
    _report(capsys, 1, "stable-state output within 2% of the closed form",
            checks, f"max deviation {max_dev:.2%} over {n_lasing} lasing "
            "cells, sub-threshold trickle bounded")


def test_2_gain_medium_anchors(capsys, cfg):
    """Rate-equation operating point hits the tabulated anchors."""
    params = replace(cfg.medium, a_g=1e-3)
    r_p = pump_rate(20.0, params)
    n2 = n2_fixed_point(ANCHOR_PHI, r_p, params)
    slope = -params.sigma * params.c * n2

    phi = 0.9 * ANCHOR_PHI
    n2_step = n2
    for _ in range(round(20e-9 / params.dt_slice)):
        _, _, n2_step = slice_step(n2_step, phi / 2, phi / 2, r_p, params)
    swing = n2_step - n2

    dev_n2 = abs(n2 / ANCHOR_N2 - 1.0)
    dev_slope = abs(slope / ANCHOR_SLOPE - 1.0)
    dev_swing = abs(swing / ANCHOR_STEP_DN2 - 1.0)
    checks = [
        ("equilibrium inversion", dev_n2 <= TOL_N2_ANCHOR),
        ("photon-density slope", dev_slope <= TOL_SLOPE_ANCHOR),
        ("20 ns inversion swing", dev_swing <= TOL_SWING_ANCHOR),
    ]
    _report(capsys, 2, "gain-medium anchors within 0.1%/0.1%/0.5%", checks,
            f"deviations {dev_n2:.2e}, {dev_slope:.2e}, {dev_swing:.2e}")


def test_3_relaxation_oscillations(capsys, transients):
    """Cold-start spike, ring-down rate, and severity orderings."""
    m = {cell: relaxation_metrics(w) for cell, w in transients.items()}
    m60 = m[(60.0, 0.90)]

    peaks = [m[(p, 0.90)].peak_power for p in (20.0, 40.0, 60.0, 80.0)]
    freqs = [m[(p, 0.90)].frequency for p in (40.0, 60.0, 80.0)]
    ratios = [m[(60.0, r)].ratio for r in (0.90, 0.95, 0.995)]

    checks = [
        ("settles inside 0.5 ms", m60.settle_time < SETTLE_LIMIT_S),
        ("frequency near 50 kHz",
         abs(m60.frequency / RELAX_FREQ_HZ - 1.0) <= RELAX_FREQ_TOL),
        ("peak grows with pump", _increasing(peaks)),
        ("frequency grows with pump", _increasing(freqs)),
        ("severity grows with output coupling", _increasing(ratios)),
    ]
    _report(capsys, 3, "relaxation oscillations", checks,
            f"60 W: peak {m60.peak_power:.1f} W, "
            f"{m60.frequency / 1e3:.1f} kHz, settles "
            f"{m60.settle_time * 1e3:.2f} ms")


def test_4_beam_interruption(capsys, cfg):
    """Blockage extinguishes the beam; reopening fires one short pulse."""
    p_in = 60.0
    ramp = cfg.values["intrusion"]["ramp_duration"]
    dwell = cfg.values["intrusion"]["dwell"]
    t_block = 20e-6
    t_reopen = t_block + ramp + dwell
    duration = t_reopen + 5e-6
    fine_start = t_reopen - 1e-6
    scen = Scenario(
        duration=duration,
        pump=(PumpPhase(0.0, duration, p_in),),
        intrusions=(IntrusionEvent(t_block, ramp, t_reopen),),
        records=(RecordWindow(0.0, fine_start, 1024, ("p_out",)),
                 RecordWindow(fine_start, duration, 32, ("p_out",))))
    state = solve_stationary_state(cfg.cavity, p_in)
    rec = run(scen, cfg.cavity, initial_state=state)

    dark = rec.channel("p_out", window=0).slice_time(fine_start - 10e-6,
                                                     fine_start)
    dark_max = float(np.max(dark.samples))
    pulse = pulse_metrics(rec.channel("p_out", window=1))

    checks = [
        ("dark residual under 10 mW", dark_max < DARK_LIMIT_W),
        ("single reopen pulse", pulse.n_pulses == 1),
        ("pulse height within 25%",
         abs(pulse.peak_power / PULSE_PEAK_W - 1.0) <= PULSE_PEAK_TOL),
        ("pulse width under 1 us", pulse.fwhm < PULSE_WIDTH_LIMIT_S),
    ]
    _report(capsys, 4, "beam interruption and reopening pulse", checks,
            f"dark {dark_max * 1e3:.2f} mW, pulse {pulse.peak_power:.0f} W, "
            f"fwhm {pulse.fwhm * 1e9:.0f} ns")


def test_5_gain_lowpass_character(capsys, cfg):
    """The inversion barely follows GHz modulation: its spectrum stays slow."""
    p_in = 60.0
    bit_rate = cfg.values["modulation"]["bit_rate"]
    duration = 200e-6
    bits = random_bits(int(round(duration * bit_rate)),
                       cfg.values["modulation"]["bits_seed"])
    scen = Scenario(
        duration=duration,
        pump=(PumpPhase(0.0, duration, p_in),),
        modulations=(ModulationWindow(0.0, bits, bit_rate,
                                      cfg.values["modulation"]["p_bias"]),),
        records=(RecordWindow(0.0, duration, 16384,
                              ("gain_in", "gain_out")),))
    state = solve_stationary_state(cfg.cavity, p_in)
    rec = run(scen, cfg.cavity, initial_state=state)
    trace = gain_monitor(rec.windows[0], cfg.cavity)
    g_wave = Waveform(trace.g, trace.dt, "", trace.t0)
    fraction = spectral_energy_fraction(g_wave, GAIN_CUTOFF_HZ)

    checks = [
        ("warm run never goes dark", bool(trace.valid.all())),
        ("spectral energy concentrated below 250 kHz",
         fraction >= GAIN_ENERGY_FRACTION),
    ]
    _report(capsys, 5, "gain dynamics low-pass modulation", checks,
            f"{fraction:.4%} of non-DC energy below 250 kHz")


def test_6_noiseless_demodulation(capsys, cfg, mod_trace):
    """The receiver recovers every bit of a noiseless 1000-bit stream."""
    wave, mod, t_mod = mod_trace
    res = demodulate(wave, cfg.demod, mod, mod_start=t_mod, seed=cfg.seed,
                     delay_search=cfg.values["demod"]["delay_search"])
    rep = res.report
    checks = [
        ("all bits compared", rep.bits_compared == 1000),
        ("zero errors", rep.errors == 0),
    ]
    _report(capsys, 6, "noiseless 1 Gbps demodulation", checks,
            f"{rep.errors} errors over {rep.bits_compared} bits, "
            f"delay {rep.n_c} steps")


def test_7_ber_orderings(capsys, cfg, mod_trace):
    """BER behaves across ADC rate, resolution, and detector noise."""
    wave, mod, t_mod = mod_trace
    rates = (1e9, 2e9, 3e9, 4e9)
    bit_depths = (8, 10)
    noise_vars = (0.0, 1e-5)
    cells = [(rate, bits, var) for rate in rates for bits in bit_depths
             for var in noise_vars]
    by_cell = {}
    for idx, (rate, bit_depth, var) in enumerate(cells):
        dcfg = replace(cfg.demod, t_adc=1.0 / rate, adc_bits=bit_depth,
                       sigma_n2=var)
        rep = demodulate(wave, dcfg, mod, mod_start=t_mod,
                         seed=cfg.seed + idx).report
        by_cell[(rate, bit_depth, var)] = rep.ber

    checks = []
    fec_max = 0.0
    for var in noise_vars:
        for rate in rates:
            if rate >= 2.0 * mod.bit_rate:
                b = by_cell[(rate, 10, var)]
                fec_max = max(fec_max, b)
                checks.append((f"10-bit under FEC at {rate:g},{var:g}",
                               b < FEC_BER))
    for rate in rates:
        for var in noise_vars:
            checks.append((f"10-bit <= 8-bit at {rate:g},{var:g}",
                           by_cell[(rate, 10, var)]
                           <= by_cell[(rate, 8, var)]))
    for bit_depth in bit_depths:
        for var in noise_vars:
            series = [by_cell[(r, bit_depth, var)] for r in rates]
            checks.append((f"monotone in rate for {bit_depth}-bit,{var:g}",
                           all(a >= b for a, b in zip(series, series[1:]))))
    _report(capsys, 7, "BER sweep orderings", checks,
            f"16 cells, worst 10-bit BER at >=2x symbol rate {fec_max:.1e}")


def test_8_determinism_and_invariants(capsys, cfg, tmp_path):
    """Manifest round-trip reproducibility plus structural spot checks."""
    overrides = ("cavity.n_l=2", "cavity.n_r=3", "scenario.duration=1e-8",
                 "scenario.record_decimation=1")
    cfg_a = load_config(None, overrides)
    path = tmp_path / "roundtrip.cfg"
    path.write_text(manifest_text(cfg_a))
    cfg_b = load_config(path)
    rec_a = run(cfg_a.scenario, cfg_a.cavity)
    rec_b = run(cfg_b.scenario, cfg_b.cavity)
    wave_a = rec_a.channel("p_out")
    wave_b = rec_b.channel("p_out")
    reproducible = (np.array_equal(wave_a.samples, wave_b.samples)
                    and wave_a.dt == wave_b.dt)

    rng = np.random.default_rng(99)
    x = rng.uniform(0.0, 5.0, 400)
    line = DelayLine(7)
    shifted = np.array([line.push(v) for v in x])
    delay_exact = (np.array_equal(shifted[:7], np.zeros(7))
                   and np.array_equal(shifted[7:], x[:-7]))

    m = ray_matrix(cfg.geometry)
    unimodular = math.isclose(m.a * m.d - m.b * m.c, 1.0, abs_tol=1e-9)
    aperture = math.isclose(beam_radius(cfg.geometry, cfg.geometry.z_g),
                            cfg.geometry.a_g, rel_tol=1e-9)

    v = Waveform(rng.uniform(0.0, cfg.demod.v_max, 256), 2.5e-10, "V")
    cap = adc(v, cfg.demod)
    q = cfg.demod.v_max / 2 ** cfg.demod.adc_bits
    picked = v.samples[np.rint(np.arange(len(cap.levels))
                               * (cfg.demod.t_adc / v.dt)).astype(int)]
    quantizer = bool(np.all((cap.levels <= picked + 1e-12)
                            & (picked - cap.levels < q + 1e-12)))

    below = output_power(20.0, cfg.loss, cfg.pump, cfg.geometry.a_g,
                         cfg.medium.i_s)
    clamp = below.below_threshold and below.p_out == 0.0

    checks = [
        ("manifest round trip reproduces the run bitwise", reproducible),
        ("delay line shifts exactly", delay_exact),
        ("round-trip matrix unimodular", unimodular),
        ("mode radius matches the aperture", aperture),
        ("quantizer floor bound", quantizer),
        ("below-threshold clamp flagged", clamp),
    ]
    _report(capsys, 8, "determinism and structural invariants", checks)
