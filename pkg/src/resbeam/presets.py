"""Figure presets: canned scenarios regenerating the reference plots.

Each preset resolves a run configuration (defaults plus overrides),
executes its scenario or sweep, and writes three kinds of artifact into
the output directory: CSV data (the contract), a static SVG rendered from
that same data (a convenience), and a manifest capturing the fully
resolved configuration and seed so the run can be reproduced exactly.

Sweep presets fan out across their grid on a thread pool (the compiled
kernel and the array numerics release the GIL) and merge results in
sorted grid order, so the emitted CSV does not depend on scheduling.
With check=True each preset also asserts its headline expectations and
raises PresetCheckError when one fails.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .cavity import (CavityConfig, IntrusionEvent, ModulationWindow,
                     PumpPhase, RecordWindow, Scenario, gain_monitor, run,
                     solve_stationary_state, steady_scenario)
from .config import RunConfig, load_config, manifest_text
from .metrics import (pulse_metrics, relaxation_metrics,
                      spectral_energy_fraction)
from .modem import (ModulationConfig, adc, delay_divide, demodulate,
                    design_lowpass, lowpass, photodetect, random_bits,
                    zoh_upsample)
from .steady_state import output_power
from .waveform import Waveform, rows_to_csv, spectrum


class PresetCheckError(RuntimeError):
    """A preset ran to completion but a headline expectation failed."""


PRESETS: dict = {}


def _preset(name):
    def register(func):
        PRESETS[name] = func
        return func
    return register


def preset_names() -> tuple[str, ...]:
    return tuple(PRESETS)


def run_preset(name: str, config_path=None, overrides=(), out_dir=None,
               check: bool = False) -> dict:
    """Execute one preset end to end; returns its summary values."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; "
                         f"choose from {', '.join(PRESETS)}")
    cfg = load_config(config_path, overrides)
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.manifest").write_text(
        manifest_text(cfg, {"preset": name}))
    return PRESETS[name](cfg, out, check)


def _require(check: bool, ok: bool, message: str):
    if check and not ok:
        raise PresetCheckError(message)


def _pool_size(n_cells: int) -> int:
    return max(1, min(n_cells, os.cpu_count() or 1))


def _new_axes(path: Path, n_rows: int = 1, height: float = 3.2):
    # imported here so library users never pay the matplotlib startup cost
    from matplotlib.figure import Figure
    fig = Figure(figsize=(7.0, height * n_rows), dpi=100)
    axes = fig.subplots(n_rows, 1, squeeze=False)[:, 0]
    return fig, axes


def _save(fig, path: Path):
    fig.tight_layout()
    fig.savefig(path, format="svg")


def _cell_cavity(cfg: RunConfig, r_m2: float | None = None) -> CavityConfig:
    if r_m2 is None:
        return cfg.cavity
    return CavityConfig(cfg.geometry, replace(cfg.loss, r_m2=r_m2),
                        cfg.medium, cfg.pump,
                        n_l=cfg.cavity.n_l, n_r=cfg.cavity.n_r)


def _stable_point(cavity: CavityConfig, p_in: float,
                  duration: float = 20e-6, tail: float = 8e-6) -> float:
    """Simulated stable-state output: warm start plus a verification run."""
    state = solve_stationary_state(cavity, p_in)
    scen = steady_scenario(duration, p_in, records=(
        RecordWindow(0.0, duration, 64, ("p_out",)),))
    wave = run(scen, cavity, initial_state=state).channel("p_out")
    return float(np.mean(wave.slice_time(duration - tail, duration).samples))


def _transient(cavity: CavityConfig, p_in: float, duration: float,
               decimation: int = 4096) -> Waveform:
    scen = steady_scenario(duration, p_in, records=(
        RecordWindow(0.0, duration, decimation, ("p_out",)),))
    return run(scen, cavity).channel("p_out")


@_preset("fig7-steady-sweep")
def steady_sweep(cfg: RunConfig, out: Path, check: bool) -> dict:
    """Simulated stable-state output against the closed form, both axes."""
    p_grid = (30.0, 40.0, 50.0, 60.0, 70.0, 80.0)
    r_grid = (0.85, 0.90, 0.95, 0.995)
    base_p = cfg.scenario.pump[0].p_in
    base_r = cfg.loss.r_m2
    cells = [("p_in", p, base_r) for p in p_grid]
    cells += [("r_m2", base_p, r) for r in r_grid]

    def solve_cell(cell):
        axis, p_in, r_m2 = cell
        cavity = _cell_cavity(cfg, r_m2)
        theory = output_power(p_in, cavity.loss, cfg.pump,
                              cfg.geometry.a_g, cfg.medium.i_s)
        return cell, _stable_point(cavity, p_in), theory

    with ThreadPoolExecutor(_pool_size(len(cells))) as pool:
        results = list(pool.map(solve_cell, cells))
    results.sort(key=lambda r: (r[0][0], r[0][1], r[0][2]))

    rows = []
    max_dev = 0.0
    # the closed form clamps to zero below threshold while the simulation
    # keeps its amplified-spontaneous trickle, so per-point relative error
    # is undefined there; hold those cells to 2% of the operating output
    floor = 0.02 * output_power(base_p, cfg.loss, cfg.pump,
                                cfg.geometry.a_g, cfg.medium.i_s).p_out
    for (axis, p_in, r_m2), p_sim, theory in results:
        if theory.below_threshold:
            dev = math.nan
            _require(check, p_sim < floor,
                     f"below-threshold cell p_in={p_in} carries power "
                     f"{p_sim:.4g} W")
        else:
            dev = p_sim / theory.p_out - 1.0
            max_dev = max(max_dev, abs(dev))
        rows.append((axis, p_in, r_m2, p_sim, theory.p_out, dev))
    rows_to_csv(out / "fig7-steady-sweep.csv",
                ["axis", "p_in_w", "r_m2", "p_out_sim_w", "p_out_theory_w",
                 "rel_deviation"], rows)

    fig, axes = _new_axes(out, 2)
    for ax, axis_name, x_label in ((axes[0], "p_in", "pump power / W"),
                                   (axes[1], "r_m2", "output mirror R")):
        sub = [r for r in rows if r[0] == axis_name]
        x = [r[1] if axis_name == "p_in" else r[2] for r in sub]
        ax.plot(x, [r[4] for r in sub], "-", label="closed form")
        ax.plot(x, [r[3] for r in sub], "o", label="simulated")
        ax.set_xlabel(x_label)
        ax.set_ylabel("output power / W")
        ax.legend()
    _save(fig, out / "fig7-steady-sweep.svg")

    print(f"fig7-steady-sweep: max relative deviation {max_dev:.4%} "
          f"over {len(rows)} cells")
    _require(check, max_dev <= 0.02,
             f"stable-state deviation {max_dev:.4%} exceeds 2%")
    return {"max_rel_deviation": max_dev, "cells": len(rows)}


def _relaxation_preset(cfg: RunConfig, out: Path, check: bool, name: str,
                       cells, duration: float = 0.6e-3) -> dict:
    """Shared engine for the two start-up transient figures."""
    decimation = 4096

    def run_cell(cell):
        label, p_in, r_m2 = cell
        return cell, _transient(_cell_cavity(cfg, r_m2), p_in, duration,
                                decimation)

    with ThreadPoolExecutor(_pool_size(len(cells))) as pool:
        results = list(pool.map(run_cell, cells))
    results.sort(key=lambda r: (r[0][1], r[0][2]))

    waves = [w for _cell, w in results]
    header = ["time_s"] + [f"p_out_{cell[0]}_w" for cell, _w in results]
    t = waves[0].times()
    rows_to_csv(out / f"{name}.csv", header,
                zip(t, *(w.samples for w in waves)))

    metrics = {}
    metric_rows = []
    for (label, p_in, r_m2), wave in results:
        m = relaxation_metrics(wave)
        metrics[label] = m
        metric_rows.append((label, p_in, r_m2, m.peak_power, m.peak_time,
                            m.steady_power, m.frequency, m.settle_time,
                            m.ratio))
        print(f"{name}: {label}: peak {m.peak_power:.3f} W, "
              f"steady {m.steady_power:.3f} W, "
              f"freq {m.frequency / 1e3:.1f} kHz, "
              f"settle {m.settle_time * 1e3:.3f} ms")
    rows_to_csv(out / f"{name}-metrics.csv",
                ["label", "p_in_w", "r_m2", "peak_w", "peak_time_s",
                 "steady_w", "frequency_hz", "settle_time_s",
                 "peak_to_steady"], metric_rows)

    fig, axes = _new_axes(out, 1, height=4.0)
    for (label, _p, _r), wave in results:
        axes[0].plot(wave.times() * 1e3, wave.samples, label=label,
                     linewidth=0.8)
    axes[0].set_xlabel("time / ms")
    axes[0].set_ylabel("output power / W")
    axes[0].legend()
    _save(fig, out / f"{name}.svg")
    return metrics


@_preset("fig8a-relaxation-pin")
def relaxation_pin(cfg: RunConfig, out: Path, check: bool) -> dict:
    """Start-up transients across pump power at the default mirror."""
    base_r = cfg.loss.r_m2
    cells = [(f"{int(p)}w", float(p), base_r) for p in (20, 40, 60, 80)]
    metrics = _relaxation_preset(cfg, out, check, "fig8a-relaxation-pin",
                                 cells)
    m = metrics
    _require(check, m["60w"].settled() and m["60w"].settle_time < 0.5e-3,
             "default transient does not settle within 0.5 ms")
    _require(check, 40e3 <= m["60w"].frequency <= 60e3,
             f"default oscillation {m['60w'].frequency:.0f} Hz outside "
             "50 kHz +-20%")
    peaks = [m[k].peak_power for k in ("20w", "40w", "60w", "80w")]
    _require(check, all(a < b for a, b in zip(peaks, peaks[1:])),
             f"peak heights not increasing with pump power: {peaks}")
    freqs = [m[k].frequency for k in ("40w", "60w", "80w")]
    _require(check, all(a < b for a, b in zip(freqs, freqs[1:])),
             f"frequencies not increasing with pump power: {freqs}")
    return {k: v.__dict__ for k, v in metrics.items()}


@_preset("fig8b-relaxation-rm2")
def relaxation_rm2(cfg: RunConfig, out: Path, check: bool) -> dict:
    """Start-up transients across output-mirror reflectivity."""
    p_in = cfg.scenario.pump[0].p_in
    grid = (0.9, 0.95, 0.995)
    cells = [(f"rm2_{r}", p_in, r) for r in grid]
    metrics = _relaxation_preset(cfg, out, check, "fig8b-relaxation-rm2",
                                 cells)
    ratios = [metrics[f"rm2_{r}"].ratio for r in grid]
    _require(check, all(a < b for a, b in zip(ratios, ratios[1:])),
             f"peak-to-steady ratio not increasing with R: {ratios}")
    return {k: v.__dict__ for k, v in metrics.items()}


@_preset("fig-intrusion")
def intrusion(cfg: RunConfig, out: Path, check: bool) -> dict:
    """Beam cutoff by a crossing object and the reopening power spike."""
    p_in = cfg.scenario.pump[0].p_in
    ramp = cfg.values["intrusion"]["ramp_duration"]
    dwell = cfg.values["intrusion"]["dwell"]
    t_block = 20e-6
    t_reopen = t_block + ramp + dwell
    duration = t_reopen + 60e-6
    channels = ("p_out", "g_obj")
    fine_start, fine_end = t_reopen - 1e-6, t_reopen + 5e-6
    scen = Scenario(
        duration=duration,
        pump=(PumpPhase(0.0, duration, p_in),),
        intrusions=(IntrusionEvent(t_block, ramp, t_reopen),),
        records=(RecordWindow(0.0, fine_start, 1024, channels),
                 RecordWindow(fine_start, fine_end, 32, channels),
                 RecordWindow(fine_end, duration, 1024, channels)))
    state = solve_stationary_state(cfg.cavity, p_in)
    rec = run(scen, cfg.cavity, initial_state=state)

    rows = []
    for window in rec.windows:
        t = window["p_out"].times()
        rows.extend(zip(t, window["p_out"].samples,
                        window["g_obj"].samples))
    rows_to_csv(out / "fig-intrusion.csv",
                ["time_s", "p_out_w", "transmissivity"], rows)

    fine = rec.channel("p_out", window=1)
    pulse = pulse_metrics(fine)
    dark = rec.channel("p_out", window=0).slice_time(
        fine_start - 10e-6, fine_start)
    dark_max = float(np.max(dark.samples))
    print(f"fig-intrusion: dark residual {dark_max:.3g} W, reopen pulse "
          f"{pulse.peak_power:.1f} W, fwhm {pulse.fwhm * 1e9:.0f} ns, "
          f"{pulse.n_pulses} pulse(s)")

    fig, axes = _new_axes(out, 2)
    coarse_t = np.array([r[0] for r in rows])
    coarse_p = np.array([r[1] for r in rows])
    axes[0].plot(coarse_t * 1e6, coarse_p, linewidth=0.8)
    axes[0].set_xlabel("time / us")
    axes[0].set_ylabel("output power / W")
    axes[1].plot((fine.times() - t_reopen) * 1e9, fine.samples,
                 linewidth=0.8)
    axes[1].set_xlabel("time after reopening / ns")
    axes[1].set_ylabel("output power / W")
    _save(fig, out / "fig-intrusion.svg")

    # a milliwatt-scale spontaneous trickle survives full blockage; anything
    # above 10 mW against the ~7 W operating level means the beam lived on
    _require(check, dark_max < 1e-2,
             f"beam not extinguished while blocked ({dark_max:.3g} W)")
    _require(check, pulse.n_pulses == 1,
             f"{pulse.n_pulses} reopen pulses instead of one")
    _require(check, 0.75 * 1493.0 <= pulse.peak_power <= 1.25 * 1493.0,
             f"reopen pulse {pulse.peak_power:.0f} W outside 1493 W +-25%")
    _require(check, pulse.fwhm < 1e-6,
             f"reopen pulse width {pulse.fwhm:.3g} s not below 1 us")
    return {"peak_w": pulse.peak_power, "fwhm_s": pulse.fwhm,
            "n_pulses": pulse.n_pulses, "dark_max_w": dark_max}


@_preset("fig-modulation-response")
def modulation_response(cfg: RunConfig, out: Path, check: bool) -> dict:
    """Output power under OOK drive, showing the echo build-up."""
    p_in = cfg.scenario.pump[0].p_in
    bit_rate = cfg.values["modulation"]["bit_rate"]
    p_bias = cfg.values["modulation"]["p_bias"]
    bits = random_bits(600, cfg.values["modulation"]["bits_seed"])
    t_mod = 0.5e-6
    t_end = t_mod + len(bits) / bit_rate
    duration = t_end + 0.3e-6
    scen = Scenario(
        duration=duration,
        pump=(PumpPhase(0.0, duration, p_in),),
        modulations=(ModulationWindow(t_mod, bits, bit_rate, p_bias),),
        records=(RecordWindow(t_mod - 0.2e-6, duration, 4,
                              ("p_out", "s_ctl")),))
    state = solve_stationary_state(cfg.cavity, p_in)
    rec = run(scen, cfg.cavity, initial_state=state)
    window = rec.windows[0]
    p = window["p_out"]
    s = window["s_ctl"]
    rows_to_csv(out / "fig-modulation-response.csv",
                ["time_s", "p_out_w", "s_ctl"],
                zip(p.times(), p.samples, s.samples))

    modulated = p.slice_time(t_mod + 2e-8, t_end).samples
    quiet = p.slice_time(t_mod - 0.2e-6, t_mod).samples
    swing = float((modulated.max() - modulated.min()) / modulated.mean())
    quiet_swing = float((quiet.max() - quiet.min()) / quiet.mean())
    print(f"fig-modulation-response: power swing {swing:.1%} under "
          f"modulation, {quiet_swing:.2%} before it")

    fig, axes = _new_axes(out, 2)
    zoom = slice(0, int(0.25e-6 / p.dt))
    axes[0].plot(p.times()[zoom] * 1e6, s.samples[zoom], linewidth=0.8)
    axes[0].set_ylabel("control signal s")
    axes[0].set_xlabel("time / us")
    axes[1].plot(p.times() * 1e6, p.samples, linewidth=0.6)
    axes[1].set_ylabel("output power / W")
    axes[1].set_xlabel("time / us")
    _save(fig, out / "fig-modulation-response.svg")

    depth = 1.0 - p_bias
    _require(check, 2.0 * depth < swing < 1.0,
             f"echo build-up swing {swing:.3f} outside (2x depth, 100%)")
    _require(check, quiet_swing < 0.005,
             f"unmodulated power not steady ({quiet_swing:.3%})")
    return {"swing": swing, "quiet_swing": quiet_swing}


@_preset("fig-gain-spectrum")
def gain_spectrum(cfg: RunConfig, out: Path, check: bool) -> dict:
    """Spectrum of the per-pass gain under sustained fast modulation."""
    p_in = cfg.scenario.pump[0].p_in
    bit_rate = cfg.values["modulation"]["bit_rate"]
    p_bias = cfg.values["modulation"]["p_bias"]
    duration = 200e-6
    bits = random_bits(int(round(duration * bit_rate)),
                       cfg.values["modulation"]["bits_seed"])
    scen = Scenario(
        duration=duration,
        pump=(PumpPhase(0.0, duration, p_in),),
        modulations=(ModulationWindow(0.0, bits, bit_rate, p_bias),),
        records=(RecordWindow(0.0, duration, 16384,
                              ("gain_in", "gain_out")),))
    state = solve_stationary_state(cfg.cavity, p_in)
    rec = run(scen, cfg.cavity, initial_state=state)
    trace = gain_monitor(rec.windows[0], cfg.cavity)
    if not trace.valid.all():
        raise RuntimeError("gain monitor hit dark samples in a warm run")
    g_wave = Waveform(trace.g, trace.dt, "", trace.t0)
    freqs, mag = spectrum(g_wave)
    fraction = spectral_energy_fraction(g_wave, 250e3)
    rows_to_csv(out / "fig-gain-spectrum.csv",
                ["frequency_hz", "magnitude"], zip(freqs, mag))
    print(f"fig-gain-spectrum: {fraction:.4%} of non-DC energy below "
          "250 kHz")

    fig, axes = _new_axes(out, 1, height=4.0)
    axes[0].semilogy(freqs[1:] / 1e3, mag[1:], linewidth=0.8)
    axes[0].axvline(250.0, color="k", linestyle="--", linewidth=0.8)
    axes[0].set_xlabel("frequency / kHz")
    axes[0].set_ylabel("gain spectrum magnitude")
    axes[0].set_xlim(0.0, 2000.0)
    _save(fig, out / "fig-gain-spectrum.svg")

    _require(check, fraction >= 0.99,
             f"only {fraction:.4%} of gain energy below 250 kHz")
    return {"energy_fraction_below_250khz": fraction}


def modulated_trace(cfg: RunConfig, n_bits: int = 1000, bits=None):
    """Warm modulated run recorded at full rate for the receiver stages."""
    p_in = cfg.scenario.pump[0].p_in
    bit_rate = cfg.values["modulation"]["bit_rate"]
    p_bias = cfg.values["modulation"]["p_bias"]
    if bits is None:
        bits = random_bits(n_bits, cfg.values["modulation"]["bits_seed"])
    t_mod = 0.3e-6
    t_end = t_mod + n_bits / bit_rate
    duration = t_end + 0.3e-6
    scen = Scenario(
        duration=duration,
        pump=(PumpPhase(0.0, duration, p_in),),
        modulations=(ModulationWindow(t_mod, bits, bit_rate, p_bias),),
        records=(RecordWindow(0.1e-6, duration, 1, ("p_out",)),))
    state = solve_stationary_state(cfg.cavity, p_in)
    rec = run(scen, cfg.cavity, initial_state=state)
    mod = ModulationConfig(bit_rate, p_bias, bits)
    return rec.channel("p_out"), mod, t_mod


@_preset("fig-demodulation")
def demodulation(cfg: RunConfig, out: Path, check: bool) -> dict:
    """Receiver-chain waveforms and the recovered bitstream."""
    wave, mod, t_mod = modulated_trace(cfg, 1000)
    res = demodulate(wave, cfg.demod, mod, mod_start=t_mod, seed=cfg.seed,
                     delay_search=cfg.values["demod"]["delay_search"])
    rep = res.report
    print(f"fig-demodulation: {rep.errors} errors over "
          f"{rep.bits_compared} bits (BER {rep.ber:.2e}), delay "
          f"{rep.n_c} steps, phase {rep.phase}")

    # regenerate the intermediate stages for the figure
    v_pd = photodetect(wave, cfg.demod, cfg.seed)
    fs = 1.0 / wave.dt
    v_f = lowpass(v_pd, design_lowpass(cfg.demod.lpf1, fs))
    v_rec = zoh_upsample(adc(v_f, cfg.demod))
    y_div, _valid = delay_divide(v_rec.samples, rep.n_c)
    y_f = lowpass(Waveform(y_div, wave.dt), design_lowpass(cfg.demod.lpf2,
                                                           fs))
    dec = 64
    rows_to_csv(out / "fig-demodulation.csv",
                ["time_s", "p_out_w", "v_pd", "v_lpf1", "v_adc_zoh",
                 "y_divided", "y_filtered"],
                zip(wave.times()[::dec], wave.samples[::dec],
                    v_pd.samples[::dec], v_f.samples[::dec],
                    v_rec.samples[::dec], y_div[::dec],
                    y_f.samples[::dec]))

    fig, axes = _new_axes(out, 3, height=2.6)
    t_us = wave.times()[::dec] * 1e6
    axes[0].plot(t_us, wave.samples[::dec], linewidth=0.6)
    axes[0].set_ylabel("p_out / W")
    axes[1].plot(t_us, v_rec.samples[::dec], linewidth=0.6)
    axes[1].set_ylabel("ADC out / V")
    axes[2].plot(t_us, y_f.samples[::dec], linewidth=0.6)
    axes[2].set_ylabel("divided, filtered")
    axes[2].set_xlabel("time / us")
    _save(fig, out / "fig-demodulation.svg")

    _require(check, rep.errors == 0,
             f"noiseless demodulation made {rep.errors} errors")
    return {"errors": rep.errors, "bits_compared": rep.bits_compared,
            "n_c": rep.n_c, "phase": rep.phase}


@_preset("fig-ber-sweep")
def ber_sweep(cfg: RunConfig, out: Path, check: bool) -> dict:
    """BER across ADC sample rate, resolution, and detector noise."""
    wave, mod, t_mod = modulated_trace(cfg, 1000)
    rates = (1e9, 2e9, 3e9, 4e9)
    bit_depths = (8, 10)
    noise_vars = (0.0, 1e-5)
    cells = [(rate, bits, var) for rate in rates for bits in bit_depths
             for var in noise_vars]
    design_lowpass(cfg.demod.lpf1, 1.0 / wave.dt)
    design_lowpass(cfg.demod.lpf2, 1.0 / wave.dt)

    def run_cell(indexed):
        idx, (rate, bit_depth, var) = indexed
        dcfg = replace(cfg.demod, t_adc=1.0 / rate, adc_bits=bit_depth,
                       sigma_n2=var)
        res = demodulate(wave, dcfg, mod, mod_start=t_mod,
                         seed=cfg.seed + idx)
        return (rate, bit_depth, var), res.report

    with ThreadPoolExecutor(_pool_size(len(cells))) as pool:
        results = list(pool.map(run_cell, enumerate(cells)))
    results.sort(key=lambda r: r[0])

    rows = [(rate, bit_depth, var, rep.bits_compared, rep.errors, rep.ber,
             rep.phase, rep.n_c)
            for (rate, bit_depth, var), rep in results]
    rows_to_csv(out / "fig-ber-sweep.csv",
                ["sample_rate_hz", "adc_bits", "noise_var",
                 "bits_compared", "errors", "ber", "phase", "n_c"], rows)
    by_cell = {cell: rep.ber for cell, rep in results}
    for (rate, bit_depth, var), rep in results:
        print(f"fig-ber-sweep: {rate / 1e9:.0f} GHz {bit_depth}-bit "
              f"noise {var:g}: BER {rep.ber:.3e} ({rep.errors} errors)")

    fig, axes = _new_axes(out, 1, height=4.0)
    floor = 1e-4
    for bit_depth in bit_depths:
        for var in noise_vars:
            series = [max(by_cell[(r, bit_depth, var)], floor)
                      for r in rates]
            axes[0].semilogy([r / 1e9 for r in rates], series, "o-",
                             label=f"{bit_depth}-bit, var={var:g}")
    axes[0].axhline(3.8e-3, color="k", linestyle="--", linewidth=0.8)
    axes[0].set_xlabel("ADC sample rate / GHz")
    axes[0].set_ylabel(f"BER (floor {floor:g})")
    axes[0].legend()
    _save(fig, out / "fig-ber-sweep.svg")

    sym = mod.bit_rate
    for var in noise_vars:
        for rate in rates:
            if rate >= 2.0 * sym:
                _require(check, by_cell[(rate, 10, var)] < 3.8e-3,
                         f"10-bit BER at {rate:g} Hz, var {var:g} above "
                         "the FEC threshold")
    for rate in rates:
        for var in noise_vars:
            _require(check,
                     by_cell[(rate, 10, var)] <= by_cell[(rate, 8, var)],
                     f"10-bit BER above 8-bit at {rate:g} Hz, var {var:g}")
    for bit_depth in bit_depths:
        for var in noise_vars:
            series = [by_cell[(r, bit_depth, var)] for r in rates]
            _require(check,
                     all(a >= b for a, b in zip(series, series[1:])),
                     f"BER not non-increasing in rate for {bit_depth}-bit, "
                     f"var {var:g}: {series}")
    return {"ber": by_cell}
