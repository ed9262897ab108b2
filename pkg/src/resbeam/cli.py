"""Command-line surface.

Subcommands mirror the workflow: inspect the resonator (geometry), get
closed-form operating numbers (steady-state), run a scenario (simulate),
recover a bitstream (demodulate), sweep the receiver (ber-sweep), or
regenerate a reference figure (preset).  Every command accepts --config,
repeated --set section.key=value overrides, --out, and --seed.

Exit codes: 0 success, 2 configuration error, 3 simulation fault,
4 failed preset check.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .cavity import SimulationFault, derive_delays, run, \
    solve_stationary_state
from .config import ConfigError, RunConfig, load_config, manifest_text
from .gain import RateEquationOverstep
from .geometry import (UnstableCavityError, beam_profile, beam_radius,
                       is_stable, ray_matrix, stability_margin)
from .modem import demodulate
from .presets import PresetCheckError, modulated_trace, preset_names, \
    run_preset
from .steady_state import output_power, threshold_power
from .waveform import rows_to_csv, window_to_csv, windows_to_binary


def _add_common(parser):
    parser.add_argument("--config", help="configuration file")
    parser.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="global seed override")


def _resolve(args, extra_overrides=()) -> RunConfig:
    overrides = list(args.overrides) + list(extra_overrides)
    if args.out is not None:
        overrides.append(f"output.directory={args.out}")
    if args.seed is not None:
        overrides.append(f"output.seed={args.seed}")
    return load_config(args.config, overrides)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(cfg: RunConfig, out: Path, command: str):
    (out / f"{command}.manifest").write_text(
        manifest_text(cfg, {"command": command}))


def cmd_geometry(args) -> int:
    cfg = _resolve(args)
    geom = cfg.geometry
    m = ray_matrix(geom)
    margin = stability_margin(geom)
    print(f"single-pass matrix: A=D={m.a:.6g}  B={m.b:.6g} m  "
          f"C={m.c:.6g} 1/m  det={m.determinant:.9f}")
    print(f"stability: g1*g2* = {margin:.6g} "
          f"({'stable' if is_stable(geom) else 'NOT STABLE'})")
    for label, z in (("M1", geom.z_m1), ("L1", geom.z_l1),
                     ("L2", geom.z_l2), ("M2", geom.z_m2)):
        print(f"beam radius at {label} (z={z:.6g} m): "
              f"{beam_radius(geom, z) * 1e3:.4f} mm")
    delays = derive_delays(geom, cfg.medium.l_g, cfg.medium.c)
    n_c = 2 * (delays.n_l + delays.n_r + 1)
    print(f"delays: n_l={delays.n_l}  n_r={delays.n_r}  n_c={n_c} "
          f"({n_c * cfg.medium.dt * 1e9:.3f} ns round trip)")
    if args.out is not None:
        out = _out_dir(cfg)
        rows_to_csv(out / "geometry-profile.csv", ["z_m", "radius_m"],
                    beam_profile(geom, 2048))
        _write_manifest(cfg, out, "geometry")
        print(f"wrote {out / 'geometry-profile.csv'}")
    return 0


def cmd_steady_state(args) -> int:
    cfg = _resolve(args)
    p_in = cfg.scenario.pump[0].p_in
    p_th = threshold_power(cfg.loss, cfg.pump, cfg.geometry.a_g,
                           cfg.medium.i_s)
    res = output_power(p_in, cfg.loss, cfg.pump, cfg.geometry.a_g,
                       cfg.medium.i_s)
    print(f"equivalent reflectivities: R1={cfg.loss.r_eq1:.6f}  "
          f"R2={cfg.loss.r_eq2:.6f}  loss factor {cfg.loss.gamma_loss:.6f}")
    print(f"threshold power: {p_th:.4f} W")
    print(f"slope (output per pump watt above threshold): {res.slope:.6f}")
    state = "below threshold, no beam" if res.below_threshold else "lasing"
    print(f"P_in = {p_in:.4f} W -> P_out = {res.p_out:.4f} W ({state})")
    if args.out is not None:
        out = _out_dir(cfg)
        rows = []
        for p in np.arange(0.0, 100.5, 0.5):
            r = output_power(float(p), cfg.loss, cfg.pump,
                             cfg.geometry.a_g, cfg.medium.i_s)
            rows.append((float(p), r.p_out, int(r.below_threshold)))
        rows_to_csv(out / "steady-state.csv",
                    ["p_in_w", "p_out_w", "below_threshold"], rows)
        _write_manifest(cfg, out, "steady-state")
        print(f"wrote {out / 'steady-state.csv'}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _resolve(args)
    initial = None
    if args.warm:
        initial = solve_stationary_state(cfg.cavity,
                                         cfg.scenario.pump[0].p_in)
    rec = run(cfg.scenario, cfg.cavity, initial_state=initial)
    out = _out_dir(cfg)
    for i, window in enumerate(rec.windows):
        window_to_csv(window, out / f"simulate-window{i}.csv")
    windows_to_binary(rec.windows, out / "simulate.rbt")
    _write_manifest(cfg, out, "simulate")
    for i, window in enumerate(rec.windows):
        p = window["p_out"].samples if "p_out" in window else None
        if p is None or len(p) == 0:
            continue
        print(f"window {i}: {window.n_samples} samples, p_out "
              f"min {p.min():.4g} W  max {p.max():.4g} W  "
              f"final {p[-1]:.4g} W")
    print(f"wrote {len(rec.windows)} window(s) to {out}")
    return 0


def cmd_demodulate(args) -> int:
    cfg = _resolve(args, ["modulation.enabled = true"])
    wave, mod, t_mod = modulated_trace(cfg, bits=cfg.modulation.bits)
    res = demodulate(wave, cfg.demod, mod, mod_start=t_mod, seed=cfg.seed,
                     delay_search=cfg.values["demod"]["delay_search"])
    rep = res.report
    print(f"compared {rep.bits_compared} bits: {rep.errors} errors "
          f"(BER {rep.ber:.4e})")
    print(f"delay {rep.n_c} steps, sampling phase {rep.phase}, "
          f"{res.n_clipped} ADC samples clipped")
    out = _out_dir(cfg)
    rows_to_csv(out / "demodulate.csv",
                ["sample_rate_hz", "adc_bits", "noise_var",
                 "bits_compared", "errors", "ber", "phase", "n_c"],
                [(1.0 / cfg.demod.t_adc, cfg.demod.adc_bits,
                  cfg.demod.sigma_n2, rep.bits_compared, rep.errors,
                  rep.ber, rep.phase, rep.n_c)])
    _write_manifest(cfg, out, "demodulate")
    return 0


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def cmd_ber_sweep(args) -> int:
    cfg = _resolve(args, ["modulation.enabled = true"])
    wave, mod, t_mod = modulated_trace(cfg, bits=cfg.modulation.bits)
    rows = []
    idx = 0
    for rate in sorted(args.rates):
        for bit_depth in sorted(args.adc_bits):
            for var in sorted(args.noise):
                dcfg = replace(cfg.demod, t_adc=1.0 / rate,
                               adc_bits=bit_depth, sigma_n2=var)
                rep = demodulate(wave, dcfg, mod, mod_start=t_mod,
                                 seed=cfg.seed + idx).report
                idx += 1
                rows.append((rate, bit_depth, var, rep.bits_compared,
                             rep.errors, rep.ber, rep.phase, rep.n_c))
                print(f"rate {rate:g} Hz, {bit_depth}-bit, noise {var:g}: "
                      f"BER {rep.ber:.4e}")
    out = _out_dir(cfg)
    rows_to_csv(out / "ber-sweep.csv",
                ["sample_rate_hz", "adc_bits", "noise_var",
                 "bits_compared", "errors", "ber", "phase", "n_c"], rows)
    _write_manifest(cfg, out, "ber-sweep")
    return 0


def cmd_preset(args) -> int:
    run_preset(args.preset, config_path=args.config,
               overrides=_preset_overrides(args), out_dir=args.out,
               check=args.check)
    return 0


def _preset_overrides(args):
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"output.seed={args.seed}")
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resbeam",
        description="resonant-beam charging and communication simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("geometry", help="resonator stability and mode size")
    _add_common(p)
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("steady-state",
                       help="closed-form threshold and output power")
    _add_common(p)
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("simulate", help="run the configured scenario")
    _add_common(p)
    p.add_argument("--warm", action="store_true",
                   help="start from the stationary state instead of dark")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demodulate",
                       help="modulated run plus full receiver chain")
    _add_common(p)
    p.set_defaults(func=cmd_demodulate)

    p = sub.add_parser("ber-sweep",
                       help="BER across ADC rate, resolution, and noise")
    _add_common(p)
    p.add_argument("--rates", type=_float_list, default=(1e9, 2e9, 4e9),
                   help="comma-separated ADC sample rates in Hz")
    p.add_argument("--adc-bits", type=_int_list, default=(8, 10),
                   help="comma-separated ADC resolutions")
    p.add_argument("--noise", type=_float_list, default=(0.0, 1e-5),
                   help="comma-separated detector noise variances in V^2")
    p.set_defaults(func=cmd_ber_sweep)

    p = sub.add_parser("preset", help="regenerate a reference figure")
    p.add_argument("preset", choices=preset_names())
    _add_common(p)
    p.add_argument("--check", action="store_true",
                   help="assert the preset's headline expectations")
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"cannot read {exc.filename}", file=sys.stderr)
        return 2
    except (SimulationFault, RateEquationOverstep,
            UnstableCavityError) as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return 3
    except PresetCheckError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
