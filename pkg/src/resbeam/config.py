"""Configuration loading, validation, and the run manifest.

Configs are flat INI-style text: [section] headers, key = value lines,
comments with # or ;.  Every key has a default equal to the reference
system parameters, so an empty (or missing) file describes the default
link.  Validation collects every violation with its field path instead of
stopping at the first.

A manifest is the fully resolved config written back in the same format
(plus an informational [meta] section), so a run can be reproduced by
loading its manifest as the config.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass

from .cavity import (CavityConfig, IntrusionEvent, ModulationWindow,
                     PumpPhase, RecordWindow, Scenario, DEFAULT_CHANNELS)
from .gain import GainMediumParams, LIGHT_SPEED, PLANCK
from .geometry import CavityGeometry, is_stable, stability_margin
from .modem import DemodConfig, FilterSpec, ModulationConfig, random_bits
from .steady_state import LossBudget, PumpChain


class ConfigError(ValueError):
    """Carries every violated invariant, each tagged with its field path."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  "
                         + "\n  ".join(self.violations))


_UNSET = object()

# section -> key -> (python type, default)
SCHEMA = {
    "geometry": {
        "f": (float, 0.03),
        "l": (float, 0.030225),
        "d": (float, 3.0),
        "a_g": (float, 0.002),
        "wavelength": (float, 1.064e-6),
        "z_g": (float, None),
    },
    "loss": {
        "r_m1_eom": (float, 0.985),
        "gamma_l1": (float, 0.99),
        "gamma_l2": (float, 0.99),
        "gamma_g": (float, 0.99),
        "gamma_air": (float, 1.0),
        "gamma_diff": (float, 1.0),
        "r_m2": (float, 0.9),
    },
    "gain": {
        "sigma": (float, 15.6e-23),
        "tau_f": (float, 100e-6),
        "tau_21": (float, 115e-6),
        "beta": (float, 1e-3),
        "i_s": (float, 1.1976e7),
        "l_g": (float, 1e-3),
        "n_slices": (int, 10),
        "c": (float, LIGHT_SPEED),
        "h": (float, PLANCK),
    },
    "pump": {
        "eta_c": (float, 0.439),
        "eta_p": (float, None),
        "eta_t": (float, None),
        "eta_a": (float, None),
        "eta_q": (float, None),
        "eta_s": (float, None),
        "eta_b": (float, None),
    },
    "cavity": {
        "n_l": (int, None),
        "n_r": (int, None),
    },
    "scenario": {
        "duration": (float, 1e-3),
        "p_in": (float, 60.0),
        "record_start": (float, 0.0),
        "record_end": (float, None),
        "record_decimation": (int, 1024),
        "record_channels": (str, ",".join(DEFAULT_CHANNELS)),
    },
    "intrusion": {
        "enabled": (bool, False),
        "t_start": (float, 50e-6),
        "ramp_duration": (float, 22.7e-6),
        "dwell": (float, 155e-6),
    },
    "modulation": {
        "enabled": (bool, False),
        "t_start": (float, 0.0),
        "bit_rate": (float, 1e9),
        "p_bias": (float, 0.98),
        "n_bits": (int, 1000),
        "bits_seed": (int, 1234),
        "bits_file": (str, None),
    },
    "demod": {
        "split_ratio": (float, 0.1),
        "responsivity": (float, 0.6),
        "r_load": (float, 1.0),
        "lpf1_passband": (float, 1e9),
        "lpf1_stopband": (float, 1.2e9),
        "lpf1_attenuation_db": (float, 40.0),
        "lpf2_passband": (float, 1e9),
        "lpf2_stopband": (float, 1.2e9),
        "lpf2_attenuation_db": (float, 40.0),
        "t_adc": (float, 5e-10),
        "adc_bits": (int, 10),
        "v_max": (float, 2.5),
        "segment_len": (int, 500),
        "sigma_n2": (float, 0.0),
        "delay_search": (int, 8),
    },
    "output": {
        "directory": (str, "out"),
        "seed": (int, 12345),
    },
}


def _parse_value(raw: str, typ, path: str, violations):
    raw = raw.strip()
    if raw == "":
        return None
    try:
        if typ is bool:
            lowered = raw.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError
        return typ(raw)
    except ValueError:
        violations.append(f"{path}: cannot parse {raw!r} as {typ.__name__}")
        return _UNSET


def _read_raw(path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        with open(path) as fh:
            parser.read_file(fh)
    raw = {}
    for section in parser.sections():
        raw[section] = dict(parser.items(section))
    return raw


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply --set style section.key=value pairs onto raw config text."""
    out = {s: dict(kv) for s, kv in raw.items()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError([f"override {item!r} is not key=value"])
        key_path, value = item.split("=", 1)
        if "." not in key_path:
            raise ConfigError([f"override key {key_path!r} lacks a section"])
        section, key = key_path.split(".", 1)
        out.setdefault(section.strip(), {})[key.strip()] = value.strip()
    return out


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs, fully resolved and cross-validated."""

    geometry: CavityGeometry
    loss: LossBudget
    medium: GainMediumParams
    pump: PumpChain
    cavity: CavityConfig
    scenario: Scenario
    modulation: ModulationConfig | None
    demod: DemodConfig
    out_dir: str
    seed: int
    values: dict


def resolve(raw: dict) -> RunConfig:
    """Validate raw key/value text and build the typed configuration."""
    violations = []
    values = {}
    given = set()
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (typ, default) in keys.items():
            values[section][key] = default
    for section, kv in raw.items():
        if section == "meta":
            continue
        if section not in SCHEMA:
            violations.append(f"{section}: unknown section")
            continue
        for key, rawval in kv.items():
            if key not in SCHEMA[section]:
                violations.append(f"{section}.{key}: unknown key")
                continue
            typ, _default = SCHEMA[section][key]
            parsed = _parse_value(rawval, typ, f"{section}.{key}", violations)
            if parsed is not _UNSET:
                values[section][key] = parsed
                given.add((section, key))

    # six stage efficiencies given without an explicit combined value:
    # drop the default so the product rules instead of clashing with it
    factor_keys = ("eta_p", "eta_t", "eta_a", "eta_q", "eta_s", "eta_b")
    if any(("pump", k) in given for k in factor_keys) \
            and ("pump", "eta_c") not in given:
        values["pump"]["eta_c"] = None

    v = values

    def positive(section, key):
        val = v[section][key]
        if val is not None and val <= 0:
            violations.append(f"{section}.{key}: must be positive, got {val}")

    def unit_interval(section, key, low_open=True):
        val = v[section][key]
        if val is None:
            return
        ok = (0.0 < val <= 1.0) if low_open else (0.0 <= val <= 1.0)
        if not ok:
            bounds = "(0, 1]" if low_open else "[0, 1]"
            violations.append(
                f"{section}.{key}: must be in {bounds}, got {val}")

    for key in ("f", "l", "a_g", "wavelength"):
        positive("geometry", key)
    if v["geometry"]["d"] is not None and v["geometry"]["d"] < 0:
        violations.append("geometry.d: must be non-negative")
    for key in SCHEMA["loss"]:
        unit_interval("loss", key)
    for key in ("sigma", "tau_f", "tau_21", "i_s", "l_g", "c", "h"):
        positive("gain", key)
    if not 0.0 < v["gain"]["beta"] < 1.0:
        violations.append("gain.beta: must be in (0, 1)")
    if v["gain"]["n_slices"] < 1:
        violations.append("gain.n_slices: must be at least 1")
    for key in SCHEMA["pump"]:
        unit_interval("pump", key)
    for key in ("n_l", "n_r"):
        val = v["cavity"][key]
        if val is not None and val < 1:
            violations.append(f"cavity.{key}: must be at least 1")
    positive("scenario", "duration")
    if v["scenario"]["p_in"] < 0:
        violations.append("scenario.p_in: must be non-negative")
    if v["scenario"]["record_decimation"] < 1:
        violations.append("scenario.record_decimation: must be at least 1")
    channels = tuple(s.strip() for s in
                     v["scenario"]["record_channels"].split(",") if s.strip())
    from . import _kernel
    for ch in channels:
        if ch not in _kernel.CHANNEL_NAMES:
            violations.append(
                f"scenario.record_channels: unknown channel {ch!r}")
    positive("intrusion", "ramp_duration")
    if v["intrusion"]["dwell"] < 0:
        violations.append("intrusion.dwell: must be non-negative")
    positive("modulation", "bit_rate")
    unit_interval("modulation", "p_bias", low_open=False)
    if v["modulation"]["n_bits"] < 1:
        violations.append("modulation.n_bits: must be at least 1")
    if not 0.0 < v["demod"]["split_ratio"] < 1.0:
        violations.append("demod.split_ratio: must be in (0, 1)")
    for key in ("responsivity", "r_load", "t_adc", "v_max",
                "lpf1_passband", "lpf1_stopband", "lpf1_attenuation_db",
                "lpf2_passband", "lpf2_stopband", "lpf2_attenuation_db"):
        positive("demod", key)
    for num in (1, 2):
        if not v["demod"][f"lpf{num}_passband"] \
                < v["demod"][f"lpf{num}_stopband"]:
            violations.append(
                f"demod.lpf{num}_stopband: must exceed the passband edge")
    if v["demod"]["adc_bits"] < 1:
        violations.append("demod.adc_bits: must be at least 1")
    if v["demod"]["segment_len"] < 2:
        violations.append("demod.segment_len: must be at least 2")
    if v["demod"]["sigma_n2"] < 0:
        violations.append("demod.sigma_n2: must be non-negative")
    if v["demod"]["delay_search"] < 0:
        violations.append("demod.delay_search: must be non-negative")

    if violations:
        raise ConfigError(violations)

    # typed construction; remaining invariant failures keep their field paths
    geometry = loss = medium = pump = None
    try:
        geometry = CavityGeometry(
            f=v["geometry"]["f"], l=v["geometry"]["l"], d=v["geometry"]["d"],
            a_g=v["geometry"]["a_g"],
            wavelength=v["geometry"]["wavelength"],
            z_g=v["geometry"]["z_g"])
    except ValueError as exc:
        violations.append(f"geometry: {exc}")
    try:
        loss = LossBudget(**v["loss"])
    except ValueError as exc:
        violations.append(f"loss: {exc}")
    try:
        medium = GainMediumParams(
            sigma=v["gain"]["sigma"], tau_f=v["gain"]["tau_f"],
            tau_21=v["gain"]["tau_21"], beta=v["gain"]["beta"],
            i_s=v["gain"]["i_s"], a_g=v["geometry"]["a_g"],
            l_g=v["gain"]["l_g"], wavelength=v["geometry"]["wavelength"],
            eta_c=v["pump"]["eta_c"] if v["pump"]["eta_c"] is not None
            else 1.0,
            n_slices=v["gain"]["n_slices"], c=v["gain"]["c"],
            h=v["gain"]["h"])
    except ValueError as exc:
        violations.append(f"gain: {exc}")
    try:
        pump = PumpChain(**v["pump"])
    except ValueError as exc:
        violations.append(f"pump: {exc}")

    if geometry is not None and not is_stable(geometry):
        violations.append(
            "geometry: unstable resonator "
            f"(g1*g2* = {stability_margin(geometry):.6g}, need (0, 1))")
    if violations:
        raise ConfigError(violations)

    if pump.combined != medium.eta_c:
        medium = GainMediumParams(
            sigma=medium.sigma, tau_f=medium.tau_f, tau_21=medium.tau_21,
            beta=medium.beta, i_s=medium.i_s, a_g=medium.a_g,
            l_g=medium.l_g, wavelength=medium.wavelength,
            eta_c=pump.combined, n_slices=medium.n_slices, c=medium.c,
            h=medium.h)

    try:
        cavity = CavityConfig(geometry, loss, medium, pump,
                              n_l=v["cavity"]["n_l"], n_r=v["cavity"]["n_r"])
    except ValueError as exc:
        raise ConfigError([f"cavity: {exc}"])

    modulation = None
    if v["modulation"]["enabled"]:
        if v["modulation"]["bits_file"] is not None:
            bits = read_bits_file(v["modulation"]["bits_file"])
        else:
            bits = random_bits(v["modulation"]["n_bits"],
                               v["modulation"]["bits_seed"])
        try:
            modulation = ModulationConfig(
                bit_rate=v["modulation"]["bit_rate"],
                p_bias=v["modulation"]["p_bias"], bits=bits)
        except ValueError as exc:
            raise ConfigError([f"modulation: {exc}"])

    try:
        demod = DemodConfig(
            split_ratio=v["demod"]["split_ratio"],
            responsivity=v["demod"]["responsivity"],
            r_load=v["demod"]["r_load"],
            lpf1=FilterSpec(v["demod"]["lpf1_passband"],
                            v["demod"]["lpf1_stopband"],
                            v["demod"]["lpf1_attenuation_db"]),
            lpf2=FilterSpec(v["demod"]["lpf2_passband"],
                            v["demod"]["lpf2_stopband"],
                            v["demod"]["lpf2_attenuation_db"]),
            t_adc=v["demod"]["t_adc"], adc_bits=v["demod"]["adc_bits"],
            v_max=v["demod"]["v_max"], n_c=cavity.n_c,
            segment_len=v["demod"]["segment_len"],
            sigma_n2=v["demod"]["sigma_n2"])
    except ValueError as exc:
        raise ConfigError([f"demod: {exc}"])

    try:
        scenario = build_scenario(v, cavity, modulation)
    except ValueError as exc:
        raise ConfigError([f"scenario: {exc}"])

    return RunConfig(geometry, loss, medium, pump, cavity, scenario,
                     modulation, demod, v["output"]["directory"],
                     v["output"]["seed"], values)


def build_scenario(v: dict, cavity: CavityConfig,
                   modulation: ModulationConfig | None) -> Scenario:
    duration = v["scenario"]["duration"]
    record_end = v["scenario"]["record_end"]
    if record_end is None:
        record_end = duration
    channels = tuple(s.strip() for s in
                     v["scenario"]["record_channels"].split(",") if s.strip())
    intrusions = ()
    if v["intrusion"]["enabled"]:
        t0 = v["intrusion"]["t_start"]
        ramp = v["intrusion"]["ramp_duration"]
        intrusions = (IntrusionEvent(
            t0, ramp, t0 + ramp + v["intrusion"]["dwell"]),)
    modulations = ()
    if modulation is not None:
        modulations = (ModulationWindow(
            v["modulation"]["t_start"], modulation.bits,
            modulation.bit_rate, modulation.p_bias),)
    return Scenario(
        duration=duration,
        pump=(PumpPhase(0.0, duration, v["scenario"]["p_in"]),),
        intrusions=intrusions,
        modulations=modulations,
        records=(RecordWindow(v["scenario"]["record_start"], record_end,
                              v["scenario"]["record_decimation"], channels),))


def read_bits_file(path) -> tuple[int, ...]:
    """One ASCII 0/1 per character; whitespace ignored."""
    with open(path) as fh:
        text = fh.read()
    bits = []
    for ch in text:
        if ch.isspace():
            continue
        if ch not in "01":
            raise ConfigError([f"bits file {path}: invalid character {ch!r}"])
        bits.append(int(ch))
    return tuple(bits)


def load_config(path=None, overrides=()) -> RunConfig:
    """Load, override, and resolve; None loads pure defaults."""
    try:
        raw = _read_raw(path)
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"])
    if overrides:
        raw = apply_overrides(raw, overrides)
    return resolve(raw)


def manifest_text(run_config: RunConfig, extra_meta: dict | None = None) -> str:
    """Resolved config as config-format text; loadable as a config."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            val = run_config.values[section][key]
            if val is None:
                lines.append(f"{key} =")
            elif isinstance(val, float):
                lines.append(f"{key} = {val!r}")
            else:
                lines.append(f"{key} = {val}")
        lines.append("")
    lines.append("[meta]")
    meta = {"format": "resbeam manifest", "seed": run_config.seed}
    if extra_meta:
        meta.update(extra_meta)
    for key, val in meta.items():
        lines.append(f"{key} = {val}")
    lines.append("")
    return "\n".join(lines)
