"""Discrete-time simulator of a resonant-beam charging and data link.

A laser resonator split between a transmitter and a receiver delivers
power through free space while an intra-cavity modulator carries data on
the same beam.  The package covers the full stack: Gaussian-mode geometry
and stability of the split cavity, closed-form steady-state power
transfer, rate-equation gain dynamics on a slice pipeline, a compiled
circulation loop with the free-space delays modeled exactly, and the
receiver chain from photodiode to bit decisions with delay-divide echo
cancellation.
"""
from .cavity import (CavityConfig, IntrusionEvent, ModulationWindow,
                     PumpPhase, RecordWindow, RunRecord, Scenario,
                     SimulationFault, derive_delays, gain_monitor, run,
                     solve_stationary_state, steady_scenario)
from .config import ConfigError, RunConfig, load_config, manifest_text
from .gain import (GainMediumParams, RateEquationOverstep, SliceCascade,
                   cascade_step, n2_fixed_point, pump_rate)
from .geometry import (CavityGeometry, UnstableCavityError, beam_radius,
                       is_stable, q_parameter, ray_matrix, stability_margin)
from .metrics import (pulse_metrics, relaxation_metrics,
                      spectral_energy_fraction)
from .modem import (BerReport, DemodConfig, FilterSpec, ModulationConfig,
                    demodulate, design_lowpass, random_bits)
from .presets import PresetCheckError, preset_names, run_preset
from .steady_state import (LossBudget, PumpChain, SteadyStateResult,
                           output_power, slope_efficiency, threshold_power)
from .waveform import Waveform, WindowRecord, spectrum

__version__ = "0.1.0"

__all__ = [
    "BerReport", "CavityConfig", "CavityGeometry", "ConfigError",
    "DemodConfig", "FilterSpec", "GainMediumParams", "IntrusionEvent",
    "LossBudget", "ModulationConfig", "ModulationWindow", "PresetCheckError",
    "PumpChain", "PumpPhase", "RateEquationOverstep", "RecordWindow",
    "RunConfig", "RunRecord", "Scenario", "SimulationFault", "SliceCascade",
    "SteadyStateResult", "UnstableCavityError", "Waveform", "WindowRecord",
    "beam_radius", "cascade_step", "demodulate", "derive_delays",
    "design_lowpass", "gain_monitor", "is_stable", "load_config",
    "manifest_text", "n2_fixed_point", "output_power", "preset_names",
    "pulse_metrics", "pump_rate", "q_parameter", "random_bits", "ray_matrix",
    "relaxation_metrics", "run", "run_preset", "slope_efficiency",
    "solve_stationary_state", "spectral_energy_fraction",
    "spectrum", "stability_margin", "steady_scenario", "threshold_power",
]
