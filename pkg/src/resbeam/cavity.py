"""Discrete-time circulation of the resonant beam through the cavity.

Photon densities travel between the gain medium and the two retroreflector
ends through integer-step delay lines, losing the static reflection and
transmission factors once per pass and being reshaped by the intra-cavity
modulator and by any blocking object in the free-space arm.  The medium
itself advances through the slice cascade of the gain module.  Everything
runs on the global step dt = l_g / c.

A Scenario describes a run declaratively: pump schedule, intrusion events,
modulation windows, and what to record.  Scenarios compile down to segment
arrays consumed by the compiled inner loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .gain import GainMediumParams, cascade_coefficients, pump_rate
from .geometry import CavityGeometry, is_stable
from .steady_state import LossBudget, PumpChain
from .waveform import Waveform, WindowRecord

DEFAULT_CHANNELS = ("p_out", "p_circ", "gain_in", "gain_out", "n2_mean")
GAIN_MONITOR_FLOOR_W = 1e-15


class SimulationFault(RuntimeError):
    """The integrator hit a non-finite value or a rate-equation overstep."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DelayLine:
    """Fixed integer delay: push returns the input from D steps ago.

    The buffer starts at zero, so the first D outputs are zero.
    """

    def __init__(self, length: int):
        if length < 1:
            raise ValueError("delay must be at least one step")
        self.length = length
        self._buf = np.zeros(length)
        self._idx = 0

    def push(self, x: float) -> float:
        out = self._buf[self._idx]
        self._buf[self._idx] = x
        self._idx += 1
        if self._idx == self.length:
            self._idx = 0
        return out


@dataclass(frozen=True)
class DerivedDelays:
    n_l: int
    n_r: int
    rounding_error_l_s: float
    rounding_error_r_s: float


def derive_delays(geom: CavityGeometry, l_g: float, c: float) -> DerivedDelays:
    """Integer one-way transit delays from the device positions.

    The gain-to-mirror path lengths are divided by the medium thickness
    (one step of travel) and rounded to the nearest integer; the residual
    is reported in seconds so callers can judge the discretization.
    """
    path_l = geom.z_g - geom.z_m1
    path_r = geom.z_m2 - geom.z_g
    n_l = round(path_l / l_g)
    n_r = round(path_r / l_g)
    if n_l < 1 or n_r < 1:
        raise ValueError("gain-to-mirror path shorter than one step")
    err_l = (path_l - n_l * l_g) / c
    err_r = (path_r - n_r * l_g) / c
    return DerivedDelays(n_l, n_r, err_l, err_r)


@dataclass(frozen=True)
class CavityConfig:
    """Geometry, losses, medium, and the derived integer delays."""

    geometry: CavityGeometry
    loss: LossBudget
    medium: GainMediumParams
    pump: PumpChain
    n_l: int | None = None
    n_r: int | None = None

    def __post_init__(self):
        if self.geometry.a_g != self.medium.a_g:
            raise ValueError("geometry and medium disagree on a_g")
        if self.geometry.wavelength != self.medium.wavelength:
            raise ValueError("geometry and medium disagree on wavelength")
        if self.n_l is None or self.n_r is None:
            derived = derive_delays(self.geometry, self.medium.l_g,
                                    self.medium.c)
            if self.n_l is None:
                object.__setattr__(self, "n_l", derived.n_l)
            if self.n_r is None:
                object.__setattr__(self, "n_r", derived.n_r)
        if self.n_l < 1 or self.n_r < 1:
            raise ValueError("delays must be at least one step")

    @property
    def dt(self) -> float:
        return self.medium.dt

    @property
    def n_c(self) -> int:
        """Steps per full circulation, counting one medium transit each way."""
        return 2 * (self.n_l + self.n_r + 1)

    @property
    def kl(self) -> float:
        """Static factor applied over one left-arm round: gain to M1 to gain."""
        return self.loss.r_eq1

    @property
    def kr(self) -> float:
        """Static factor applied over one right-arm round, without blocking."""
        return self.loss.r_eq2

    @property
    def p2_factor(self) -> float:
        m = self.medium
        return math.pi * m.a_g**2 * m.c * m.photon_energy

    @property
    def k_out(self) -> float:
        return (self.loss.gamma_m2 * self.loss.gamma_l2
                * self.loss.gamma_air * self.p2_factor)


@dataclass(frozen=True)
class PumpPhase:
    t_start: float
    t_end: float
    p_in: float


@dataclass(frozen=True)
class IntrusionEvent:
    """Object crossing the free-space arm.

    Transmissivity ramps linearly from 1 to 0 over ramp_duration starting
    at t_start, stays 0, and snaps back to 1 at t_reopen.
    """

    t_start: float
    ramp_duration: float
    t_reopen: float


@dataclass(frozen=True)
class ModulationWindow:
    """OOK drive applied to the modulator between t_start and t_end.

    Each bit is held for one bit period as s = (1 - p_bias) x + p_bias.
    t_end of None means the natural end of the bitstream.
    """

    t_start: float
    bits: tuple[int, ...]
    bit_rate: float
    p_bias: float = 0.98
    t_end: float | None = None


@dataclass(frozen=True)
class RecordWindow:
    t_start: float
    t_end: float
    decimation: int = 1
    channels: tuple[str, ...] = DEFAULT_CHANNELS


@dataclass(frozen=True)
class Scenario:
    """Declarative description of one simulation run."""

    duration: float
    pump: tuple[PumpPhase, ...] = ()
    intrusions: tuple[IntrusionEvent, ...] = ()
    modulations: tuple[ModulationWindow, ...] = ()
    records: tuple[RecordWindow, ...] = ()

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        for ph in self.pump:
            if ph.t_end <= ph.t_start or ph.p_in < 0:
                raise ValueError("malformed pump phase")
        _check_disjoint([(p.t_start, p.t_end) for p in self.pump],
                        "pump phases")
        for ev in self.intrusions:
            if ev.ramp_duration <= 0:
                raise ValueError("intrusion ramp_duration must be positive")
            if ev.t_reopen < ev.t_start + ev.ramp_duration:
                raise ValueError("intrusion reopens before the ramp ends")
        _check_disjoint([(e.t_start, e.t_reopen) for e in self.intrusions],
                        "intrusion events")
        for mw in self.modulations:
            if mw.bit_rate <= 0 or not 0.0 <= mw.p_bias <= 1.0:
                raise ValueError("malformed modulation window")
            if len(mw.bits) == 0:
                raise ValueError("modulation window without bits")
        _check_disjoint([(m.t_start, _mod_end(m)) for m in self.modulations],
                        "modulation windows")
        for rw in self.records:
            if rw.t_end <= rw.t_start or rw.decimation < 1:
                raise ValueError("malformed record window")
            unknown = set(rw.channels) - set(_kernel.CHANNEL_NAMES)
            if unknown:
                raise ValueError(f"unknown record channels {sorted(unknown)}")
        _check_disjoint([(r.t_start, r.t_end) for r in self.records],
                        "record windows")


def _mod_end(mw: ModulationWindow) -> float:
    natural = mw.t_start + len(mw.bits) / mw.bit_rate
    return natural if mw.t_end is None else min(mw.t_end, natural)


def _check_disjoint(spans, what):
    spans = sorted(spans)
    for (s0, e0), (s1, _e1) in zip(spans, spans[1:]):
        if s1 < e0:
            raise ValueError(f"{what} overlap")


def steady_scenario(duration: float, p_in: float,
                    records: tuple[RecordWindow, ...] = (),
                    **kwargs) -> Scenario:
    """Pump held constant for the whole duration."""
    return Scenario(duration=duration,
                    pump=(PumpPhase(0.0, duration, p_in),),
                    records=records, **kwargs)


# -- scenario compilation ---------------------------------------------------

def _to_step(t: float, dt: float) -> int:
    return int(round(t / dt))


def _compile_pump(scenario, config, n_steps):
    p = config.medium
    _, _, _, l_s = cascade_coefficients(p)
    boundaries = {0, n_steps}
    for ph in scenario.pump:
        boundaries.add(_to_step(ph.t_start, config.dt))
        boundaries.add(_to_step(ph.t_end, config.dt))
    edges = sorted(b for b in boundaries if 0 <= b <= n_steps)
    seg_edges, seg_vals = [], []
    for b0, b1 in zip(edges, edges[1:]):
        p_in = 0.0
        for ph in scenario.pump:
            if _to_step(ph.t_start, config.dt) <= b0 \
                    and b1 <= _to_step(ph.t_end, config.dt):
                p_in = ph.p_in
                break
        r_p = pump_rate(p_in, p)
        seg_edges.append(b0)
        seg_vals.append(r_p * (l_s / p.c))
    if not seg_vals:
        seg_edges, seg_vals = [0], [0.0]
    return (np.asarray(seg_edges, dtype=np.int64),
            np.asarray(seg_vals, dtype=np.float64))


def _compile_modulation(scenario, config, n_steps):
    edges, vals = [0], [1.0]
    dt = config.dt
    for mw in sorted(scenario.modulations, key=lambda m: m.t_start):
        sps = int(round(1.0 / (mw.bit_rate * dt)))
        if sps < 2:
            raise ValueError("bit period shorter than two steps")
        start = _to_step(mw.t_start, dt)
        end = _to_step(_mod_end(mw), dt)
        for k, bit in enumerate(mw.bits):
            b0 = start + k * sps
            if b0 >= end:
                break
            s = (1.0 - mw.p_bias) * (1.0 if bit else 0.0) + mw.p_bias
            edges.append(b0)
            vals.append(s)
        edges.append(end)
        vals.append(1.0)
    return (np.asarray(edges, dtype=np.int64),
            np.asarray(vals, dtype=np.float64))


def _compile_intrusions(scenario, config, n_steps):
    edges, v0, slope = [0], [1.0], [0.0]
    dt = config.dt
    for ev in sorted(scenario.intrusions, key=lambda e: e.t_start):
        b0 = _to_step(ev.t_start, dt)
        ramp_steps = max(1, _to_step(ev.ramp_duration, dt))
        reopen = _to_step(ev.t_reopen, dt)
        edges.append(b0)
        v0.append(1.0)
        slope.append(-1.0 / ramp_steps)
        edges.append(b0 + ramp_steps)
        v0.append(0.0)
        slope.append(0.0)
        edges.append(reopen)
        v0.append(1.0)
        slope.append(0.0)
    return (np.asarray(edges, dtype=np.int64),
            np.asarray(v0, dtype=np.float64),
            np.asarray(slope, dtype=np.float64))


def _compile_records(scenario, config, n_steps):
    windows = sorted(scenario.records, key=lambda r: r.t_start)
    start, end, dec, mask, offset = [], [], [], [], []
    total = 0
    for rw in windows:
        b0 = max(0, _to_step(rw.t_start, config.dt))
        b1 = min(n_steps, _to_step(rw.t_end, config.dt))
        if b1 <= b0:
            raise ValueError("record window outside the run")
        m = 0
        for name in rw.channels:
            m |= 1 << _kernel.CHANNEL_NAMES.index(name)
        start.append(b0)
        end.append(b1)
        dec.append(rw.decimation)
        mask.append(m)
        offset.append(total)
        total += (b1 - b0 - 1) // rw.decimation + 1
    return (np.asarray(start, dtype=np.int64),
            np.asarray(end, dtype=np.int64),
            np.asarray(dec, dtype=np.int64),
            np.asarray(mask, dtype=np.int64),
            np.asarray(offset, dtype=np.int64),
            total, windows)


# -- stationary solution ----------------------------------------------------

@dataclass(frozen=True)
class StationaryState:
    """Self-consistent circulation state for a constant pump."""

    n2: np.ndarray
    reg_r: np.ndarray
    reg_l: np.ndarray
    phi2: float
    phi4: float
    p_out: float
    residual: float


def solve_stationary_state(config: CavityConfig, p_in: float,
                           tol: float = 1e-13) -> StationaryState:
    """Fixed point of the round-trip map at constant pump power.

    For a trial phi2 the N2 profile is relaxed to its per-slice equilibrium
    under the implied traveling densities, the round trip is composed, and
    the outer bisection finds where the map crosses the identity.  The
    result seeds warm starts of the dynamic simulator; the simulator
    holding this state stationary is itself a consistency check.
    """
    p = config.medium
    sig_ls, k_seed, _, l_s = cascade_coefficients(p)
    ns = p.n_slices
    r_p = pump_rate(p_in, p)
    kl, kr = config.kl, config.kr

    def round_map(phi2):
        n2 = np.full(ns, r_p * p.tau_f)
        r_in = np.zeros(ns)
        l_in = np.zeros(ns)
        phi2_new = phi2
        for _ in range(500):
            x = kr * phi2
            for i in range(ns - 1, -1, -1):
                l_in[i] = x
                x = x + x * (n2[i] * sig_ls) + n2[i] * k_seed
            phi4 = x
            x = kl * phi4
            for i in range(ns):
                r_in[i] = x
                x = x + x * (n2[i] * sig_ls) + n2[i] * k_seed
            phi2_new = x
            n2_next = r_p / ((r_in + l_in) * (p.sigma * p.c) + 1.0 / p.tau_f)
            done = np.all(np.abs(n2_next - n2) <= 1e-14 * n2_next)
            n2 = n2_next
            if done:
                break
        return phi2_new, n2, r_in, l_in, phi4

    lo, hi = 1.0, 1e22
    if round_map(hi)[0] >= hi:
        raise SimulationFault("stationary solver bracket failed high")
    if round_map(lo)[0] <= lo:
        # below threshold and seed weaker than the probe; shrink the bracket
        lo = 1e-12
    for _ in range(220):
        mid = math.sqrt(lo * hi)
        if round_map(mid)[0] > mid:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + tol:
            break
    phi2 = math.sqrt(lo * hi)
    phi2_new, n2, r_in, l_in, phi4 = round_map(phi2)
    residual = abs(phi2_new - phi2) / phi2
    reg_r = r_in + r_in * (n2 * sig_ls) + n2 * k_seed
    reg_l = l_in + l_in * (n2 * sig_ls) + n2 * k_seed
    p_out = config.k_out * phi2
    return StationaryState(n2, reg_r, reg_l, float(phi2), float(phi4),
                           float(p_out), float(residual))


# -- the run itself ---------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    """Recorded waveforms of one run plus the timing facts."""

    windows: tuple[WindowRecord, ...]
    dt: float
    n_l: int
    n_r: int
    n_c: int
    duration: float

    def channel(self, name: str, window: int = 0) -> Waveform:
        return self.windows[window].channels[name]


def run(scenario: Scenario, config: CavityConfig,
        initial_state: StationaryState | None = None,
        backend: str = "numba") -> RunRecord:
    """Advance the cavity over the whole scenario and collect the records.

    With an initial_state the run continues from that stationary point
    instead of the dark cavity; the delay rings are preloaded with the
    stationary densities, which represents an unmodulated prehistory.
    """
    p = config.medium
    dt = config.dt
    n_steps = _to_step(scenario.duration, dt)
    if n_steps < 1:
        raise ValueError("duration shorter than one step")

    sig_ls, k_seed, k_decay, _ = cascade_coefficients(p)
    size_r = 2 * config.n_r
    size_l = 2 * config.n_l
    if initial_state is None:
        n2 = np.zeros(p.n_slices)
        reg_r = np.zeros(p.n_slices)
        reg_l = np.zeros(p.n_slices)
        ring_r = np.zeros(size_r)
        ring_l = np.zeros(size_l)
        prev_in = 0.0
    else:
        n2 = initial_state.n2.copy()
        reg_r = initial_state.reg_r.copy()
        reg_l = initial_state.reg_l.copy()
        ring_r = np.full(size_r, initial_state.phi2)
        ring_l = np.full(size_l, initial_state.phi4)
        prev_in = (config.kl * initial_state.phi4
                   + config.kr * initial_state.phi2)

    pump_edges, pump_kpump = _compile_pump(scenario, config, n_steps)
    s_edges, s_vals = _compile_modulation(scenario, config, n_steps)
    obj_edges, obj_v0, obj_slope = _compile_intrusions(scenario, config,
                                                       n_steps)
    (rec_start, rec_end, rec_dec, rec_mask, rec_offset, total_rows,
     rec_windows) = _compile_records(scenario, config, n_steps)
    out = np.zeros((total_rows, _kernel.N_CHANNELS))

    m = p
    e_ring = math.pi * m.a_g**2 * m.photon_energy * m.l_g
    e_reg = math.pi * m.a_g**2 * m.photon_energy * m.slice_thickness

    loop = {"numba": _kernel.circulation_loop_jit,
            "python": _kernel.circulation_loop}[backend]
    status, fault_step, fault_slice = loop(
        n_steps, 0, n2, reg_r, reg_l, ring_r, ring_l, prev_in,
        config.n_l, config.n_r, sig_ls, k_seed, k_decay,
        config.kl, config.kr, config.k_out, config.p2_factor, e_ring, e_reg,
        pump_edges, pump_kpump, s_edges, s_vals,
        obj_edges, obj_v0, obj_slope,
        rec_start, rec_end, rec_dec, rec_mask, rec_offset, out)
    if status == 1:
        raise SimulationFault(
            f"rate-equation overstep at step {fault_step}, "
            f"slice {fault_slice}: time step too coarse for the photon "
            "density", step=fault_step)
    if status == 2:
        raise SimulationFault(
            f"non-finite photon density at step {fault_step}",
            step=fault_step)

    recorded = []
    for w, b0, b1, dec, off in zip(rec_windows, rec_start, rec_end, rec_dec,
                                   rec_offset):
        rows = (b1 - b0 - 1) // dec + 1
        channels = {}
        for name in w.channels:
            idx = _kernel.CHANNEL_NAMES.index(name)
            channels[name] = Waveform(out[off:off + rows, idx].copy(),
                                      dt * dec,
                                      _kernel.CHANNEL_UNITS[idx],
                                      b0 * dt)
        recorded.append(WindowRecord(b0 * dt, dt * dec, channels))
    return RunRecord(tuple(recorded), dt, config.n_l, config.n_r,
                     config.n_c, n_steps * dt)


# -- gain monitor -----------------------------------------------------------

@dataclass(frozen=True)
class GainTrace:
    """Per-pass power gain samples with a validity mask."""

    g: np.ndarray
    valid: np.ndarray
    dt: float
    t0: float


def gain_monitor(window: WindowRecord, config: CavityConfig) -> GainTrace:
    """Ratio of medium output to its own aligned input, guarded at dark.

    Samples whose input power sits below the monitor floor are flagged
    invalid instead of producing infinities during the dark start-up.
    """
    if "gain_in" not in window or "gain_out" not in window:
        raise ValueError("window lacks gain_in/gain_out channels")
    g_in = window["gain_in"].samples
    g_out = window["gain_out"].samples
    floor_density = GAIN_MONITOR_FLOOR_W / config.p2_factor
    valid = g_in > floor_density
    g = np.divide(g_out, g_in, out=np.ones_like(g_out), where=valid)
    return GainTrace(g, valid, window["gain_in"].dt, window["gain_in"].t0)
