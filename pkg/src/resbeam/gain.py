"""Rate-equation dynamics of the pumped gain medium.

The medium is advanced in discrete steps of one slice transit time.  Each
slice carries its own excited-atom density N2; photon densities traveling
right (toward the receiver) and left (toward the transmitter mirror) pass
through the slice pipeline in opposite orders, picking up stimulated gain
and half of the spontaneous seed each.

The update for a single slice over dt_s = l_s / c:

    N2'   = N2 - N2 (phi_r + phi_l) sigma l_s - N2 l_s / (tau_f c)
               + R_p l_s / c
    out_r = phi_r + N2 phi_r sigma l_s + S l_s / (2 c)
    out_l = phi_l + N2 phi_l sigma l_s + S l_s / (2 c)

with S = beta N2 / tau_21.  A step that would drive N2 negative means the
time base is too coarse for the photon density and is treated as a hard
error, never clamped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PLANCK = 6.62607015e-34
# The tabulated medium constants round-trip exactly with c = 3e8, so the
# simulator defaults to it instead of the CODATA value.
LIGHT_SPEED = 3.0e8


class RateEquationOverstep(RuntimeError):
    """Stimulated depletion would drive N2 negative within one step."""


@dataclass(frozen=True)
class GainMediumParams:
    """Physical constants of the gain medium plus its discretization."""

    sigma: float = 15.6e-23
    tau_f: float = 100e-6
    tau_21: float = 115e-6
    beta: float = 1e-3
    i_s: float = 1.1976e7
    a_g: float = 2e-3
    l_g: float = 1e-3
    wavelength: float = 1064e-9
    eta_c: float = 0.439
    n_slices: int = 10
    c: float = LIGHT_SPEED
    h: float = PLANCK

    def __post_init__(self):
        positive = ("sigma", "tau_f", "tau_21", "i_s", "a_g", "l_g",
                    "wavelength", "eta_c", "c", "h")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be in (0, 1)")
        if self.n_slices < 1:
            raise ValueError("n_slices must be at least 1")

    @property
    def photon_energy(self) -> float:
        return self.h * self.c / self.wavelength

    @property
    def volume(self) -> float:
        return math.pi * self.a_g**2 * self.l_g

    @property
    def dt(self) -> float:
        """Global step: one full-medium transit."""
        return self.l_g / self.c

    @property
    def slice_thickness(self) -> float:
        return self.l_g / self.n_slices

    @property
    def dt_slice(self) -> float:
        return self.slice_thickness / self.c


def pump_rate(p_in: float, params: GainMediumParams) -> float:
    """Excitation rate R_p pumped into the medium, per volume per second."""
    if p_in < 0:
        raise ValueError("pump power must be non-negative")
    return params.eta_c * p_in / (params.photon_energy * params.volume)


def spontaneous_rate(n2: float, params: GainMediumParams) -> float:
    """Spontaneous-emission rate coupled into the resonant mode."""
    if n2 < 0:
        raise ValueError("N2 must be non-negative")
    return params.beta * n2 / params.tau_21


def density_to_power(phi: float, params: GainMediumParams) -> float:
    """Beam power carried by a traveling photon density."""
    return math.pi * params.a_g**2 * params.c * params.photon_energy * phi


def power_to_density(p: float, params: GainMediumParams) -> float:
    return p / (math.pi * params.a_g**2 * params.c * params.photon_energy)


def slice_step(n2: float, phi_right_in: float, phi_left_in: float,
               r_p_slice: float, params: GainMediumParams):
    """Advance one slice by one slice transit; returns (out_r, out_l, n2')."""
    sig_ls, k_seed, k_decay, l_s = cascade_coefficients(params)
    g = n2 * sig_ls
    seed = n2 * k_seed
    out_r = phi_right_in + phi_right_in * g + seed
    out_l = phi_left_in + phi_left_in * g + seed
    n2_next = (n2 - g * (phi_right_in + phi_left_in)
               - n2 * k_decay + r_p_slice * (l_s / params.c))
    if n2_next < 0.0:
        raise RateEquationOverstep(
            f"N2 would go negative ({n2_next:.3e}); time step too coarse "
            "for this photon density")
    return out_r, out_l, n2_next


def n2_fixed_point(phi_total: float, r_p: float,
                   params: GainMediumParams) -> float:
    """Analytic N2 equilibrium with the photon density held constant."""
    return r_p / (phi_total * params.sigma * params.c + 1.0 / params.tau_f)


def cascade_coefficients(params: GainMediumParams):
    """Per-slice update coefficients (sig_ls, k_seed, k_decay, l_s).

    Shared by the cascade, the stationary solver, and the compiled loop so
    that all of them perform literally the same floating-point arithmetic.
    """
    l_s = params.slice_thickness
    sig_ls = params.sigma * l_s
    k_seed = params.beta * l_s / (2.0 * params.c * params.tau_21)
    k_decay = l_s / (params.tau_f * params.c)
    return sig_ls, k_seed, k_decay, l_s


@dataclass
class SliceCascade:
    """Slice pipeline advancing the whole medium by one global step.

    Photon densities entering at either face work through the slices one
    sub-step at a time while the face inputs are held, which reproduces the
    internal upsampling of the reference architecture.  The pipeline
    registers make the medium contribute exactly one global step of latency
    per direction: outputs read after step() correspond to the inputs of
    the previous step.
    """

    params: GainMediumParams
    n2: np.ndarray = field(init=False)
    _reg_r: np.ndarray = field(init=False)
    _reg_l: np.ndarray = field(init=False)

    def __post_init__(self):
        n = self.params.n_slices
        self.n2 = np.zeros(n)
        self._reg_r = np.zeros(n)
        self._reg_l = np.zeros(n)

    @property
    def phi_right_out(self) -> float:
        return float(self._reg_r[-1])

    @property
    def phi_left_out(self) -> float:
        return float(self._reg_l[0])

    def load(self, n2, reg_r, reg_l):
        """Overwrite the pipeline state, e.g. from a stationary solution."""
        self.n2[:] = n2
        self._reg_r[:] = reg_r
        self._reg_l[:] = reg_l

    def step(self, phi_right_in: float, phi_left_in: float, r_p: float):
        """One global step; returns (phi_right_out, phi_left_out) after it.

        r_p is the full-medium pump rate; the equal split across slices
        with proportionally smaller slice volume leaves the per-slice rate
        equal to it.
        """
        p = self.params
        ns = p.n_slices
        n2 = self.n2
        reg_r = self._reg_r
        reg_l = self._reg_l
        sig_ls, k_seed, k_decay, l_s = cascade_coefficients(p)
        k_pump = r_p * (l_s / p.c)
        inl_used = np.empty(ns)
        for _ in range(ns):
            for i in range(ns):
                inl = reg_l[i + 1] if i < ns - 1 else phi_left_in
                inl_used[i] = inl
                reg_l[i] = inl + inl * (n2[i] * sig_ls) + n2[i] * k_seed
            for i in range(ns - 1, -1, -1):
                inr = reg_r[i - 1] if i > 0 else phi_right_in
                g = n2[i] * sig_ls
                reg_r[i] = inr + inr * g + n2[i] * k_seed
                n2_next = n2[i] - g * (inr + inl_used[i]) \
                    - n2[i] * k_decay + k_pump
                if n2_next < 0.0:
                    raise RateEquationOverstep(
                        f"N2 would go negative in slice {i}")
                n2[i] = n2_next
        return self.phi_right_out, self.phi_left_out


def cascade_step(cascade: SliceCascade, phi_right_in: float,
                 phi_left_in: float, p_in: float):
    """Convenience wrapper taking pump power instead of pump rate."""
    r_p = pump_rate(p_in, cascade.params)
    out_r, out_l = cascade.step(phi_right_in, phi_left_in, r_p)
    return out_r, out_l, cascade.n2
