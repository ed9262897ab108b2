"""Closed-form steady-state output power of the resonant-beam link.

Collapsing every static loss into two equivalent end reflectivities turns
the distributed cavity into a textbook two-mirror laser, which gives the
threshold pump power, slope efficiency, and output power in closed form.
The dynamic simulator is validated against these expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class LossBudget:
    """Static reflectivities and transmissivities of the cavity elements.

    r_m1_eom is the combined mirror-plus-modulator reflectivity at the
    transmitter end, r_m2 the partially transmitting output mirror.  The
    one-way air and round-element diffraction factors default to 1 since
    both are negligible at the design distance.
    """

    r_m1_eom: float = 0.985
    gamma_l1: float = 0.99
    gamma_l2: float = 0.99
    gamma_g: float = 0.99
    gamma_air: float = 1.0
    gamma_diff: float = 1.0
    r_m2: float = 0.9

    def __post_init__(self):
        for name in ("r_m1_eom", "gamma_l1", "gamma_l2", "gamma_g",
                     "gamma_air", "gamma_diff", "r_m2"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")

    @property
    def r_eq1(self) -> float:
        """Equivalent reflectivity of the transmitter end."""
        return (self.r_m1_eom * self.gamma_l1**2 * self.gamma_diff
                * self.gamma_g**2)

    @property
    def r_eq2(self) -> float:
        """Equivalent reflectivity of the receiver end."""
        return self.gamma_air**2 * self.gamma_l2**2 * self.r_m2

    @property
    def gamma_loss(self) -> float:
        """Round-trip static loss product, identically r_eq1 * r_eq2."""
        return self.r_eq1 * self.r_eq2

    @property
    def gamma_m2(self) -> float:
        return 1.0 - self.r_m2


@dataclass(frozen=True)
class PumpChain:
    """Pump-to-inversion efficiency, either combined or factored.

    The combined efficiency may be given directly (the tabulated value is
    0.439) or as the product of the six stage efficiencies.  Supplying both
    with a mismatch beyond 1e-6 relative is rejected rather than silently
    preferring one.
    """

    eta_c: float | None = 0.439
    eta_p: float | None = None
    eta_t: float | None = None
    eta_a: float | None = None
    eta_q: float | None = None
    eta_s: float | None = None
    eta_b: float | None = None

    def __post_init__(self):
        factors = (self.eta_p, self.eta_t, self.eta_a, self.eta_q,
                   self.eta_s, self.eta_b)
        have_factors = all(v is not None for v in factors)
        if not have_factors and any(v is not None for v in factors):
            raise ValueError("give either all six stage efficiencies or none")
        if self.eta_c is None and not have_factors:
            raise ValueError("pump chain needs eta_c or the six factors")
        for name in ("eta_c", "eta_p", "eta_t", "eta_a", "eta_q", "eta_s",
                     "eta_b"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        if have_factors:
            prod = math.prod(v for v in factors)
            if self.eta_c is not None:
                if abs(prod - self.eta_c) > 1e-6 * self.eta_c:
                    raise ValueError(
                        "eta_c disagrees with the product of the stage "
                        f"efficiencies ({self.eta_c} vs {prod})")
            else:
                object.__setattr__(self, "eta_c", prod)

    @property
    def combined(self) -> float:
        return self.eta_c


def threshold_power(loss: LossBudget, pump: PumpChain, a_g: float,
                    i_s: float) -> float:
    """Pump power at which round-trip gain first balances the losses."""
    area = math.pi * a_g**2
    return area * i_s / pump.combined * math.log(
        1.0 / math.sqrt(loss.r_eq1 * loss.r_eq2))


def slope_efficiency(loss: LossBudget, pump: PumpChain) -> float:
    """Intracavity slope of beam power versus pump power above threshold."""
    r1, r2 = loss.r_eq1, loss.r_eq2
    return pump.combined / ((1.0 + math.sqrt(r2 / r1))
                            * (1.0 - math.sqrt(r1 * r2)))


@dataclass(frozen=True)
class SteadyStateResult:
    p_out: float
    p_threshold: float
    slope: float
    below_threshold: bool


def output_power(p_in: float, loss: LossBudget, pump: PumpChain, a_g: float,
                 i_s: float) -> SteadyStateResult:
    """Steady output power through the receiver mirror for pump power p_in.

    Affine in p_in above threshold and clamped to zero below it; the
    below_threshold flag distinguishes the clamp from a true zero.
    """
    if p_in < 0:
        raise ValueError("pump power must be non-negative")
    p_th = threshold_power(loss, pump, a_g, i_s)
    eta = slope_efficiency(loss, pump)
    out_factor = loss.gamma_m2 * loss.gamma_l2 * loss.gamma_air
    below = p_in <= p_th
    p_out = 0.0 if below else out_factor * eta * (p_in - p_th)
    return SteadyStateResult(p_out, p_th, out_factor * eta, below)
