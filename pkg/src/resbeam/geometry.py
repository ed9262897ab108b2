"""Ray optics of the spatially separated laser resonator.

The cavity is a pair of cat's-eye retroreflectors (mirror behind a lens at
roughly its focal distance) facing each other across the transmission
distance.  Everything here is static: the single-pass ray-transfer matrix,
the resonator stability test, the Gaussian q-parameter along the axis, and
the resonant-beam radius normalized to the gain aperture.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


class UnstableCavityError(ValueError):
    """Raised when a confined Gaussian mode does not exist."""


@dataclass(frozen=True)
class CavityGeometry:
    """Axial layout of the resonator.

    f is the focal length of each retroreflector lens, l the mirror-to-lens
    interval inside each retroreflector, and d the free-space transmission
    distance between the two retroreflector IO planes.  Device positions are
    derived from (f, l, d) with the transmitter mirror at z=0.  The gain
    medium sits at z_g, by default directly at the transmitter lens.
    """

    f: float
    l: float
    d: float
    a_g: float
    wavelength: float
    z_g: float | None = None
    z_m1: float = field(init=False)
    z_l1: float = field(init=False)
    z_l2: float = field(init=False)
    z_m2: float = field(init=False)

    def __post_init__(self):
        if self.f <= 0 or self.l <= 0 or self.d < 0:
            raise ValueError("geometry requires f > 0, l > 0, d >= 0")
        if self.a_g <= 0 or self.wavelength <= 0:
            raise ValueError("geometry requires a_g > 0 and wavelength > 0")
        object.__setattr__(self, "z_m1", 0.0)
        object.__setattr__(self, "z_l1", self.l)
        object.__setattr__(self, "z_l2", self.l + 2 * self.f + self.d)
        object.__setattr__(self, "z_m2", 2 * self.l + 2 * self.f + self.d)
        if self.z_g is None:
            object.__setattr__(self, "z_g", self.z_l1)
        if not (self.z_m1 <= self.z_g <= self.z_l1):
            raise ValueError("z_g must lie between the mirror and the lens")


@dataclass(frozen=True)
class RayMatrix:
    """ABCD matrix; B carries meters, C inverse meters."""

    a: float
    b: float
    c: float
    d: float

    @property
    def determinant(self) -> float:
        return self.a * self.d - self.b * self.c


def ray_matrix(geom: CavityGeometry) -> RayMatrix:
    """Single-pass ray-transfer matrix from one end mirror to the other.

    Closed form of the product (free space l) (lens f) (free space 2f+d)
    (lens f) (free space l); both diagonal entries coincide.
    """
    f, l, d = geom.f, geom.l, geom.d
    a = -1.0 - d / f + d * l / f**2
    b = 2 * f - 2 * l + d - 2 * d * l / f + d * l**2 / f**2
    c = d / f**2
    return RayMatrix(a, b, c, a)


def stability_margin(geom: CavityGeometry) -> float:
    """Product of the equivalent g-parameters, g1* g2* = A D."""
    m = ray_matrix(geom)
    return m.a * m.d


def is_stable(geom: CavityGeometry) -> bool:
    """A confined mode exists iff 0 < g1* g2* < 1, boundaries excluded."""
    margin = stability_margin(geom)
    return 0.0 < margin < 1.0


def _lens_transform(q: complex, f: float) -> complex:
    return q / (1.0 - q / f)


def q_parameter(geom: CavityGeometry, z: float) -> complex:
    """Gaussian beam parameter at axial position z.

    The seed value at the transmitter mirror is purely imaginary,
    j|B| sqrt(g2/(g1 (1-g1 g2))); free-space propagation adds distance and
    each lens applies the thin-lens bilinear transform.
    """
    if not is_stable(geom):
        raise UnstableCavityError("no confined Gaussian mode")
    if not (geom.z_m1 <= z <= geom.z_m2):
        raise ValueError("z outside the cavity")
    m = ray_matrix(geom)
    g1, g2 = m.a, m.d
    q = 1j * abs(m.b) * math.sqrt(g2 / (g1 * (1.0 - g1 * g2)))
    if z <= geom.z_l1:
        return q + z
    q = _lens_transform(q + geom.z_l1, geom.f)
    if z <= geom.z_l2:
        return q + (z - geom.z_l1)
    q = _lens_transform(q + (geom.z_l2 - geom.z_l1), geom.f)
    return q + (z - geom.z_l2)


def beam_radius(geom: CavityGeometry, z: float) -> float:
    """Resonant-beam radius at z, normalized so the radius at z_g is a_g."""
    return geom.a_g * _raw_radius(geom, z) / _raw_radius(geom, geom.z_g)


def _raw_radius(geom: CavityGeometry, z: float) -> float:
    q = q_parameter(geom, z)
    im_inv = (1.0 / q).imag
    return math.sqrt(-geom.wavelength / (math.pi * im_inv))


def beam_profile(geom: CavityGeometry, n_points: int = 200):
    """Sampled (z, radius) pairs across the whole cavity."""
    zs = [geom.z_m1 + (geom.z_m2 - geom.z_m1) * i / (n_points - 1)
          for i in range(n_points)]
    return [(z, beam_radius(geom, z)) for z in zs]
