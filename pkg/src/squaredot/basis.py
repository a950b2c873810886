"""Hard-wall square well: material/geometry records and the analytic
single-particle sine basis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import constants
from .errors import InvalidArgument


@dataclass(frozen=True)
class Material:
    effective_mass_ratio: float = constants.GAAS_MASS_RATIO
    dielectric_constant: float = constants.GAAS_DIELECTRIC
    hbar: float = constants.HBAR
    # None -> e^2/(4 pi eps0 eps_r); set to 0.0 for the noninteracting limit
    coulomb_prefactor: float | None = None

    def __post_init__(self):
        if not self.effective_mass_ratio > 0:
            raise InvalidArgument("effective_mass_ratio must be > 0")
        if not self.dielectric_constant >= 1:
            raise InvalidArgument("dielectric_constant must be >= 1")
        if self.coulomb_prefactor is None:
            object.__setattr__(
                self, "coulomb_prefactor", constants.COULOMB_VACUUM / self.dielectric_constant
            )

    @property
    def kinetic_prefactor(self) -> float:
        """hbar^2 / (2 m*) in meV nm^2."""
        return constants.HBAR2_OVER_2ME / self.effective_mass_ratio

    @property
    def bohr_radius(self) -> float:
        """Effective Bohr radius in nm."""
        return 0.0529177210903 * self.dielectric_constant / self.effective_mass_ratio


@dataclass(frozen=True)
class Geometry:
    """Square dot [0, L] x [0, L] with the origin at a corner.

    Corner labels run counterclockwise from the lower-left: a=(0,0) side,
    b=(L,0), c=(L,L), d=(0,L). ``corner_fraction`` places the labelled
    density-peak positions at that fraction of L in from each wall.
    """

    side_length: float
    corner_fraction: float = 0.25
    corners: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.side_length > 0:
            raise InvalidArgument("side_length must be > 0")
        if not 0 < self.corner_fraction < 0.5:
            raise InvalidArgument("corner_fraction must lie in (0, 0.5)")
        lo = self.corner_fraction * self.side_length
        hi = self.side_length - lo
        object.__setattr__(
            self, "corners", {"a": (lo, lo), "b": (hi, lo), "c": (hi, hi), "d": (lo, hi)}
        )

    @property
    def L(self) -> float:
        return self.side_length


class BoxOrbital(NamedTuple):
    n: int
    m: int


def energy_unit(geometry: Geometry, material: Material) -> float:
    """K = hbar^2 pi^2 / (2 m* L^2), so that E(n, m) = K (n^2 + m^2)."""
    return material.kinetic_prefactor * math.pi**2 / geometry.L**2


def enumerate_orbitals(n_max: int, geometry: Geometry | None = None,
                       material: Material | None = None) -> list[BoxOrbital]:
    """All (n, m) with 1 <= n, m <= n_max, ascending in n^2 + m^2.

    Degenerate levels are ordered lexicographically in (n, m). The ordering
    depends only on n_max; geometry and material are accepted for interface
    symmetry with the other basis functions.
    """
    if not isinstance(n_max, (int, np.integer)) or n_max < 1:
        raise InvalidArgument(f"n_max must be a positive integer, got {n_max!r}")
    orbs = [BoxOrbital(n, m) for n in range(1, n_max + 1) for m in range(1, n_max + 1)]
    orbs.sort(key=lambda o: (o.n**2 + o.m**2, o.n, o.m))
    return orbs


def orbital_energy(orb: BoxOrbital, geometry: Geometry, material: Material) -> float:
    return energy_unit(geometry, material) * (orb.n**2 + orb.m**2)


def orbital_value(orb: BoxOrbital, point, geometry: Geometry) -> float:
    x, y = point
    L = geometry.L
    if not (0.0 <= x <= L and 0.0 <= y <= L):
        raise InvalidArgument(f"point {point} lies outside the dot [0, {L}]^2")
    if x in (0.0, L) or y in (0.0, L):
        return 0.0
    return (2.0 / L) * math.sin(orb.n * math.pi * x / L) * math.sin(orb.m * math.pi * y / L)


def sine_1d(n, x, L):
    """Normalised 1D box function sqrt(2/L) sin(n pi x / L), broadcasting."""
    return math.sqrt(2.0 / L) * np.sin(np.multiply.outer(n, x) * (math.pi / L))


def orbitals_on_grid(orbitals, xs, ys, L):
    """Orbital values on the tensor grid xs x ys, shape (n_orb, len(xs), len(ys))."""
    ns = np.array([o.n for o in orbitals])
    ms = np.array([o.m for o in orbitals])
    fx = sine_1d(ns, np.asarray(xs), L)
    fy = sine_1d(ms, np.asarray(ys), L)
    return fx[:, :, None] * fy[:, None, :]


def half_overlap(a, b):
    """Dimensionless int_0^{L/2} phi_a phi_b dx, broadcasting over a and b."""
    a = np.asarray(a)
    b = np.asarray(b)

    def s(k):
        k = np.asarray(k, dtype=float)
        safe = np.where(k == 0, 1.0, k)
        return np.where(k == 0, 0.5, np.sin(safe * math.pi / 2) / (safe * math.pi))

    return s(a - b) - s(a + b)
