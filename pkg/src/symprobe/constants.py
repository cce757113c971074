"""Physical constants and unit conversions.

Every module takes its constants from here. Internally everything is SI;
the helpers below convert the convenience units accepted at the CLI
boundary (nm, Angstrom, Hz, particle counts).

Values are the CODATA 2014 figures rounded as listed (hbar, nucleon mass),
the exact SI speed of light, and CODATA 2018 vacuum permittivity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float  # J s
    c: float  # m / s
    nucleon_mass: float  # kg
    vacuum_permittivity: float  # F / m

    def __post_init__(self):
        for name in ("hbar", "c", "nucleon_mass", "vacuum_permittivity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar


_CONSTANTS = PhysicalConstants(
    hbar=1.0545718e-34,
    c=2.99792458e8,
    nucleon_mass=1.67262e-27,
    vacuum_permittivity=8.8541878128e-12,
)


def constants() -> PhysicalConstants:
    """Return the fixed constant table (a shared immutable instance)."""
    return _CONSTANTS


NANOMETER = 1e-9
ANGSTROM = 1e-10
MILLIMETER = 1e-3
SECONDS_PER_YEAR = 365.25 * 24 * 3600.0


def nm_to_m(wavelength_nm: float) -> float:
    return wavelength_nm * NANOMETER


def hz_to_omega(frequency_hz: float) -> float:
    return 2.0 * math.pi * frequency_hz


def omega_to_hz(omega: float) -> float:
    return omega / (2.0 * math.pi)


def mass_from_particles(particle_count: float) -> float:
    """Foil mass (kg) for a given number of nucleons."""
    return particle_count * _CONSTANTS.nucleon_mass


def particles_from_mass(mass: float) -> float:
    return mass / _CONSTANTS.nucleon_mass


def energy_to_hz(energy: float) -> float:
    """Express an energy in J as the equivalent frequency E / h."""
    return energy / _CONSTANTS.h
