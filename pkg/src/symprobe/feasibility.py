"""Design calculators for the mirror foil and the probing light.

The "much larger / much smaller" conditions are turned into pass/fail checks
with an explicit margin factor (default 10) that is always reported.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .constants import ANGSTROM, constants
from .interferometer import PhotonProbe
from .oscillator import FoilOscillator

DEFAULT_MARGIN = 10.0
PLATE_COEFFICIENTS = {"rectangular_clamped": 1.654, "circular_clamped": 0.4694}
THIN_PLATE_RATIO = 0.01


@dataclass(frozen=True)
class MirrorMaterial:
    refractive_index: float
    extinction_coefficient: float
    youngs_modulus: float  # Pa
    density: float  # kg / m^3
    poisson_ratio: float
    atomic_volume: float  # m^3

    def __post_init__(self):
        if not self.refractive_index > 0:
            raise ValueError("refractive_index must be positive")
        if not self.extinction_coefficient >= 0:
            raise ValueError("extinction_coefficient must be non-negative")
        if not self.youngs_modulus > 0:
            raise ValueError("youngs_modulus must be positive")
        if not self.density > 0:
            raise ValueError("density must be positive")
        if not 0 <= self.poisson_ratio < 0.5:
            raise ValueError("poisson_ratio must lie in [0, 0.5)")
        if not self.atomic_volume > 0:
            raise ValueError("atomic_volume must be positive")

    @property
    def complex_index(self) -> complex:
        return complex(self.refractive_index, self.extinction_coefficient)

    @property
    def sound_velocity(self) -> float:
        """Plate sound velocity sqrt(E / (rho (1 - nu^2)))."""
        return math.sqrt(self.youngs_modulus / (self.density * (1.0 - self.poisson_ratio**2)))


# Mechanical values are typical of transition metals (E ~ 2e11 Pa, rho ~ 8e3 kg/m^3).
# Optical constants: hard x-ray (n just below 1, kappa ~ 1e-6) and a metal in the red.
_METAL = dict(youngs_modulus=2.0e11, density=8.0e3, poisson_ratio=0.3, atomic_volume=10 * ANGSTROM**3)
MATERIAL_PRESETS = {
    "metal_xray": MirrorMaterial(refractive_index=1.0 - 1e-5, extinction_coefficient=1e-6, **_METAL),
    "metal_red": MirrorMaterial(refractive_index=2.0, extinction_coefficient=10.0, **_METAL),
}
WAVELENGTH_PRESETS = {"metal_xray": 0.1e-9, "metal_red": 700e-9}


@dataclass(frozen=True)
class MirrorGeometry:
    thickness: float  # m
    lateral_size: float  # m
    shape: str = "rectangular_clamped"

    def __post_init__(self):
        if not (self.thickness > 0 and self.lateral_size > 0):
            raise ValueError("thickness and lateral_size must be positive")
        if self.shape not in PLATE_COEFFICIENTS:
            raise ValueError(f"shape must be one of {sorted(PLATE_COEFFICIENTS)}")

    @property
    def thin(self) -> bool:
        """False when h / L exceeds 0.01 and the thin-plate formula is doubtful."""
        return self.thickness / self.lateral_size <= THIN_PLATE_RATIO


@dataclass(frozen=True)
class ConditionResult:
    name: str
    value: float
    threshold: float
    status: str

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def energy_resolution_required(foil: FoilOscillator, photon: PhotonProbe) -> float:
    """hbar omega / E_gamma: relative resolution needed to resolve one level spacing."""
    return constants().hbar * foil.omega / photon.energy


def high_resolution_condition(foil: FoilOscillator, photon: PhotonProbe, margin: float = DEFAULT_MARGIN) -> ConditionResult:
    """Check sqrt(hbar / (m omega)) >> lambda as ratio >= margin."""
    if margin < 1:
        raise ValueError("margin must be >= 1")
    ratio = math.sqrt(constants().hbar / (foil.mass * foil.omega)) / photon.wavelength
    return ConditionResult("sqrt(hbar/m omega)/lambda", ratio, margin, "pass" if ratio >= margin else "fail")


def max_omega_high_resolution(mass: float, wavelength: float, margin: float = DEFAULT_MARGIN) -> float:
    """Largest omega with sqrt(hbar / (m omega)) >= margin * lambda."""
    return constants().hbar / (mass * (margin * wavelength) ** 2)


def max_energy_transfer(photon: PhotonProbe, mass: float) -> tuple[float, float]:
    """Recoil-limited energy transfer 2 (hbar k)^2 / m, and its ratio to hbar^2 / (m lambda^2).

    The ratio is 2 (k lambda)^2 = 8 pi^2 whatever the mass and wavelength.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    hbar = constants().hbar
    transfer = 2.0 * (hbar * photon.k) ** 2 / mass
    spacing = hbar**2 / (mass * photon.wavelength**2)
    return transfer, transfer / spacing


def boundary_reflectance(n1: complex, n2: complex) -> float:
    """Normal-incidence reflectance |(N1 - N2) / (N1 + N2)|^2 of one interface."""
    total = complex(n1) + complex(n2)
    if total == 0:
        raise ValueError("N1 + N2 = 0: reflectance undefined")
    return abs((complex(n1) - complex(n2)) / total) ** 2


def absorption(photon: PhotonProbe, material: MirrorMaterial, path: float) -> float:
    """Fraction absorbed over ``path`` metres: 1 - exp(-2 k kappa path)."""
    if path < 0:
        raise ValueError("path must be non-negative")
    return -math.expm1(-2.0 * photon.k * material.extinction_coefficient * path)


def plate_frequency(material: MirrorMaterial, geometry: MirrorGeometry) -> float:
    """Fundamental (0,0) frequency (Hz) of a clamped plate, coeff * C_L h / L^2."""
    coeff = PLATE_COEFFICIENTS[geometry.shape]
    return coeff * material.sound_velocity * geometry.thickness / geometry.lateral_size**2


def foil_inventory(particle_count: float, atomic_volume: float, area: float) -> tuple[float, float]:
    """Thickness (m) and number of atomic layers of a foil holding ``particle_count`` atoms."""
    if not (particle_count > 0 and atomic_volume > 0 and area > 0):
        raise ValueError("particle_count, atomic_volume and area must be positive")
    thickness = particle_count * atomic_volume / area
    return thickness, thickness / atomic_volume ** (1.0 / 3.0)


def feasibility_report(
    material: MirrorMaterial,
    geometry: MirrorGeometry,
    photon: PhotonProbe,
    foil: FoilOscillator,
    *,
    surrounding_index: complex = 1.0,
    margin: float = DEFAULT_MARGIN,
    max_absorption: float = 0.5,
) -> list[ConditionResult]:
    """Every design figure as a row (name, value, threshold, status).

    Rows whose threshold is nan are informational and carry status 'info'.
    """
    nan = float("nan")
    rows = []
    f_plate = plate_frequency(material, geometry)
    rows.append(ConditionResult("plate_frequency_hz", f_plate, nan, "info"))
    rows.append(
        ConditionResult("thickness_over_size", geometry.thickness / geometry.lateral_size, THIN_PLATE_RATIO,
                        "pass" if geometry.thin else "warn")
    )
    r = boundary_reflectance(material.complex_index, surrounding_index)
    rows.append(ConditionResult("boundary_reflectance", r, nan, "info"))
    a = absorption(photon, material, geometry.thickness)
    rows.append(ConditionResult("absorption", a, max_absorption, "pass" if a < max_absorption else "fail"))
    area = geometry.lateral_size**2
    thickness, layers = foil_inventory(foil.particle_count, material.atomic_volume, area)
    rows.append(ConditionResult("inventory_thickness_m", thickness, nan, "info"))
    rows.append(ConditionResult("inventory_layers", layers, nan, "info"))
    rows.append(high_resolution_condition(foil, photon, margin))
    rows.append(ConditionResult("energy_resolution", energy_resolution_required(foil, photon), nan, "info"))
    transfer, ratio = max_energy_transfer(photon, foil.mass)
    rows.append(ConditionResult("max_energy_transfer_hz", transfer / constants().h, nan, "info"))
    rows.append(ConditionResult("transfer_to_spacing_ratio", ratio, nan, "info"))
    return rows


def format_report(rows: list[ConditionResult]) -> str:
    width = max(len(r.name) for r in rows)
    out = []
    for r in rows:
        thr = "" if math.isnan(r.threshold) else f"  threshold {r.threshold:.6g}"
        out.append(f"{r.name:<{width}}  {r.value:.6g}{thr}  [{r.status}]")
    return "\n".join(out)


def report_csv(rows: list[ConditionResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("name", "value", "threshold", "status"))
    for r in rows:
        w.writerow((r.name, repr(r.value), "" if math.isnan(r.threshold) else repr(r.threshold), r.status))
    return buf.getvalue()
