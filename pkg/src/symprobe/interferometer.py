"""Photon routing through the parity-measuring interferometer.

The beam splitter is an ideal 50/50 splitter and the phase shifter cancels
its pi/2 phase, so detector D1 projects onto the symmetric photon state and
D2 onto the antisymmetric one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constants import constants
from .oscillator import Parity


class Topology(str, enum.Enum):
    CLOSED_LOOP = "closed_loop"
    OPEN_LOOP = "open_loop"
    SEMI_CLOSED = "semi_closed"


class Detector(str, enum.Enum):
    D1 = "D1"
    D2 = "D2"


class SingularityError(ValueError):
    pass


@dataclass(frozen=True)
class PhotonProbe:
    wavelength: float  # m

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength!r}")

    @classmethod
    def from_nm(cls, wavelength_nm: float) -> "PhotonProbe":
        return cls(wavelength_nm * 1e-9)

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def energy(self) -> float:
        return constants().hbar * constants().c * self.k


@dataclass(frozen=True)
class InterferometerConfig:
    topology: Topology
    photon: PhotonProbe
    transmittance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        if self.transmittance != 0.0:
            raise ValueError("mirror transmittance is not modelled; it must be 0")


@dataclass(frozen=True)
class Coherent:
    foil_parity: Parity


@dataclass(frozen=True)
class Localized:
    x_loc: float


def localization_intensity_ratio(x_loc, k):
    """Fractions (I1, I2) = (cos^2(2 k X), sin^2(2 k X)) for a foil localized at X."""
    phase = 2.0 * np.asarray(k, dtype=float) * np.asarray(x_loc, dtype=float)
    if not np.all(np.isfinite(phase)):
        raise ValueError("x_loc and k must be finite")
    i2 = np.sin(phase) ** 2
    i1 = 1.0 - i2
    if np.ndim(i2) == 0:
        return float(i1), float(i2)
    return i1, i2


def suppression_factor(width: float, wavelength: float, *, pole_tol: float = 1e-9) -> float:
    """Representative I2/I1 = tan^2(4 pi W / lambda) for a localization at X = W."""
    if not (width > 0 and wavelength > 0):
        raise ValueError("width and wavelength must be positive")
    arg = 4.0 * math.pi * width / wavelength
    if abs(math.cos(arg)) < pole_tol:
        raise SingularityError(f"tan^2 pole at 4 pi W / lambda = {arg!r}")
    return math.tan(arg) ** 2


def suppression_regime(width: float, wavelength: float) -> str:
    """'suppressed' while 4 pi W / lambda <= 1, else 'unsuppressed'."""
    return "unsuppressed" if 4.0 * math.pi * width / wavelength > 1.0 else "suppressed"


def route_photon(config: InterferometerConfig, outcome, rng: np.random.Generator) -> Detector:
    """Detector reached by one photon given the foil outcome."""
    if isinstance(outcome, Coherent):
        return Detector.D1 if Parity(outcome.foil_parity) is Parity.SYMMETRIC else Detector.D2
    if isinstance(outcome, Localized):
        if config.topology is Topology.SEMI_CLOSED:
            return Detector.D1
        _, i2 = localization_intensity_ratio(outcome.x_loc, config.photon.k)
        return Detector.D2 if rng.random() < i2 else Detector.D1
    raise TypeError(f"unknown outcome {outcome!r}")


def route_batch(topology: Topology, k: float, collapsed, x_loc, foil_level, u) -> np.ndarray:
    """Vectorized routing; returns a bool array, True for D2.

    ``u`` are uniforms in (0, 1) used only by localized photons. Entries of
    ``x_loc`` / ``foil_level`` not relevant to a row are ignored.
    """
    collapsed = np.asarray(collapsed, dtype=bool)
    coherent_d2 = (np.asarray(foil_level) % 2) == 1
    if Topology(topology) is Topology.SEMI_CLOSED:
        localized_d2 = np.zeros_like(collapsed)
    else:
        x = np.where(collapsed, x_loc, 0.0)
        localized_d2 = np.asarray(u) < np.sin(2.0 * k * x) ** 2
    return np.where(collapsed, localized_d2, coherent_d2)
