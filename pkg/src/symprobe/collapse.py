"""Induced-localization (collapse) models."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constants import SECONDS_PER_YEAR
from .oscillator import FoilOscillator, sample_position

GRW_RATE = 1e-15  # per particle per second


class Variant(str, enum.Enum):
    NONE = "none"
    GRW = "grw"
    POWER_LAW = "power_law"


@dataclass(frozen=True)
class CollapseModel:
    variant: Variant = Variant.GRW
    per_particle_rate: float = GRW_RATE
    exponent: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.per_particle_rate >= 0:
            raise ValueError(f"per_particle_rate must be >= 0, got {self.per_particle_rate!r}")

    @classmethod
    def none(cls):
        return cls(Variant.NONE, 0.0)

    @classmethod
    def forced(cls):
        """Infinite rate: every trial collapses at t = 0."""
        return cls(Variant.GRW, math.inf)


@dataclass(frozen=True)
class NoCollapse:
    pass


@dataclass(frozen=True)
class CollapseAt:
    t: float


def collapse_rate(model: CollapseModel, particle_count: float) -> float:
    """Total localization rate (1/s) of a body of ``particle_count`` nucleons."""
    if particle_count < 1:
        raise ValueError("particle_count must be >= 1")
    if model.variant is Variant.NONE:
        return 0.0
    if model.variant is Variant.GRW:
        return particle_count * model.per_particle_rate
    return model.per_particle_rate * particle_count**model.exponent


def collapse_probability(rate: float, window: float) -> float:
    """P(at least one event in ``window``) = 1 - exp(-rate * window)."""
    if math.isinf(rate):
        return 1.0
    return -math.expm1(-rate * window)


def collapse_times(rate: float, u) -> np.ndarray:
    """First-event times from uniforms ``u`` in (0, 1) by inversion."""
    u = np.asarray(u, dtype=float)
    if rate == 0:
        return np.full(u.shape, np.inf)
    if math.isinf(rate):
        return np.zeros(u.shape)
    return -np.log1p(-u) / rate


def sample_collapse(model: CollapseModel, particle_count: float, window: float, rng: np.random.Generator):
    if not window > 0:
        raise ValueError("window must be positive")
    t = float(collapse_times(collapse_rate(model, particle_count), rng.random()))
    return CollapseAt(t) if t <= window else NoCollapse()


def sample_localized_position(foil: FoilOscillator, rng: np.random.Generator, size=None):
    """Localization position, distributed as the ground-state density."""
    return sample_position(foil, rng, size)


def expected_events(rate: float, *, setups: int = 1, trial_length: float = 1.0, duration: float = SECONDS_PER_YEAR):
    """Expected collapse count for ``setups`` apparatus repeating ``trial_length`` trials over ``duration``."""
    trials = setups * duration / trial_length
    return trials * collapse_probability(rate, trial_length)
