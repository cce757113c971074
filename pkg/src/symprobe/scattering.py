"""Closed-form photon-foil scattering probabilities and signal/noise ratios.

All functions are parametrized by the Lamb-Dicke parameter ``eta``. Those
marked as vectorized accept numpy arrays as well as floats.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .constants import constants

LAMB_DICKE_WARN_ETA = 0.3
# anchors of the qualitative R curve: R -> R_bound below, R -> R_bound / 2 above
QUALITATIVE_LOW = 0.3
QUALITATIVE_HIGH = 1.5


class Mode(str, enum.Enum):
    EXACT = "exact"
    LAMB_DICKE = "lamb_dicke"


class SingularInputError(ValueError):
    """Raised for the 0/0 point eta = 0 of the ratio functions."""


@dataclass(frozen=True)
class ScatterCoupling:
    """Overall scattering scale.

    Lumps the polarizability/field prefactor and the total scattering
    probability into one number. It multiplies absolute event rates only;
    every ratio in this module is independent of it.
    """

    efficiency: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency!r}")


@dataclass(frozen=True)
class ScatterProbabilities:
    p00: float
    p_even_total: float
    p_odd_total: float
    eta: float

    def scaled(self, coupling: ScatterCoupling) -> "ScatterProbabilities":
        e = coupling.efficiency
        return ScatterProbabilities(self.p00 * e, self.p_even_total * e, self.p_odd_total * e, self.eta)


def _as_eta(eta):
    arr = np.asarray(eta, dtype=float)
    if np.any(~(arr >= 0)):
        raise ValueError(f"eta must be non-negative, got {eta!r}")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def debye_waller(eta):
    """Probability exp(-eta^2) that the foil stays in its ground level. Vectorized."""
    e = _as_eta(eta)
    return _out(np.exp(-e * e))


def p_odd_exact(eta):
    """Total odd-level excitation probability exp(-eta^2) sinh(eta^2). Vectorized."""
    e = _as_eta(eta)
    return _out(-0.5 * np.expm1(-2.0 * e * e))


def p_even_exact(eta):
    """Total even-level probability (including n = 0), exp(-eta^2) cosh(eta^2). Vectorized."""
    e = _as_eta(eta)
    return _out(0.5 * (1.0 + np.exp(-2.0 * e * e)))


def excitation_probabilities(eta: float, mode: Mode | str = Mode.EXACT) -> ScatterProbabilities:
    """Even/odd excitation totals for a ground-state foil.

    ``lamb_dicke`` is the second-order expansion (1 - eta^2, eta^2); there
    p00 coincides with the even total because even levels n >= 2 only enter
    at fourth order. Values are clipped into [0, 1] where the expansion
    breaks down.
    """
    mode = Mode(mode)
    eta = float(_as_eta(eta))
    if mode is Mode.EXACT:
        return ScatterProbabilities(debye_waller(eta), p_even_exact(eta), p_odd_exact(eta), eta)
    if eta > LAMB_DICKE_WARN_ETA:
        warnings.warn(
            f"Lamb-Dicke expansion used at eta={eta:g} > {LAMB_DICKE_WARN_ETA}", RuntimeWarning, stacklevel=2
        )
    p_odd = min(eta * eta, 1.0)
    return ScatterProbabilities(1.0 - p_odd, 1.0 - p_odd, p_odd, eta)


def d2_fraction_localized(eta):
    """Ground-density average of sin^2(2 k X): (1 - exp(-2 eta^2)) / 2. Vectorized.

    This is the D2 fraction expected from a foil localized at a position
    drawn from its ground-state density.
    """
    e = _as_eta(eta)
    return _out(-0.5 * np.expm1(-2.0 * e * e))


def _require_positive(eta, what):
    e = _as_eta(eta)
    if np.any(e == 0):
        raise SingularInputError(f"{what} is 0/0 at eta = 0; use the limit-aware variant")
    return e


def ratio_R(eta, mode: Mode | str = Mode.EXACT):
    """Odd-excitation noise over localization signal, (1 - P_even) / D2 fraction.

    In exact mode the numerator is evaluated as the odd total, which equals
    1 - P_even without the cancellation at small eta. Vectorized.
    """
    mode = Mode(mode)
    e = _require_positive(eta, "R")
    if mode is Mode.EXACT:
        num = -0.5 * np.expm1(-2.0 * e * e)
    else:
        num = np.minimum(e * e, 1.0)
    return _out(num / (-0.5 * np.expm1(-2.0 * e * e)))


def r_bound(eta):
    """Upper bound (1 - P00) / D2 fraction = 2 (1 - e^{-eta^2}) / (1 - e^{-2 eta^2}). Vectorized.

    Evaluated through the equivalent form 2 / (1 + e^{-eta^2}).
    """
    e = _require_positive(eta, "R_bound")
    return _out(2.0 / (1.0 + np.exp(-e * e)))


def r_bound_ratio_form(eta):
    """R_bound as the literal quotient of the two probabilities (no simplification)."""
    e = _require_positive(eta, "R_bound")
    return _out(-np.expm1(-e * e) / (-0.5 * np.expm1(-2.0 * e * e)))


def r_bound_from_parameters(mass: float, omega: float, wavelength: float) -> float:
    """R_bound in terms of a = sqrt(m omega / hbar) and b = 8 pi / lambda.

    2 (1 - exp(-b^2 / 8 a^2)) / (1 - exp(-b^2 / 4 a^2)).
    """
    a = math.sqrt(mass * omega / constants().hbar)
    b = 8.0 * math.pi / wavelength
    x = b * b / (4.0 * a * a)
    if x == 0:
        raise SingularInputError("R_bound is 0/0 when b / a = 0")
    return 2.0 * math.expm1(-x / 2.0) / math.expm1(-x)


def r_bound_limit(eta):
    """``r_bound`` extended continuously to eta = 0 (value 1). Vectorized."""
    e = _as_eta(eta)
    return _out(2.0 / (1.0 + np.exp(-e * e)))


def ratio_R_limit(eta, mode: Mode | str = Mode.EXACT):
    """``ratio_R`` extended continuously to eta = 0 (value 1). Vectorized."""
    e = np.atleast_1d(_as_eta(eta)).astype(float)
    out = np.ones_like(e)
    pos = e > 0
    if np.any(pos):
        out[pos] = ratio_R(e[pos], mode)
    return _out(out.reshape(np.shape(eta)))


def _qualitative_weight(eta):
    # smoothstep in log(eta) from 1 (below QUALITATIVE_LOW) to 1/2 (above QUALITATIVE_HIGH)
    t = np.log(eta / QUALITATIVE_LOW) / math.log(QUALITATIVE_HIGH / QUALITATIVE_LOW)
    t = np.clip(t, 0.0, 1.0)
    return 1.0 - 0.5 * t * t * (3.0 - 2.0 * t)


def r_qualitative(eta):
    """Sketch of the expected R: R_bound for small eta, R_bound / 2 for large eta.

    Between the anchors the multiplier falls from 1 to 1/2 along a cubic
    smoothstep in log(eta), which is monotone and C1 at both anchors. Only
    the asymptotes are physical; the crossover shape is a drawing choice.
    Vectorized.
    """
    e = _require_positive(eta, "R_qualitative")
    return _out(_qualitative_weight(e) * r_bound(e))


def qualitative_peak() -> tuple[float, float]:
    """Location and height of the maximum of ``r_qualitative``."""
    res = optimize.minimize_scalar(
        lambda x: -r_qualitative(math.exp(x)),
        bounds=(math.log(QUALITATIVE_LOW), math.log(QUALITATIVE_HIGH)),
        method="bounded",
        options={"xatol": 1e-10},
    )
    eta_star = math.exp(res.x)
    return eta_star, r_qualitative(eta_star)
