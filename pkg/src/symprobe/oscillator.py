"""Center-of-mass harmonic oscillator of the mirror foil.

Positions are handled in SI metres at the API surface and in the
dimensionless coordinate ``xi = x * sqrt(m omega / hbar)`` internally, where
the ground state is ``pi**-0.25 * exp(-xi**2 / 2)`` and the position operator
reads ``x = sqrt(hbar / 2 m omega) (a + a^dagger)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .constants import constants, hz_to_omega, mass_from_particles

DEFAULT_N_MAX = 200
QUADRATURE_TOL = 1e-9


class Parity(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"


class QuadratureError(RuntimeError):
    pass


class UnsupportedLevelError(ValueError):
    pass


@dataclass(frozen=True)
class FoilOscillator:
    mass: float  # kg
    omega: float  # rad / s
    level: int = 0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"foil mass must be positive, got {self.mass!r}")
        if not self.omega > 0:
            raise ValueError(f"foil omega must be positive, got {self.omega!r}")
        if self.level < 0 or int(self.level) != self.level:
            raise ValueError(f"level must be a non-negative integer, got {self.level!r}")

    @classmethod
    def from_particles(cls, particle_count: float, frequency_hz: float, level: int = 0):
        return cls(mass_from_particles(particle_count), hz_to_omega(frequency_hz), level)

    @property
    def inverse_length(self) -> float:
        """``a = sqrt(m omega / hbar)``, the inverse oscillator length (1/m)."""
        return math.sqrt(self.mass * self.omega / constants().hbar)

    @property
    def ground_rms(self) -> float:
        """Root of the ground-state variance <x^2>_0 = hbar / (2 m omega)."""
        return math.sqrt(constants().hbar / (2.0 * self.mass * self.omega))

    def width(self, n: int | None = None) -> float:
        """Classical-turning-point width W(n) = sqrt(hbar (n + 1/2) / (m omega / 2)).

        Defaults to the occupied level. W(0) is sqrt(2) times ``ground_rms``.
        """
        n = self.level if n is None else n
        return math.sqrt(constants().hbar * (n + 0.5) / (0.5 * self.mass * self.omega))

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def particle_count(self) -> float:
        return self.mass / constants().nucleon_mass


@dataclass(frozen=True)
class KickSpec:
    k_transfer: float  # 1/m
    parity: Parity = Parity.SYMMETRIC

    def __post_init__(self):
        if not self.k_transfer >= 0:
            raise ValueError(f"k_transfer must be non-negative, got {self.k_transfer!r}")
        object.__setattr__(self, "parity", Parity(self.parity))

    @classmethod
    def reflection(cls, wavelength: float, parity: Parity | str = Parity.SYMMETRIC):
        """Kick from elastic back-reflection: k_in + k_out = 2k."""
        if not wavelength > 0:
            raise ValueError("wavelength must be positive")
        return cls(2.0 * 2.0 * math.pi / wavelength, Parity(parity))


def lamb_dicke(foil: FoilOscillator, kick: KickSpec) -> float:
    """Lamb-Dicke parameter eta = k_transfer * sqrt(hbar / (2 m omega))."""
    return kick.k_transfer * foil.ground_rms


def ground_density(foil: FoilOscillator, x):
    """Ground-state position density (1/m) evaluated at ``x`` (m)."""
    if foil.level != 0:
        raise UnsupportedLevelError("only the ground-state density is available")
    a = foil.inverse_length
    x = np.asarray(x, dtype=float)
    out = a / math.sqrt(math.pi) * np.exp(-((a * x) ** 2))
    return float(out) if out.ndim == 0 else out


def _check_eta(eta: float) -> None:
    if not eta >= 0:
        raise ValueError(f"eta must be non-negative, got {eta!r}")


def _selected(n: int, parity: Parity) -> bool:
    return (n % 2 == 0) == (parity is Parity.SYMMETRIC)


def kick_matrix_element(n: int, eta: float, parity: Parity | str) -> float:
    """<n| cos(eta (a + a^dagger)) |0> or <n| sin(...) |0>.

    From <n|exp(i eta (a + a^dagger))|0> = exp(-eta^2/2) (i eta)^n / sqrt(n!),
    the cosine keeps even n with sign (-1)^(n/2) and the sine keeps odd n
    with sign (-1)^((n-1)/2). The magnitude is built in log space so large n
    cannot overflow.
    """
    parity = Parity(parity)
    if n < 0:
        raise ValueError("level must be non-negative")
    _check_eta(eta)
    if not _selected(n, parity):
        return 0.0
    if eta == 0.0:
        return 1.0 if n == 0 else 0.0
    log_mag = -0.5 * eta * eta + n * math.log(eta) - 0.5 * math.lgamma(n + 1)
    sign = -1.0 if (n // 2) % 2 else 1.0
    return sign * math.exp(log_mag)


def kick_amplitudes(n_max: int, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``kick_matrix_element`` for n = 0..n_max, both parities."""
    _check_eta(eta)
    n = np.arange(n_max + 1)
    if eta == 0.0:
        mag = (n == 0).astype(float)
    else:
        mag = np.exp(-0.5 * eta * eta + n * math.log(eta) - 0.5 * special.gammaln(n + 1))
    sign = np.where((n // 2) % 2 == 1, -1.0, 1.0)
    even = n % 2 == 0
    return np.where(even, sign * mag, 0.0), np.where(even, 0.0, sign * mag)


def level_distribution(eta: float, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """Probability of ending in level n after a kick, n = 0..n_max."""
    sym, anti = kick_amplitudes(n_max, eta)
    return sym**2 + anti**2


def poisson_tail_bound(eta: float, n_max: int = DEFAULT_N_MAX) -> float:
    """Probability mass above ``n_max`` (levels are Poisson with mean eta^2)."""
    from scipy import stats

    return float(stats.poisson.sf(n_max, eta * eta))


def hermite_functions(n_max: int, xi) -> np.ndarray:
    """Normalized Hermite functions psi_0..psi_n_max at ``xi``.

    Uses psi_{n+1} = sqrt(2/(n+1)) xi psi_n - sqrt(n/(n+1)) psi_{n-1}, which
    stays O(1) where raw Hermite polynomials overflow.
    Returns shape ``(n_max + 1,) + xi.shape``.
    """
    xi = np.asarray(xi, dtype=float)
    psi = np.empty((n_max + 1,) + xi.shape)
    psi[0] = math.pi**-0.25 * np.exp(-0.5 * xi * xi)
    if n_max >= 1:
        psi[1] = math.sqrt(2.0) * xi * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = math.sqrt(2.0 / (n + 1)) * xi * psi[n] - math.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def _numeric_amplitude(n, eta, parity, tol, n_max):
    if n > n_max:
        raise ValueError(f"level {n} exceeds n_max={n_max}")
    parity = Parity(parity)
    trig = np.cos if parity is Parity.SYMMETRIC else np.sin
    q = math.sqrt(2.0) * eta  # k_transfer * x in units of xi
    # beyond |xi| = 12 the factor psi_0 is below 1e-31
    lim = 12.0 + math.sqrt(2.0 * n + 1.0)

    def f(xi):
        psi = hermite_functions(n, xi)
        return psi[n] * psi[0] * trig(q * xi)

    value, err = integrate.quad(f, -lim, lim, epsabs=1e-14, epsrel=1e-12, limit=500)
    if err > tol:
        raise QuadratureError(f"quadrature error {err:.3g} exceeds {tol:g} (n={n}, eta={eta})")
    return value, err


def kick_matrix_element_numeric(
    n: int,
    foil: FoilOscillator,
    kick: KickSpec,
    *,
    n_max: int = DEFAULT_N_MAX,
    tol: float = QUADRATURE_TOL,
    return_error: bool = False,
):
    """Quadrature oracle for <n| cos|sin (k_transfer x) |0>.

    Integrates psi_n(x) trig(k x) psi_0(x) with adaptive quadrature and
    explicitly evaluated Hermite functions. Raises QuadratureError when the
    error estimate exceeds ``tol``; with ``return_error`` the estimate is
    returned alongside the value.
    """
    if foil.level != 0:
        raise UnsupportedLevelError("kicks are computed from the ground state")
    value, err = _numeric_amplitude(n, lamb_dicke(foil, kick), kick.parity, tol, n_max)
    return (value, err) if return_error else value


def kick_matrix_element_numeric_eta(n, eta, parity, *, n_max=DEFAULT_N_MAX, tol=QUADRATURE_TOL):
    """Same oracle parametrized directly by eta."""
    _check_eta(eta)
    return _numeric_amplitude(n, eta, parity, tol, n_max)[0]


def sample_position(foil: FoilOscillator, rng: np.random.Generator, size=None):
    """Draw positions (m) from the ground-state density."""
    if foil.level != 0:
        raise UnsupportedLevelError("only ground-state sampling is available")
    return rng.normal(0.0, foil.ground_rms, size=size)
