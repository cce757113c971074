import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, linalg, stats

from conftest import XRAY, foil_for_eta
from symprobe.constants import constants, hz_to_omega, mass_from_particles
from symprobe.oscillator import (
    FoilOscillator,
    KickSpec,
    Parity,
    QuadratureError,
    UnsupportedLevelError,
    ground_density,
    hermite_functions,
    kick_amplitudes,
    kick_matrix_element,
    kick_matrix_element_numeric,
    kick_matrix_element_numeric_eta,
    lamb_dicke,
    level_distribution,
    poisson_tail_bound,
    sample_position,
)

HBAR = constants().hbar


def test_width_relations():
    foil = FoilOscillator(1e-19, 1e5)
    assert foil.ground_rms**2 == pytest.approx(HBAR / (2 * 1e-19 * 1e5), rel=1e-14)
    assert foil.width(0) / foil.ground_rms == pytest.approx(math.sqrt(2), rel=1e-14)
    assert foil.width(3) == pytest.approx(math.sqrt(14) * foil.ground_rms, rel=1e-14)


@pytest.mark.parametrize("kwargs", [dict(mass=0, omega=1), dict(mass=1, omega=-1), dict(mass=1, omega=1, level=-1)])
def test_foil_validation(kwargs):
    with pytest.raises(ValueError):
        FoilOscillator(**kwargs)


def test_kick_spec_reflection_is_twice_k():
    kick = KickSpec.reflection(XRAY)
    assert kick.k_transfer == pytest.approx(2 * 2 * math.pi / XRAY)
    with pytest.raises(ValueError):
        KickSpec(-1.0)


def test_lamb_dicke_xray_example():
    foil = FoilOscillator(mass_from_particles(1e15), hz_to_omega(12.6))
    eta = lamb_dicke(foil, KickSpec.reflection(XRAY))
    # direct arithmetic: (4 pi / lambda) sqrt(hbar / (2 m omega))
    expected = 4 * math.pi / XRAY * math.sqrt(HBAR / (2 * 1e15 * 1.67262e-27 * 2 * math.pi * 12.6))
    assert eta == pytest.approx(expected, rel=1e-13)
    assert eta == pytest.approx(0.0793, abs=5e-4)
    # f * eta^2 is mass- and wavelength-fixed; of order 1e-1 Hz for x-ray and 1e15 nucleons
    assert 0.05 < 12.6 * eta**2 < 0.2
    # same eta via W(0): (4 pi / sqrt 2) W / lambda
    assert eta == pytest.approx(4 * math.pi / math.sqrt(2) * foil.width(0) / XRAY, rel=1e-13)


def test_lamb_dicke_red_light_fixed_point():
    mass = mass_from_particles(1e15)
    kick = KickSpec.reflection(700e-9)
    c_red = kick.k_transfer**2 * HBAR / (4 * math.pi * mass)  # f * eta^2 in Hz
    assert 1e-9 <= c_red < 1e-8
    for eta in (0.01, 0.1, 0.5):
        foil = FoilOscillator(mass, hz_to_omega(c_red / eta**2))
        assert lamb_dicke(foil, kick) == pytest.approx(eta, rel=1e-12)


def test_lamb_dicke_zero_kick():
    assert lamb_dicke(FoilOscillator(1.0, 1.0), KickSpec(0.0)) == 0.0


@given(st.floats(1e-3, 1e3), st.floats(1e-20, 1e-10), st.floats(1e-2, 1e6))
def test_lamb_dicke_depends_on_product_m_omega(scale, mass, omega):
    kick = KickSpec.reflection(XRAY)
    a = lamb_dicke(FoilOscillator(mass, omega), kick)
    b = lamb_dicke(FoilOscillator(mass * scale, omega / scale), kick)
    assert b == pytest.approx(a, rel=1e-12)


def test_ground_density_normalization_and_moments():
    foil = FoilOscillator(1e-19, 1e5)
    a = foil.inverse_length
    assert ground_density(foil, 0.0) == pytest.approx(a / math.sqrt(math.pi), rel=1e-15)
    norm, _ = integrate.quad(lambda x: ground_density(foil, x), -10 / a, 10 / a, epsabs=1e-14, epsrel=1e-13)
    assert abs(norm - 1) < 1e-10
    m2, _ = integrate.quad(lambda x: x * x * ground_density(foil, x), -10 / a, 10 / a, epsabs=0, epsrel=1e-13)
    assert m2 == pytest.approx(HBAR / (2 * foil.mass * foil.omega), rel=1e-9)


def test_ground_density_rejects_excited_level():
    with pytest.raises(UnsupportedLevelError):
        ground_density(FoilOscillator(1.0, 1.0, level=1), 0.0)


def test_hermite_functions_orthonormal_and_finite_at_high_order():
    xi, w = np.polynomial.hermite.hermgauss(250)
    psi = hermite_functions(200, xi) * np.exp(xi**2 / 2)
    gram = (psi * w) @ psi.T
    assert np.all(np.isfinite(psi))
    assert np.max(np.abs(gram - np.eye(201))) < 1e-10


@pytest.mark.parametrize(
    "n, parity", [(1, "symmetric"), (3, "symmetric"), (2, "antisymmetric"), (0, "antisymmetric")]
)
def test_parity_selection(n, parity):
    assert kick_matrix_element(n, 0.7, parity) == 0.0


def test_ground_element_eta_one():
    assert kick_matrix_element(0, 1.0, "symmetric") == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert kick_matrix_element(0, 1.0, "symmetric") == pytest.approx(0.6065, abs=1e-4)


def test_large_n_does_not_overflow():
    v = kick_matrix_element(400, 2.5, "symmetric")
    assert 0 < abs(v) < 1e-100


def test_vectorized_amplitudes_match_scalar():
    sym, anti = kick_amplitudes(40, 1.3)
    for n in range(41):
        assert sym[n] == pytest.approx(kick_matrix_element(n, 1.3, Parity.SYMMETRIC), rel=1e-13, abs=1e-300)
        assert anti[n] == pytest.approx(kick_matrix_element(n, 1.3, Parity.ANTISYMMETRIC), rel=1e-13, abs=1e-300)


def test_matrix_exponential_oracle():
    # third route: cos/sin of the truncated position matrix eta (a + a^dagger)
    eta, size = 1.0, 120
    off = np.sqrt(np.arange(1, size))
    x = np.diag(off, 1) + np.diag(off, -1)
    vals, vecs = linalg.eigh(eta * x)
    cos_col = vecs @ (np.cos(vals) * vecs[0])
    sin_col = vecs @ (np.sin(vals) * vecs[0])
    sym, anti = kick_amplitudes(30, eta)
    assert np.max(np.abs(cos_col[:31] - sym)) < 1e-12
    assert np.max(np.abs(sin_col[:31] - anti)) < 1e-12


@pytest.mark.parametrize("eta", [0.05, 0.3, 1.0, 2.5])
def test_numeric_oracle_low_levels(eta):
    foil = foil_for_eta(eta)
    for parity in Parity:
        kick = KickSpec.reflection(XRAY, parity)
        for n in range(0, 12):
            value, err = kick_matrix_element_numeric(n, foil, kick, return_error=True)
            assert err <= 1e-9
            assert value == pytest.approx(kick_matrix_element(n, eta, parity), abs=1e-8)


def test_numeric_identity_kick():
    assert kick_matrix_element_numeric_eta(0, 0.0, "symmetric") == pytest.approx(1.0, abs=1e-12)
    assert kick_matrix_element_numeric_eta(0, 1e-8, "symmetric") == pytest.approx(1.0, abs=1e-12)


def test_numeric_oracle_limits():
    with pytest.raises(ValueError):
        kick_matrix_element_numeric_eta(201, 0.1, "symmetric")
    with pytest.raises(QuadratureError):
        kick_matrix_element_numeric_eta(5, 1.0, "antisymmetric", tol=1e-30)


def test_completeness_closed_form():
    for eta in np.linspace(0.0, 2.5, 26):
        assert abs(level_distribution(eta, 200).sum() - 1) < 1e-9
        assert poisson_tail_bound(eta, 200) < 1e-100


def test_completeness_numeric_oracle():
    eta = 2.5
    total = sum(kick_matrix_element_numeric_eta(n, eta, p) ** 2 for n in range(45) for p in Parity)
    assert abs(total - 1) < 1e-9


def test_sample_position_moments_and_fit(rng):
    foil = FoilOscillator(1e-19, 1e5)
    x = sample_position(foil, rng, 10**6)
    var = foil.ground_rms**2
    assert abs(x.mean()) < 5 * math.sqrt(var / x.size)
    assert abs(x.var() - var) < 5 * var * math.sqrt(2 / x.size)
    assert stats.kstest(x, stats.norm(0, foil.ground_rms).cdf).pvalue > 1e-4


def test_sample_position_deterministic():
    foil = FoilOscillator(1e-19, 1e5)
    a = sample_position(foil, np.random.default_rng(5), 100)
    b = sample_position(foil, np.random.default_rng(5), 100)
    assert np.array_equal(a, b)


@settings(max_examples=50)
@given(st.floats(0.0, 2.5), st.integers(0, 60))
def test_parity_selection_property(eta, n):
    sym = kick_matrix_element(n, eta, "symmetric")
    anti = kick_matrix_element(n, eta, "antisymmetric")
    if n % 2:
        assert sym == 0.0
    else:
        assert anti == 0.0
