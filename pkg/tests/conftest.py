import math

import numpy as np
import pytest

from symprobe.constants import constants
from symprobe.experiment import ExperimentPlan, parity_audit
from symprobe.interferometer import InterferometerConfig, PhotonProbe
from symprobe.oscillator import FoilOscillator

XRAY = 0.1e-9
RED = 700e-9

_acceptance = {}


def foil_for_eta(eta, wavelength=XRAY, mass=1e-19):
    """Foil whose elastic-reflection Lamb-Dicke parameter equals ``eta``."""
    k_transfer = 4 * math.pi / wavelength
    omega = k_transfer**2 * constants().hbar / (2 * mass * eta**2)
    return FoilOscillator(mass, omega)


def make_plan(eta=0.1, topology="open_loop", wavelength=XRAY, **kwargs):
    config = InterferometerConfig(topology, PhotonProbe(wavelength))
    return ExperimentPlan(config, foil_for_eta(eta, wavelength), **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    label = marker.args[0]
    _acceptance[label] = _acceptance.get(label, True) and call.excinfo is None


def pytest_terminal_summary(terminalreporter):
    if _acceptance:
        terminalreporter.section("acceptance criteria")
        for label, ok in sorted(_acceptance.items(), key=lambda x: int(x[0].split(":")[0][2:])):
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {label}")
    audit = parity_audit()
    terminalreporter.write_line(
        f"parity audit: {audit['checked']} coherent events checked, {audit['violations']} violations"
    )


def pytest_sessionfinish(session, exitstatus):
    if parity_audit()["violations"] and exitstatus == 0:
        session.exitstatus = 1
