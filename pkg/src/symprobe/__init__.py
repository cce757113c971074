"""Simulator and feasibility toolkit for a parity-interferometer probe of a mirror foil."""
from .collapse import CollapseModel, collapse_rate
from .experiment import ExperimentPlan, aggregate, simulate
from .interferometer import InterferometerConfig, PhotonProbe, Topology
from .oscillator import FoilOscillator, KickSpec, Parity, kick_matrix_element, lamb_dicke
from .scattering import ScatterCoupling, debye_waller, d2_fraction_localized, r_bound

__version__ = "0.1.0"

__all__ = [
    "CollapseModel",
    "ExperimentPlan",
    "FoilOscillator",
    "InterferometerConfig",
    "KickSpec",
    "Parity",
    "PhotonProbe",
    "ScatterCoupling",
    "Topology",
    "aggregate",
    "collapse_rate",
    "d2_fraction_localized",
    "debye_waller",
    "kick_matrix_element",
    "lamb_dicke",
    "r_bound",
    "simulate",
]
