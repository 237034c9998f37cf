"""Trajectory large deviations of the random energy model and the QREM.

Closed forms live in ``analytic``; finite-N numerics in ``remfield``,
``operator``, ``spectral``, ``resolvent`` and ``trajectories``.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .analytic import (
    BETA_C,
    CONSTANTS,
    INFINITE_RATE,
    boundary_curves,
    classify_phase,
    p_rem,
    qrem_pressure,
    rate_function,
    theta_limit,
)
from .operator import GeneratorSpec, StateVector, flat_vector
from .remfield import RemField, empirical_pressure, extreme_set, min_energy
from .spectral import expm_action, extreme_eigs, projector_overlap, scgf_finite, shift_statistic
from .resolvent import gamma_n, l1_bound_report, solve_resolvent
from .trajectories import activity_estimate, mgf_estimate, sample_trajectory

__all__ = [
    "BACKEND", "BETA_C", "CONSTANTS", "INFINITE_RATE", "boundary_curves", "classify_phase",
    "p_rem", "qrem_pressure", "rate_function", "theta_limit", "GeneratorSpec", "StateVector",
    "flat_vector", "RemField", "empirical_pressure", "extreme_set", "min_energy", "expm_action",
    "extreme_eigs", "projector_overlap", "scgf_finite", "shift_statistic", "gamma_n",
    "l1_bound_report", "solve_resolvent", "activity_estimate", "mgf_estimate",
    "sample_trajectory",
]
