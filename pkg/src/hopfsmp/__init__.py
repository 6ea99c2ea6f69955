"""Barriers, counterexamples and subsolutions for sum_i g_i(u_{x_i}^2) u_{x_i x_i} = 0."""

from .profiles import (DegeneracyProfile, FlatOnInterval, InverseLogPower, InverseLogSquare, Laplacian, Power,
                       Tabulated, check_assumptions, estimate_K, profile_from_json)
from .gintegral import Scale, compute_G, classify_G
from .barriers import build_hopf_barrier, solve_barrier_ode
from .counterexample import build_counterexample
from .subsolution import assemble_glued_subsolution
from .verifier import smp_scenario

__all__ = [
    "DegeneracyProfile", "FlatOnInterval", "InverseLogPower", "InverseLogSquare", "Laplacian", "Power",
    "Tabulated", "check_assumptions", "estimate_K", "profile_from_json", "Scale", "compute_G", "classify_G",
    "build_hopf_barrier", "solve_barrier_ode", "build_counterexample", "assemble_glued_subsolution",
    "smp_scenario",
]
__version__ = "0.1.0"
