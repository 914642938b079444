"""Spectral optimal partitions, Fucik curves and monotonicity formulas on lattices."""
from ._backend import BACKEND, HAVE_NUMBA
from .geometry import Grid, build_grid, connected_components, dirichlet_energy, mass
from .spectral import EigenResult, lambda1_analytic, principal_eigenpair, rayleigh
from .partition import (PartitionOptions, PartitionResult, evaluate_partition, extremality_check,
                        min_max_partition, optimize_partition, postprocess_connect)
from .fucik import FucikOptions, c_hk, c_of_r, check_curve_properties, residual_check, trace_curve
from .oned import c_k1_bruteforce, c_k1_closed, fucik_1d_membership
from .monotonicity import (beta_circle_opt, beta_known, check_monotone, phi_acf, phi_competition,
                           phi_disjoint, solve_competition)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "HAVE_NUMBA", "Grid", "build_grid", "connected_components", "dirichlet_energy",
    "mass", "EigenResult", "lambda1_analytic", "principal_eigenpair", "rayleigh",
    "PartitionOptions", "PartitionResult", "evaluate_partition", "extremality_check",
    "min_max_partition", "optimize_partition", "postprocess_connect", "FucikOptions", "c_hk",
    "c_of_r", "check_curve_properties", "residual_check", "trace_curve", "c_k1_bruteforce",
    "c_k1_closed", "fucik_1d_membership", "beta_circle_opt", "beta_known", "check_monotone",
    "phi_acf", "phi_competition", "phi_disjoint", "solve_competition",
]
