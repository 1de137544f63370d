"""Numerical verification of long-range scattering for Hartree equations in Gevrey spaces."""

from .asymptotic_engine import AsymptoticHierarchy, solve_hierarchy, verify_decay
from .auxiliary_solver import AuxState, SolverConfig, Trajectory, cauchy_from_t0, integrate
from .estimators import H0Spec, RhoSchedule, build_schedules, compute_table
from .gevrey_weights import Variant, WeightParams, eval_weight
from .harness import ExperimentConfig, load_config, run
from .spectral_field import Grid, NormSpec, SpectralField, k_norm, y_norm
from .wave_operators import LadderConfig, lambda_map, omega, omega0

__all__ = [
    "AsymptoticHierarchy", "solve_hierarchy", "verify_decay",
    "AuxState", "SolverConfig", "Trajectory", "cauchy_from_t0", "integrate",
    "H0Spec", "RhoSchedule", "build_schedules", "compute_table",
    "Variant", "WeightParams", "eval_weight",
    "ExperimentConfig", "load_config", "run",
    "Grid", "NormSpec", "SpectralField", "k_norm", "y_norm",
    "LadderConfig", "lambda_map", "omega", "omega0",
]
