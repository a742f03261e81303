"""Empirical probing of the (conditional) definiteness of distance-based kernels."""

__version__ = "0.1.0"

from .definiteness import (
    DEFAULT_EPSILON,
    CnsdReport,
    KernelConfig,
    cnsd_check,
    cnsd_transform,
    kernel_matrix,
    psd_check,
    symmetric_eigenvalues,
)
from .distances import MEASURES, PERMUTATION_MEASURES, distance, distance_matrix, get_measure, lexicographic_rank
from .evolver import EaConfig, EaResult, ea_probe
from .gpverify import fit_gp, predict, rmse_experiment
from .sampler import ProbeReport, brute_force_probe, sample_probe

__all__ = [
    "DEFAULT_EPSILON",
    "CnsdReport",
    "KernelConfig",
    "cnsd_check",
    "cnsd_transform",
    "kernel_matrix",
    "psd_check",
    "symmetric_eigenvalues",
    "MEASURES",
    "PERMUTATION_MEASURES",
    "distance",
    "distance_matrix",
    "get_measure",
    "lexicographic_rank",
    "EaConfig",
    "EaResult",
    "ea_probe",
    "fit_gp",
    "predict",
    "rmse_experiment",
    "ProbeReport",
    "brute_force_probe",
    "sample_probe",
]
