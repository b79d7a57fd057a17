"""Spectral-gap scaling and path-integral Monte Carlo annealing for
Hamming-weight barrier problems."""

from .problem import (ProblemInstance, TridiagonalOperator,
                      tridiagonal_coefficients, valid_sizes)
from .qmc import (AnnealStepRecord, AnnealTrace, Lattice, QmcParams, anneal,
                  estimate_diag_energy, estimate_offdiag_energy,
                  flip_log_ratio, link_factor, log_weight, metropolis_sweep,
                  run_sweeps, write_anneal_trace_csv)
from .scaling import (POLYNOMIAL_CONSISTENT, SUBPOLYNOMIAL_TREND,
                      SUPERPOLYNOMIAL, AlphaScanResult, CurvatureVerdict,
                      ScalingSeries, alpha_transition_scan, loglog_fit,
                      residual_curvature, scan_minimum_gaps)
from .spectral import (BoundaryMinimumError, DegenerateGapError, GapProfile,
                       ScheduleGaps, all_eigenvalues, gap_at,
                       lowest_two_eigenvalues, minimize_gap,
                       schedule_gap_table, sturm_count, write_gap_profile_csv)

__version__ = "0.1.0"

__all__ = [
    "ProblemInstance", "TridiagonalOperator", "tridiagonal_coefficients",
    "valid_sizes",
    "GapProfile", "ScheduleGaps", "DegenerateGapError", "BoundaryMinimumError",
    "sturm_count", "lowest_two_eigenvalues", "all_eigenvalues", "gap_at",
    "minimize_gap", "schedule_gap_table", "write_gap_profile_csv",
    "ScalingSeries", "CurvatureVerdict", "AlphaScanResult", "loglog_fit",
    "residual_curvature", "scan_minimum_gaps", "alpha_transition_scan",
    "SUPERPOLYNOMIAL", "POLYNOMIAL_CONSISTENT", "SUBPOLYNOMIAL_TREND",
    "QmcParams", "Lattice", "AnnealTrace", "AnnealStepRecord",
    "link_factor", "log_weight", "flip_log_ratio", "metropolis_sweep",
    "run_sweeps", "estimate_diag_energy", "estimate_offdiag_energy",
    "anneal", "write_anneal_trace_csv",
]
