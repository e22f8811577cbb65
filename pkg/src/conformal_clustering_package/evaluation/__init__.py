from .coverage import CoverageReport, coverage_under, evaluate_coverage, oracle_permutation
from .diagnostics import (
    DiagnosticEstimate,
    DiagnosticsReport,
    coverage_bound_rhs,
    estimate_estimation_error,
    estimate_stability_upper,
    exact_product_l1,
    hellinger_product_bound,
    hellinger_squared,
    run_diagnostics,
    run_diagnostics_sweep,
)

__all__ = [
    "CoverageReport",
    "coverage_under",
    "evaluate_coverage",
    "oracle_permutation",
    "DiagnosticEstimate",
    "DiagnosticsReport",
    "coverage_bound_rhs",
    "estimate_estimation_error",
    "estimate_stability_upper",
    "exact_product_l1",
    "hellinger_product_bound",
    "hellinger_squared",
    "run_diagnostics",
    "run_diagnostics_sweep",
]
