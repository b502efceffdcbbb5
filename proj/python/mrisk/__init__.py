"""Robust M-estimation with out-of-sample risk estimates and lambda tuning."""

from ._mrisk import (
    BaseLoss,
    Dataset,
    FitOptions,
    FitResult,
    InvalidParameter,
    NoConvergence,
    NoiseModel,
    NumericalError,
    RiskEstimate,
    ScaledLoss,
    StructuralError,
    SystemSolution,
    UnsupportedOperation,
    alpha_curve,
    estimate_risk,
    fit,
    fit_ridge,
    generate_dataset,
    oracle_risk,
    read_dataset_csv,
    record_columns,
    run_experiment,
    solve_system,
    system_residuals,
    tune,
    write_dataset_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
