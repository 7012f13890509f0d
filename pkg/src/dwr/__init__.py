"""Decorrelated weighting regression for prediction under distribution shift."""

from .baselines import BaselineKind, BaselineSpec, iilasso_fit, lasso_fit, ols_fit, ridge_fit
from .core import (
    FitResult,
    HyperParams,
    decorrelation_gradient,
    decorrelation_loss,
    dwr_fit,
    kde_oracle_weights,
    learn_weights,
    total_objective,
    total_objective_gradient,
    weight_objective,
    weighted_least_squares,
)
from .data import Dataset, GroundTruth, read_dataset_csv, write_dataset_csv
from .harness import RealDataConfig, ScenarioConfig, emit_plots, run_real, run_scenario, run_sweep
from .metrics import (
    MetricsReport,
    beta_error,
    distribution_distance,
    omitted_variable_diagnostics,
    pearson_matrix,
    rmse,
    stability_metrics,
)
from .synthetic import (
    EnvironmentSpec,
    GraphKind,
    OutcomeForm,
    OutcomeSpec,
    generate_covariates,
    generate_environment,
    generate_outcome,
    select_environment,
)

__version__ = "0.1.0"
