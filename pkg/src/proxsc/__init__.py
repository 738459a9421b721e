"""Proximal-inference synthetic controls.

Synthetic-control weight estimation from proxy moment conditions via GMM,
treatment-effect estimation and inference on the treated unit, conformal
prediction intervals for short post-periods, baseline OLS comparators, and a
Monte Carlo harness.
"""

__version__ = "0.1.0"

from .baselines import OlsFit, fit_ols
from .conformal import ConformalResult, conformal_interval
from .effects import (
    EffectReport,
    estimate_catt,
    fit_trend,
    moving_average,
    placebo_run,
    residual_series,
)
from .estimators import FitResult, fit_bridge, fit_pi_joint, fit_pi_two_stage, run_estimator
from .exceptions import (
    ConfigError,
    DataError,
    GridError,
    IdentificationError,
    NumericsError,
    ProxscError,
)
from .gmm import GmmFit, hac_covariance, hc_covariance, solve_linear, solve_nonlinear
from .moments import (
    EffectBasis,
    MomentSystem,
    add_covariates,
    build_bridge_moments,
    build_joint_moments,
    build_weight_moments,
    constant_basis,
    linear_basis,
    piecewise_basis,
    quadratic_basis,
    weight_moments_from_panel,
)
from .panel import PanelDataset, RoleMap, ingest, split
from .simulate import SimDesign, SimTruth, generate, run_monte_carlo

__all__ = [
    "__version__",
    "PanelDataset", "RoleMap", "ingest", "split",
    "MomentSystem", "EffectBasis", "build_weight_moments", "build_joint_moments",
    "build_bridge_moments", "add_covariates", "weight_moments_from_panel",
    "constant_basis", "linear_basis", "quadratic_basis", "piecewise_basis",
    "GmmFit", "solve_linear", "solve_nonlinear", "hc_covariance", "hac_covariance",
    "EffectReport", "residual_series", "estimate_catt", "fit_trend", "placebo_run",
    "moving_average",
    "ConformalResult", "conformal_interval",
    "SimDesign", "SimTruth", "generate", "run_monte_carlo",
    "OlsFit", "fit_ols",
    "FitResult", "fit_pi_joint", "fit_pi_two_stage", "fit_bridge", "run_estimator",
    "ProxscError", "DataError", "ConfigError", "IdentificationError",
    "NumericsError", "GridError",
]
