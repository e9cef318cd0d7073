"""Scalar-on-function linear regression in the RKHS of the predictor's covariance."""

from .errors import ArgumentError, DomainError, NumericError, ParseError
from .estimators import (
    FunctionalDataset,
    GridOlsModel,
    FpcrModel,
    TikhonovModel,
    cross_covariance,
    default_gamma,
    fit_fpcr,
    fit_grid_ols,
    fit_impact_ols,
    fit_tikhonov,
    predict,
    rkhs_error,
)
from .harness import (
    EstimatorSpec,
    ExperimentPlan,
    ReportTable,
    adjusted_r2,
    prediction_error,
    run_experiment,
    run_rkhs_experiment,
    split,
)
from .io import read_dataset, write_dataset
from .kernels import (
    BrownianKernel,
    EmpiricalKernel,
    FractionalBrownianKernel,
    Grid,
    empirical_kernel,
    eval_kernel,
    gram,
)
from .operator import DiscreteOperator, EigenSystem, apply, discretize, eigen, tikhonov_apply
from .rkhs import GridFunction, KernelExpansion, loeve_predict, rkhs_inner, rkhs_norm_sq, rkhs_norm_sq_spectral
from .simulate import ScenarioSpec, estimate_hurst, generate, sample_gp, true_alpha

__version__ = "0.1.0"
