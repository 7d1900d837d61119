"""Numerical kernels: least squares, logistic regression, linear SVM, the
weighted elastic net, cross-validation and correlated Gaussian sampling."""

from .cv import DEFAULT_LAMBDA2_GRID, CvPlan, CvResult, cv_path, default_lambda1_grid
from .design import DesignMatrix, as_design, standardize
from .linear import (
    FitResult,
    check_penalty_weights,
    elastic_net_path,
    enet_kkt_residual,
    enet_objective,
    fit_ols,
    fit_weighted_elastic_net,
    lambda1_max,
)
from .logistic import (
    fit_logistic,
    fit_penalized_logistic,
    logistic_gradient,
    logistic_loss,
    penalized_logistic_objective,
)
from .sampling import sample_equicorrelated_gaussian
from .svm import SvmFit, fit_linear_svm, svm_dual_objective, svm_primal_objective

__all__ = [
    "DEFAULT_LAMBDA2_GRID",
    "CvPlan",
    "CvResult",
    "DesignMatrix",
    "FitResult",
    "SvmFit",
    "as_design",
    "check_penalty_weights",
    "cv_path",
    "default_lambda1_grid",
    "elastic_net_path",
    "enet_kkt_residual",
    "enet_objective",
    "fit_linear_svm",
    "fit_logistic",
    "fit_ols",
    "fit_penalized_logistic",
    "fit_weighted_elastic_net",
    "lambda1_max",
    "logistic_gradient",
    "logistic_loss",
    "penalized_logistic_objective",
    "sample_equicorrelated_gaussian",
    "standardize",
    "svm_dual_objective",
    "svm_primal_objective",
]
