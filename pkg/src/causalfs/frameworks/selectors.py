"""Covariate selectors for treatment-effect estimation.

Exposure-first selectors (three-stage and preliminary two-stage):

1. fit an exposure model of T on X (linear SVM or logistic regression);
2. turn |beta_j| into outcome-model penalty weights with a smoothing
   function and fit a weighted elastic net of Y on X, tuned by CV;
3. (three-stage only) refit an adaptive elastic net with weights
   |theta_j|**(-gamma2) and the (1 + lambda2/n) correction.

Outcome-first baselines (OAL / OAENet): OLS outcome fit, inverse-power
weights, then a weighted-L1 (or elastic-net) logistic exposure fit, with
(lambda, gamma) picked by minimum wAMD.

All models work on standardized covariates with unpenalized intercepts.
Selected index sets are 0-based.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from ..exceptions import ConvergenceWarning
from ..numkit import (
    CvPlan,
    cv_path,
    default_lambda1_grid,
    fit_linear_svm,
    fit_logistic,
    fit_ols,
    fit_penalized_logistic,
    fit_weighted_elastic_net,
    standardize,
)
from ..smoothing import SmoothingSpec, inverse_power_weights
from ..synthgen import Dataset
from .config import SelectorConfig
from .wamd import compute_wamd

SELECTION_THRESHOLD = 1e-8


@dataclass(frozen=True)
class SelectionResult:
    stage1_coefficients: np.ndarray
    stage2_coefficients: np.ndarray
    stage3_coefficients: np.ndarray
    selected: np.ndarray
    hyperparams: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    model: str = ""

    @property
    def final_coefficients(self):
        if self.stage3_coefficients is not None:
            return self.stage3_coefficients
        return self.stage2_coefficients


def selected_from(coef, threshold=SELECTION_THRESHOLD):
    return np.flatnonzero(np.abs(coef) > threshold)


def _exposure_fit(Xs, T, cfg):
    if cfg.exposure == "svm":
        return fit_linear_svm(Xs, T, C=cfg.svm_C)
    with warnings.catch_warnings():
        # capped slopes are still usable as prior information
        warnings.simplefilter("ignore", ConvergenceWarning)
        return fit_logistic(Xs, T, ridge=cfg.logistic_ridge)


def _tuned_outcome_fit(Xs, Y, w, cfg, plan, rescale):
    """CV-tuned weighted elastic net; returns (coef, lambda2, lambda1)."""
    if not np.isfinite(w).any():
        return np.zeros(Xs.shape[1]), None, None
    grid = default_lambda1_grid(Xs, Y, w, cfg.n_lambda1, cfg.lambda1_min_ratio)
    cv = cv_path(Xs, Y, cfg.lambda2_grid, grid, w, plan, rescale=rescale)
    fit = fit_weighted_elastic_net(Xs, Y, cv.best_lambda1, cv.best_lambda2, w, rescale=rescale)
    return fit.coefficients, cv.best_lambda2, cv.best_lambda1


def _prepare(data, cfg):
    if not isinstance(cfg, SelectorConfig):
        raise TypeError("cfg must be a SelectorConfig")
    if data.n < 20:
        raise ValueError("need at least 20 rows")
    if data.T.min() == data.T.max():
        raise ValueError("treatment must contain both classes")
    return standardize(data.X)


def run_three_stage(data, cfg):
    """Exposure model -> smoothed-weight elastic net -> adaptive elastic net."""
    start = time.perf_counter()
    design = _prepare(data, cfg)
    Xs = design.values
    plan = CvPlan(data.n, cfg.cv_folds, cfg.cv_seed)

    beta = _exposure_fit(Xs, data.T, cfg).coefficients
    w = cfg.smoothing.weights(beta)
    theta, l2a, l1a = _tuned_outcome_fit(Xs, data.Y, w, cfg, plan, rescale=False)
    psi = inverse_power_weights(theta, cfg.gamma2)
    Theta, l2b, l1b = _tuned_outcome_fit(Xs, data.Y, psi, cfg, plan, rescale=True)
    return SelectionResult(
        stage1_coefficients=beta,
        stage2_coefficients=theta,
        stage3_coefficients=Theta,
        selected=selected_from(Theta),
        hyperparams={"gamma1": cfg.smoothing.gamma, "gamma2": cfg.gamma2,
                     "lambda2_stage2": l2a, "lambda1_stage2": l1a,
                     "lambda2_stage3": l2b, "lambda1_stage3": l1b},
        wall_clock_seconds=time.perf_counter() - start,
        model=cfg.label,
    )


def run_two_stage_prelim(data, cfg):
    """Exposure model -> smoothed-weight adaptive elastic net (rescaled)."""
    start = time.perf_counter()
    design = _prepare(data, cfg)
    Xs = design.values
    plan = CvPlan(data.n, cfg.cv_folds, cfg.cv_seed)

    beta = _exposure_fit(Xs, data.T, cfg).coefficients
    w = cfg.smoothing.weights(beta)
    theta, l2, l1 = _tuned_outcome_fit(Xs, data.Y, w, cfg, plan, rescale=True)
    return SelectionResult(
        stage1_coefficients=beta,
        stage2_coefficients=theta,
        stage3_coefficients=None,
        selected=selected_from(theta),
        hyperparams={"gamma1": cfg.smoothing.gamma, "lambda2": l2, "lambda1": l1},
        wall_clock_seconds=time.perf_counter() - start,
        model=cfg.label,
    )


def penalized_logistic_lambda_max(Xs, T, w):
    """Smallest lambda at which all finitely weighted exposure slopes are 0."""
    resid = T - T.mean()
    grad = np.abs(Xs.T @ resid)
    ok = np.isfinite(w) & (w > 0)
    if not ok.any():
        return 0.0
    return float(np.max(grad[ok] / w[ok]))


def _outcome_adaptive(data, cfg, elastic):
    start = time.perf_counter()
    design = _prepare(data, cfg)
    Xs = design.values
    T = data.T
    n = data.n
    theta_ols = fit_ols(Xs, data.Y).coefficients
    lambda2_grid = cfg.oaenet_lambda2_grid if elastic else (0.0,)

    best = None
    n_failed = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for gamma in cfg.oal_gammas:
            w = inverse_power_weights(theta_ols, gamma)
            if cfg.oal_lambda_grid is not None:
                grid = np.sort(np.asarray(cfg.oal_lambda_grid))[::-1]
            else:
                top = penalized_logistic_lambda_max(Xs, T, w)
                grid = np.geomspace(top, top * cfg.oal_lambda_min_ratio, cfg.oal_n_lambda)
            for lam2 in lambda2_grid:
                warm = None
                for lam in grid:
                    fit = fit_penalized_logistic(Xs, T, lam, w, lambda2=lam2, warm_start=warm)
                    warm = (fit.intercept, fit.coefficients)
                    n_failed += not fit.converged
                    coef = fit.coefficients * (1.0 + lam2 / n) if elastic else fit.coefficients
                    score = compute_wamd(Xs, T, coef, theta_ols, fit.intercept)
                    if best is None or score < best[0]:
                        best = (score, coef.copy(), gamma, float(lam), float(lam2))
    score, beta, gamma, lam, lam2 = best
    hyper = {"gamma": gamma, "lambda": lam, "wamd": score, "nonconverged_fits": n_failed}
    if elastic:
        hyper["lambda2"] = lam2
    return SelectionResult(
        stage1_coefficients=theta_ols,
        stage2_coefficients=beta,
        stage3_coefficients=None,
        selected=selected_from(beta),
        hyperparams=hyper,
        wall_clock_seconds=time.perf_counter() - start,
        model=cfg.label,
    )


def run_oal(data, cfg):
    """Outcome-adaptive lasso tuned by minimum wAMD.

    ``stage1_coefficients`` holds the OLS outcome coefficients and
    ``stage2_coefficients`` the selected exposure coefficients.
    """
    return _outcome_adaptive(data, cfg, elastic=False)


def run_oaenet(data, cfg):
    """Outcome-adaptive elastic net tuned by minimum wAMD."""
    return _outcome_adaptive(data, cfg, elastic=True)


_RUNNERS = {
    "threeStage": run_three_stage,
    "twoStagePrelim": run_two_stage_prelim,
    "oal": run_oal,
    "oaenet": run_oaenet,
}


def run_selector(data, cfg):
    """Dispatch on ``cfg.framework``."""
    return _RUNNERS[cfg.framework](data, cfg)


class _CausalSelector(SelectorMixin, BaseEstimator):
    """Shared fit/transform plumbing; subclasses build a SelectorConfig."""

    def _config(self):
        raise NotImplementedError

    def fit(self, X, y, treatment):
        """Select covariates of ``X`` for the outcome ``y`` given binary ``treatment``."""
        X, y = check_X_y(X, y, y_numeric=True, ensure_min_samples=20)
        T = np.asarray(treatment, dtype=np.float64).ravel()
        if T.shape[0] != X.shape[0]:
            raise ValueError("treatment must have one entry per row of X")
        res = run_selector(Dataset(X, T, y), self._config())
        self.n_features_in_ = X.shape[1]
        self.result_ = res
        self.selected_ = res.selected
        self.coef_ = res.final_coefficients
        self.support_ = np.zeros(X.shape[1], dtype=bool)
        self.support_[res.selected] = True
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_


class ThreeStageSelector(_CausalSelector):
    """Exposure model, smoothed-weight elastic net, then adaptive elastic net.

    Parameters
    ----------
    exposure : {"svm", "logistic"}
    smoothing : {"sigmoid", "tanh"}
    gamma1 : float, optional
        Smoothing power; defaults to 1 for sigmoid and 0.5 for tanh.
    gamma2 : float
        Power of the adaptive weights |theta_j|**(-gamma2).
    lambda2_grid : sequence of float
    n_lambda1 : int
    lambda1_min_ratio : float
    cv : int
        Number of CV folds.
    random_state : int
        Seed of the fold assignment.
    svm_C : float

    Attributes
    ----------
    result_ : SelectionResult
    selected_ : ndarray of int
    coef_ : ndarray
        Final-stage coefficients on the standardized scale.
    """

    def __init__(self, exposure="svm", smoothing="sigmoid", gamma1=None, gamma2=1.0,
                 lambda2_grid=(0.0, 0.01, 0.1, 1.0), n_lambda1=50, lambda1_min_ratio=1e-3,
                 cv=10, random_state=0, svm_C=1.0):
        self.exposure = exposure
        self.smoothing = smoothing
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.lambda2_grid = lambda2_grid
        self.n_lambda1 = n_lambda1
        self.lambda1_min_ratio = lambda1_min_ratio
        self.cv = cv
        self.random_state = random_state
        self.svm_C = svm_C

    _framework = "threeStage"

    def _config(self):
        return SelectorConfig(
            framework=self._framework,
            exposure=self.exposure,
            smoothing=SmoothingSpec(self.smoothing, self.gamma1),
            gamma2=self.gamma2,
            lambda2_grid=tuple(self.lambda2_grid),
            n_lambda1=self.n_lambda1,
            lambda1_min_ratio=self.lambda1_min_ratio,
            cv_folds=self.cv,
            cv_seed=self.random_state,
            svm_C=self.svm_C,
        )


class TwoStageSelector(ThreeStageSelector):
    """Exposure model followed by one smoothed-weight adaptive elastic net.

    Same parameters as :class:`ThreeStageSelector`; ``gamma2`` is unused.
    """

    _framework = "twoStagePrelim"


class OutcomeAdaptiveLasso(_CausalSelector):
    """Outcome-adaptive lasso with (lambda, gamma) chosen by minimum wAMD.

    ``convergence_grid`` holds Gamma >= 0 values; each maps to
    gamma = 2*Gamma + 1 + 0.05.
    """

    def __init__(self, convergence_grid=(0.0, 0.25, 0.5), n_lambda=25, lambda_min_ratio=1e-4,
                 lambda_grid=None):
        self.convergence_grid = convergence_grid
        self.n_lambda = n_lambda
        self.lambda_min_ratio = lambda_min_ratio
        self.lambda_grid = lambda_grid

    _framework = "oal"

    def _config(self):
        return SelectorConfig(
            framework=self._framework,
            exposure="logistic",
            smoothing=SmoothingSpec("oalInverse"),
            oal_convergence_grid=tuple(self.convergence_grid),
            oal_n_lambda=self.n_lambda,
            oal_lambda_min_ratio=self.lambda_min_ratio,
            oal_lambda_grid=None if self.lambda_grid is None else tuple(self.lambda_grid),
            oaenet_lambda2_grid=self._lambda2_values(),
        )

    def _lambda2_values(self):
        return (0.0,)


class OutcomeAdaptiveElasticNet(OutcomeAdaptiveLasso):
    def __init__(self, convergence_grid=(0.0, 0.25, 0.5), n_lambda=25, lambda_min_ratio=1e-4,
                 lambda_grid=None, lambda2_grid=(0.0, 0.01, 0.1, 1.0)):
        super().__init__(convergence_grid, n_lambda, lambda_min_ratio, lambda_grid)
        self.lambda2_grid = lambda2_grid

    _framework = "oaenet"

    def _lambda2_values(self):
        return tuple(self.lambda2_grid)


def make_selector(name):
    """Estimator for a named variant (e.g. ``"Enh-ESVMS"``, ``"OAL"``)."""
    cfg = SelectorConfig.from_name(name)
    if cfg.framework == "oal":
        return OutcomeAdaptiveLasso()
    if cfg.framework == "oaenet":
        return OutcomeAdaptiveElasticNet()
    cls = ThreeStageSelector if cfg.framework == "threeStage" else TwoStageSelector
    return cls(exposure=cfg.exposure, smoothing=cfg.smoothing.kind)
