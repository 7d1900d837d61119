import numpy as np
from scipy.special import expit

PROPENSITY_CLIP = (0.01, 0.99)


def iptw_weights(T, propensity):
    """Inverse-probability-of-treatment weights T/pi + (1-T)/(1-pi)."""
    T = np.asarray(T, dtype=np.float64)
    return T / propensity + (1.0 - T) / (1.0 - propensity)


def clipped_propensity(X, exposure_coef, exposure_intercept=0.0):
    """Propensity scores from a logistic exposure model, clipped to [0.01, 0.99].

    Returns (propensity, clipped) where ``clipped`` says whether any score
    had to be moved.
    """
    pi = expit(exposure_intercept + np.asarray(X) @ np.asarray(exposure_coef))
    lo, hi = PROPENSITY_CLIP
    clipped = bool(((pi < lo) | (pi > hi)).any())
    return np.clip(pi, lo, hi), clipped


def weighted_mean_differences(X, T, weights):
    """|weighted mean in treated - weighted mean in controls| per column."""
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    wt = weights * T
    wc = weights * (1.0 - T)
    return np.abs(wt @ X / wt.sum() - wc @ X / wc.sum())


def compute_wamd(X, T, exposure_coef, outcome_coef, exposure_intercept=0.0,
                 return_flag=False):
    """Weighted absolute mean difference of an exposure fit.

    sum_j |outcome_coef_j| * |IPTW-weighted mean of X_j among treated minus
    among controls|, with propensities from ``exposure_coef`` (clipped to
    [0.01, 0.99]).
    """
    pi, clipped = clipped_propensity(X, exposure_coef, exposure_intercept)
    diff = weighted_mean_differences(X, T, iptw_weights(T, pi))
    value = float(np.abs(np.asarray(outcome_coef)) @ diff)
    if return_flag:
        return value, clipped
    return value
