import warnings

import numpy as np
from scipy import linalg
from scipy.special import expit

from ..exceptions import ConvergenceWarning, DegenerateLabelsError
from . import _kernels
from .linear import FitResult, _values, check_penalty_weights

COEF_CAP = 50.0


def _check_binary(labels):
    t = np.asarray(labels, dtype=np.float64).ravel()
    if not np.isin(t, (0.0, 1.0)).all():
        raise ValueError("labels must be coded 0/1")
    if t.min() == t.max():
        raise DegenerateLabelsError("degenerate labels: only one class present")
    return t


def logistic_loss(params, X, t, ridge=0.0):
    """Negative log-likelihood plus ``ridge/2 * |slopes|^2``; params = (b0, b)."""
    eta = params[0] + X @ params[1:]
    return float(np.sum(np.logaddexp(0.0, eta) - t * eta) + 0.5 * ridge * params[1:] @ params[1:])


def logistic_gradient(params, X, t, ridge=0.0):
    eta = params[0] + X @ params[1:]
    resid = expit(eta) - t
    g = np.empty_like(params)
    g[0] = resid.sum()
    g[1:] = X.T @ resid + ridge * params[1:]
    return g


def fit_logistic(X, labels, ridge=1e-8, tol=1e-6, max_iter=200):
    """Ridge-stabilized maximum likelihood for a 0/1 response (damped Newton).

    Stops when the gradient norm drops below ``tol``. If any slope exceeds
    ``COEF_CAP`` in magnitude (quasi-separation) the slopes are clipped, the
    result is flagged ``converged=False`` and a ConvergenceWarning is issued.
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    Xv = _values(X)
    t = _check_binary(labels)
    n, p = Xv.shape
    A = np.hstack([np.ones((n, 1)), Xv])
    reg = np.full(p + 1, ridge)
    reg[0] = 0.0
    params = np.zeros(p + 1)
    mean_t = t.mean()
    params[0] = np.log(mean_t / (1 - mean_t))
    f = logistic_loss(params, Xv, t, ridge)
    converged = False
    capped = False
    it = 0
    for it in range(1, max_iter + 1):
        g = logistic_gradient(params, Xv, t, ridge)
        if np.linalg.norm(g) <= tol:
            converged = True
            break
        pr = expit(params[0] + Xv @ params[1:])
        W = pr * (1 - pr)
        H = (A * W[:, None]).T @ A + np.diag(reg)
        H[np.diag_indices_from(H)] += 1e-12
        try:
            step = linalg.solve(H, g, assume_a="pos")
        except linalg.LinAlgError:
            step = linalg.lstsq(H, g)[0]
        s = 1.0
        while s > 1e-10:
            trial = params - s * step
            f_trial = logistic_loss(trial, Xv, t, ridge)
            if f_trial <= f - 1e-4 * s * (g @ step) or f_trial <= f:
                break
            s *= 0.5
        params, f = trial, f_trial
        if np.max(np.abs(params[1:])) > COEF_CAP:
            capped = True
            params[1:] = np.clip(params[1:], -COEF_CAP, COEF_CAP)
            break
    if capped or not converged:
        warnings.warn(
            "logistic regression did not converge (possible separation); slopes capped"
            if capped
            else f"logistic regression did not converge in {max_iter} iterations",
            ConvergenceWarning,
            stacklevel=2,
        )
    return FitResult(
        coefficients=params[1:].copy(),
        intercept=float(params[0]),
        converged=converged and not capped,
        iterations=it,
    )


def fit_penalized_logistic(X, labels, lambda1, w, lambda2=0.0, rescale=False, tol=1e-8,
                           max_outer=500, max_inner=10_000, warm_start=None):
    """Weighted-L1 (optionally elastic-net) logistic regression.

    Minimizes ``sum_i [log(1+exp(eta_i)) - t_i eta_i] + lambda2*|b|^2 +
    lambda1 * sum_j w_j |b_j|`` with an unpenalized intercept, by proximal
    Newton steps with backtracking. ``rescale`` multiplies the slopes by
    ``1 + lambda2/n``. ``warm_start`` is an optional (intercept, slopes) pair.
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalty levels must be non-negative")
    Xv = np.ascontiguousarray(_values(X))
    t = _check_binary(labels)
    n, p = Xv.shape
    w = check_penalty_weights(w, p)
    pen = np.where(np.isfinite(w), lambda1 * w, np.inf)
    if warm_start is None:
        b0 = float(np.log(t.mean() / (1 - t.mean())))
        beta = np.zeros(p)
    else:
        b0 = float(warm_start[0])
        beta = np.array(warm_start[1], dtype=np.float64)
    b0, iters, converged, capped = _kernels.logistic_enet(
        Xv, t, pen, float(lambda2), b0, beta, float(tol), int(max_outer), int(max_inner), COEF_CAP
    )
    if capped or not converged:
        warnings.warn("penalized logistic regression did not converge", ConvergenceWarning,
                      stacklevel=2)
    if rescale:
        beta = beta * (1.0 + lambda2 / n)
    return FitResult(
        coefficients=beta,
        intercept=float(b0),
        converged=bool(converged and not capped),
        iterations=int(iters),
    )


def penalized_logistic_objective(X, labels, coef, intercept, lambda1, w, lambda2=0.0):
    Xv = _values(X)
    t = np.asarray(labels, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    params = np.concatenate([[intercept], coef])
    nz = coef != 0
    return (logistic_loss(params, Xv, t) + lambda2 * coef @ coef
            + lambda1 * float(np.sum(w[nz] * np.abs(coef[nz]))))
