"""Least squares and the weighted elastic net.

The elastic-net objective is written on the sum-of-squares scale,

    ||y - b0 - X b||^2 + lambda2 * ||b||^2 + lambda1 * sum_j w_j |b_j|,

with an unpenalized intercept. Infinite weights pin a coefficient at zero.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..exceptions import ConvergenceWarning, SingularSystemError
from . import _kernels
from .design import DesignMatrix

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    intercept: float
    converged: bool
    iterations: int
    ridge_fallback: bool = False


def _values(X):
    if isinstance(X, DesignMatrix):
        return X.values
    return np.asarray(X, dtype=np.float64)


def check_penalty_weights(w, p):
    """Validate a penalty-weight vector: length p, entries >= 0, +inf allowed."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != p:
        raise ValueError(f"penalty weights have {w.shape[0]} entries, expected {p}")
    if np.isnan(w).any() or (w < 0).any():
        raise ValueError("penalty weights must be non-negative (NaN not allowed)")
    return w


def fit_ols(X, y, ridge_fallback=True, cond_limit=1e10):
    """Least squares with an unpenalized intercept.

    When ``N <= p`` or the centered Gram matrix has condition number above
    ``cond_limit``, a ridge of 1e-6 is added (if allowed) and the result is
    marked with ``ridge_fallback=True``.
    """
    Xv = _values(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = Xv.shape
    xm = Xv.mean(axis=0)
    ym = y.mean()
    Xc = Xv - xm
    G = Xc.T @ Xc
    c = Xc.T @ (y - ym)
    singular = n <= p or np.linalg.cond(G) > cond_limit
    if singular:
        if not ridge_fallback:
            raise SingularSystemError("singular system: normal equations are not invertible")
        coef = linalg.solve(G + 1e-6 * np.eye(p), c, assume_a="pos")
    else:
        coef, *_ = linalg.lstsq(Xc, y - ym)
    return FitResult(
        coefficients=coef,
        intercept=float(ym - xm @ coef),
        converged=True,
        iterations=1,
        ridge_fallback=bool(singular),
    )


def lambda1_max(X, y, w):
    """Smallest lambda1 at which every finitely, positively weighted coefficient is 0."""
    Xv = _values(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    w = check_penalty_weights(w, Xv.shape[1])
    Xc = Xv - Xv.mean(axis=0)
    r = y - y.mean()
    free = w == 0
    if free.any():
        coef, *_ = linalg.lstsq(Xc[:, free], r)
        r = r - Xc[:, free] @ coef
    pen = np.isfinite(w) & (w > 0)
    if not pen.any():
        return 0.0
    return float(np.max(2.0 * np.abs(Xc[:, pen].T @ r) / w[pen]))


def fit_weighted_elastic_net(
    X, y, lambda1, lambda2, w, rescale=False, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER
):
    """Coordinate-descent fit of the weighted elastic net.

    Parameters
    ----------
    X : DesignMatrix or array of shape (n, p)
    y : array of shape (n,)
    lambda1, lambda2 : float
        L1 and squared-L2 penalty levels (both >= 0).
    w : array of shape (p,)
        Per-coefficient L1 weights; ``inf`` excludes a coefficient.
    rescale : bool
        Multiply the minimizer by ``1 + lambda2 / n`` (the adaptive elastic
        net correction).

    Returns
    -------
    FitResult
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalty levels must be non-negative")
    Xv = _values(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = Xv.shape
    w = check_penalty_weights(w, p)
    xm = Xv.mean(axis=0)
    ym = y.mean()
    Xc = Xv - xm
    G = np.ascontiguousarray(Xc.T @ Xc)
    c = Xc.T @ (y - ym)
    pen = np.where(np.isfinite(w), lambda1 * w, np.inf)
    # 0 * inf would be nan; an infinite weight always excludes
    beta = np.zeros(p)
    iters, converged = _kernels.enet_cd_gram(
        G, c, pen, float(lambda2), beta, float(tol), int(max_iter)
    )
    if not converged:
        warnings.warn(
            f"elastic net did not converge in {max_iter} sweeps", ConvergenceWarning, stacklevel=2
        )
    if rescale:
        beta = beta * (1.0 + lambda2 / n)
    return FitResult(
        coefficients=beta,
        intercept=float(ym - xm @ beta),
        converged=bool(converged),
        iterations=int(iters),
    )


def elastic_net_path(X, y, lambda1_grid, lambda2, w, rescale=False, tol=DEFAULT_TOL,
                     max_iter=DEFAULT_MAX_ITER):
    """Warm-started fits along a lambda1 grid (processed largest first).

    Returns an array of shape (len(lambda1_grid), p) in the order given.
    """
    Xv = _values(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = Xv.shape
    w = check_penalty_weights(w, p)
    grid = np.asarray(lambda1_grid, dtype=np.float64).ravel()
    if (grid < 0).any() or lambda2 < 0:
        raise ValueError("penalty levels must be non-negative")
    order = np.argsort(-grid, kind="stable")
    Xc = Xv - Xv.mean(axis=0)
    G = np.ascontiguousarray(Xc.T @ Xc)
    c = Xc.T @ (y - y.mean())
    coefs, _, ok = _kernels.enet_path_gram(
        G, c, w, np.ascontiguousarray(grid[order]), float(lambda2), float(tol), int(max_iter)
    )
    if not ok.all():
        warnings.warn("elastic net path: some fits hit the iteration cap", ConvergenceWarning,
                      stacklevel=2)
    out = np.empty_like(coefs)
    out[order] = coefs
    if rescale:
        out *= 1.0 + lambda2 / n
    return out


def enet_objective(X, y, coef, intercept, lambda1, lambda2, w):
    """Value of the (unrescaled) weighted elastic-net objective."""
    Xv = _values(X)
    r = np.asarray(y, dtype=np.float64) - intercept - Xv @ coef
    w = np.asarray(w, dtype=np.float64)
    nz = coef != 0
    l1 = float(np.sum(w[nz] * np.abs(coef[nz])))
    return float(r @ r + lambda2 * coef @ coef + lambda1 * l1)


def enet_kkt_residual(X, y, coef, lambda1, lambda2, w):
    """Per-coordinate KKT violation of an unrescaled weighted elastic-net solution.

    Active coordinates: |gradient of smooth part + lambda1*w_j*sign|; inactive:
    excess of |gradient| over lambda1*w_j. Infinitely weighted coordinates
    report 0.
    """
    Xv = _values(X)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    Xc = Xv - Xv.mean(axis=0)
    r = (y - y.mean()) - Xc @ coef
    grad = -2.0 * Xc.T @ r + 2.0 * lambda2 * coef
    out = np.zeros_like(coef)
    fin = np.isfinite(w)
    act = fin & (coef != 0)
    out[act] = np.abs(grad[act] + lambda1 * w[act] * np.sign(coef[act]))
    ina = fin & (coef == 0)
    out[ina] = np.maximum(np.abs(grad[ina]) - lambda1 * w[ina], 0.0)
    return out
