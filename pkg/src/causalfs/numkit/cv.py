from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DataError
from . import _kernels
from .linear import DEFAULT_MAX_ITER, DEFAULT_TOL, _values, check_penalty_weights, lambda1_max

DEFAULT_LAMBDA2_GRID = (0.0, 0.01, 0.1, 1.0)


@dataclass(frozen=True)
class CvPlan:
    """Seeded K-fold assignment; a pure function of (n, folds, rng_seed)."""

    n: int
    folds: int = 10
    rng_seed: int = 0
    fold_assignment: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")
        if self.n < self.folds:
            raise ValueError(f"cannot split {self.n} rows into {self.folds} non-empty folds")
        rng = np.random.default_rng(self.rng_seed)
        assignment = np.empty(self.n, dtype=np.int64)
        assignment[rng.permutation(self.n)] = np.arange(self.n) % self.folds
        object.__setattr__(self, "fold_assignment", assignment)

    def splits(self):
        for k in range(self.folds):
            test = self.fold_assignment == k
            yield np.flatnonzero(~test), np.flatnonzero(test)


@dataclass(frozen=True)
class CvResult:
    best_lambda2: float
    best_lambda1: float
    lambda2_grid: np.ndarray
    lambda1_grid: np.ndarray
    mean_error: np.ndarray  # (n_lambda2, n_lambda1)
    se_error: np.ndarray
    fold_errors: np.ndarray  # (n_lambda2, n_lambda1, folds)

    def __iter__(self):
        # allows ``l2, l1, table = cv_path(...)``
        return iter((self.best_lambda2, self.best_lambda1, self))


def default_lambda1_grid(X, y, w, n_lambda=50, min_ratio=1e-3):
    """Log-spaced grid from lambda1_max down to ``min_ratio * lambda1_max``."""
    top = lambda1_max(X, y, w)
    if top <= 0:
        raise DataError("outcome has no association left to penalize (lambda1_max = 0)")
    return np.geomspace(top, top * min_ratio, n_lambda)


def one_se_choice(mean_error, se_error, lambda2_grid, lambda1_grid):
    """Most regularized (largest lambda1) grid point within one SE of the minimum.

    Ties in lambda1 across lambda2 values go to the lower mean error.
    """
    k2, k1 = np.unravel_index(np.argmin(mean_error), mean_error.shape)
    band = mean_error[k2, k1] + se_error[k2, k1]
    ok = mean_error <= band
    lam1 = np.broadcast_to(lambda1_grid[None, :], mean_error.shape)
    best = np.max(lam1[ok])
    cand = ok & (lam1 == best)
    idx = np.flatnonzero(cand.ravel())
    pick = idx[np.argmin(mean_error.ravel()[idx])]
    i2, i1 = np.unravel_index(pick, mean_error.shape)
    return float(lambda2_grid[i2]), float(lambda1_grid[i1])


def cv_path(X, y, lambda2_grid, lambda1_grid, w, plan, rescale=False, tol=DEFAULT_TOL,
            max_iter=DEFAULT_MAX_ITER):
    """K-fold CV over a (lambda2, lambda1) grid with the one-standard-error rule.

    For every lambda2 the lambda1 grid is swept from largest to smallest with
    warm starts. Held-out error is mean squared prediction error; the SE of a
    grid point is the standard deviation of its fold errors over sqrt(K).
    ``lambda1_grid=None`` builds the default grid from the full data.
    """
    Xv = _values(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    n, p = Xv.shape
    w = check_penalty_weights(w, p)
    l2 = np.atleast_1d(np.asarray(lambda2_grid, dtype=np.float64))
    if l2.size == 0:
        raise ValueError("lambda2 grid is empty")
    l1 = (default_lambda1_grid(Xv, y, w) if lambda1_grid is None
          else np.atleast_1d(np.asarray(lambda1_grid, dtype=np.float64)))
    if l1.size == 0:
        raise ValueError("lambda1 grid is empty")
    if (l1 < 0).any() or (l2 < 0).any():
        raise ValueError("penalty levels must be non-negative")
    if plan.n != n:
        raise ValueError(f"CV plan is for {plan.n} rows, data has {n}")
    order = np.argsort(-l1, kind="stable")
    l1_sorted = np.ascontiguousarray(l1[order])
    errors = np.empty((l2.size, l1.size, plan.folds))
    for k, (train, test) in enumerate(plan.splits()):
        ytr = y[train]
        if np.var(ytr) == 0:
            raise DataError(f"fold {k}: outcome has zero variance in the training rows")
        xm = Xv[train].mean(axis=0)
        ym = ytr.mean()
        Xc = Xv[train] - xm
        G = np.ascontiguousarray(Xc.T @ Xc)
        c = Xc.T @ (ytr - ym)
        Xte = Xv[test] - xm
        yte = y[test] - ym
        scale_n = train.size
        for a, lam2 in enumerate(l2):
            coefs, _, _ = _kernels.enet_path_gram(G, c, w, l1_sorted, float(lam2), float(tol),
                                                  int(max_iter))
            if rescale:
                coefs = coefs * (1.0 + lam2 / scale_n)
            resid = yte[:, None] - Xte @ coefs.T
            errors[a, order, k] = np.mean(resid**2, axis=0)
    mean = errors.mean(axis=2)
    se = errors.std(axis=2, ddof=1) / np.sqrt(plan.folds)
    best2, best1 = one_se_choice(mean, se, l2, l1)
    return CvResult(
        best_lambda2=best2,
        best_lambda1=best1,
        lambda2_grid=l2,
        lambda1_grid=l1,
        mean_error=mean,
        se_error=se,
        fold_errors=errors,
    )
