import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..exceptions import ConvergenceWarning, DegenerateLabelsError
from .linear import FitResult, _values


@dataclass(frozen=True)
class SvmFit(FitResult):
    """FitResult plus dual variables and the solver's objective record."""

    dual_coef: np.ndarray = None
    objective_trace: np.ndarray = None


def to_signed_labels(labels):
    """Map 0/1 (or already signed) labels to -1/+1."""
    y = np.asarray(labels, dtype=np.float64).ravel()
    if np.isin(y, (0.0, 1.0)).all():
        y = 2.0 * y - 1.0
    if not np.isin(y, (-1.0, 1.0)).all():
        raise ValueError("labels must be coded 0/1 or -1/+1")
    if y.min() == y.max():
        raise DegenerateLabelsError("degenerate labels: only one class present")
    return y


def svm_primal_objective(X, y, coef, intercept, C):
    Xv = _values(X)
    margin = y * (Xv @ coef + intercept)
    return float(0.5 * coef @ coef + C * np.maximum(0.0, 1.0 - margin).sum())


def svm_dual_objective(X, y, alpha):
    """Maximization-form dual value sum(alpha) - 0.5*|sum alpha_i y_i x_i|^2."""
    w = _values(X).T @ (alpha * y)
    return float(alpha.sum() - 0.5 * w @ w)


def _newton_solver(Z, d):
    # (diag(d) + Z Z^T)^{-1} through the p x p Woodbury capacitance matrix
    # free vectors drive d -> 0 near the optimum; the floor keeps D^{-1} finite
    dinv = 1.0 / np.maximum(d, 1e-13)
    Zd = Z * dinv[:, None]
    cap = np.eye(Z.shape[1]) + Z.T @ Zd
    try:
        cho = linalg.cho_factor(cap)

        def inner(u):
            return linalg.cho_solve(cho, u)
    except linalg.LinAlgError:
        # rounding broke positive definiteness: symmetric indefinite solve
        def inner(u):
            return linalg.solve(cap, u, assume_a="sym")

    def solve(r):
        return dinv * r - Zd @ inner(Zd.T @ r)

    return solve


def fit_linear_svm(X, labels, C=1.0, tol=1e-10, max_iter=200):
    """Soft-margin linear SVM with an unregularized intercept.

    Minimizes ``0.5*|b|^2 + C * sum_i max(0, 1 - y_i (x_i.b + b0))`` by a
    primal-dual interior-point method (Mehrotra predictor-corrector) on the
    dual QP. The dual Hessian has rank p, so each Newton step costs
    O(n p^2). ``labels`` may be 0/1 or -1/+1; class 1 is the positive side.

    ``objective_trace`` holds, per iteration, the best primal objective
    reached so far (the primal is unconstrained, so every iterate's (w, b)
    is a valid candidate); the returned solution is that incumbent.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    Xv = _values(X)
    y = to_signed_labels(labels)
    n = Xv.shape[0]
    Z = Xv * y[:, None]
    e = np.ones(n)

    alpha = np.full(n, 0.5 * C)
    b = 0.0
    z = np.ones(n)
    v = np.ones(n)

    def primal_at(alpha, b):
        w = Z.T @ alpha
        return svm_primal_objective(Xv, y, w, b, C), w

    best = (np.inf, None, None, None)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = Z.T @ alpha
        s = C - alpha
        r_d = Z @ w - e + b * y - z + v
        r_e = y @ alpha
        mu = (alpha @ z + s @ v) / (2 * n)

        pobj, _ = primal_at(alpha, b)
        if pobj < best[0]:
            best = (pobj, w.copy(), b, alpha.copy())
        trace.append(best[0])
        dobj = alpha.sum() - 0.5 * w @ w
        gap = (pobj - dobj) / max(1.0, abs(pobj))
        if (gap < tol and np.linalg.norm(r_d) <= tol * np.sqrt(n) * (1 + C)
                and abs(r_e) <= tol * n * (1 + C)):
            converged = True
            break

        solve = _newton_solver(Z, z / alpha + v / s)
        My = solve(y)
        yMy = y @ My

        def direction(t1, t2):
            rc1 = t1 - alpha * z
            rc2 = t2 - s * v
            rhs = -r_d + rc1 / alpha - rc2 / s
            Mr = solve(rhs)
            db = (y @ Mr + r_e) / yMy
            da = Mr - My * db
            dz = (rc1 - z * da) / alpha
            dv = (rc2 + v * da) / s
            return da, db, dz, dv

        def step_len(da, dz, dv, frac=1.0):
            steps = [1.0]
            for x, dx in ((alpha, da), (s, -da), (z, dz), (v, dv)):
                neg = dx < 0
                if neg.any():
                    steps.append(np.min(-x[neg] / dx[neg]))
            return min(1.0, frac * min(steps))

        da, db, dz, dv = direction(0.0, 0.0)
        a_aff = step_len(da, dz, dv)
        mu_aff = ((alpha + a_aff * da) @ (z + a_aff * dz)
                  + (s - a_aff * da) @ (v + a_aff * dv)) / (2 * n)
        sigma = (mu_aff / mu) ** 3
        da, db, dz, dv = direction(sigma * mu - da * dz, sigma * mu + da * dv)
        a = step_len(da, dz, dv, frac=0.995)
        alpha = alpha + a * da
        b = b + a * db
        z = z + a * dz
        v = v + a * dv
        # keep strictly inside the box against rounding
        alpha = np.clip(alpha, 1e-300, C * (1 - 1e-16))

    if not converged:
        warnings.warn("SVM interior-point solver did not reach tolerance", ConvergenceWarning,
                      stacklevel=2)
    _, w_best, b_best, alpha_best = best
    # clean dual: snap tiny multipliers to the box
    alpha_best = np.where(alpha_best < 1e-9 * C, 0.0, alpha_best)
    alpha_best = np.where(alpha_best > C * (1 - 1e-9), C, alpha_best)
    return SvmFit(
        coefficients=w_best,
        intercept=float(b_best),
        converged=converged,
        iterations=it,
        dual_coef=alpha_best,
        objective_trace=np.asarray(trace),
    )
