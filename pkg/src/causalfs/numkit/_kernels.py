"""Compiled inner loops: elastic-net coordinate descent, penalized logistic
regression (proximal Newton).

Everything here works on plain contiguous float64 arrays. Validation,
standardization and bookkeeping live in the Python wrappers.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True)
def _polish_active_set(G, c, pen, lam2, beta):
    # Exact solve on the active set with the signs CD found; accepted only if
    # signs and the inactive-set subgradient conditions still hold.
    p = c.shape[0]
    idx = np.empty(p, dtype=np.int64)
    k = 0
    for j in range(p):
        if beta[j] != 0.0:
            idx[k] = j
            k += 1
    if k == 0:
        return False
    A = np.empty((k, k))
    rhs = np.empty(k)
    for a in range(k):
        ja = idx[a]
        for b in range(k):
            A[a, b] = G[ja, idx[b]]
        A[a, a] += lam2
        s = 1.0 if beta[ja] > 0 else -1.0
        rhs[a] = c[ja] - 0.5 * pen[ja] * s
    sol = np.linalg.solve(A, rhs)
    for a in range(k):
        if sol[a] * beta[idx[a]] <= 0.0:
            return False
    trial = np.zeros(p)
    for a in range(k):
        trial[idx[a]] = sol[a]
    for j in range(p):
        if trial[j] != 0.0:
            continue
        g = c[j]
        for i in range(p):
            g -= G[j, i] * trial[i]
        if abs(g) > 0.5 * pen[j] * (1.0 + 1e-9) + 1e-12:
            return False
    for j in range(p):
        beta[j] = trial[j]
    return True


@njit(cache=True)
def enet_cd_gram(G, c, pen, lam2, beta, tol, max_iter):
    """Minimize b'Gb - 2c'b + lam2*|b|^2 + sum(pen*|b|) in place.

    ``pen`` holds lambda1 * w per coordinate; +inf pins a coordinate at 0.
    Returns (iterations, converged).
    """
    p = c.shape[0]
    Gb = np.zeros(p)
    for j in range(p):
        if not np.isfinite(pen[j]):
            beta[j] = 0.0
    for j in range(p):
        if beta[j] != 0.0:
            for i in range(p):
                Gb[i] += G[i, j] * beta[j]
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        max_delta = 0.0
        for j in range(p):
            if not np.isfinite(pen[j]):
                continue
            denom = G[j, j] + lam2
            old = beta[j]
            if denom <= 0.0:
                new = 0.0
            else:
                rho = c[j] - (Gb[j] - G[j, j] * old)
                new = _soft(rho, 0.5 * pen[j]) / denom
            d = new - old
            if d != 0.0:
                for i in range(p):
                    Gb[i] += G[i, j] * d
                beta[j] = new
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if max_delta < tol:
            converged = True
            break
    if converged:
        _polish_active_set(G, c, pen, lam2, beta)
    return it, converged


@njit(cache=True)
def enet_path_gram(G, c, w, lam1_grid, lam2, tol, max_iter):
    """Warm-started path over a decreasing lambda1 grid. Returns (coefs, iters, ok)."""
    p = c.shape[0]
    m = lam1_grid.shape[0]
    out = np.zeros((m, p))
    iters = np.zeros(m, dtype=np.int64)
    ok = np.zeros(m, dtype=np.bool_)
    beta = np.zeros(p)
    pen = np.empty(p)
    for k in range(m):
        for j in range(p):
            if np.isfinite(w[j]):
                pen[j] = lam1_grid[k] * w[j]
            else:
                pen[j] = np.inf
        n_it, conv = enet_cd_gram(G, c, pen, lam2, beta, tol, max_iter)
        iters[k] = n_it
        ok[k] = conv
        for j in range(p):
            out[k, j] = beta[j]
    return out, iters, ok


@njit(cache=True)
def _logistic_objective(X, t, b0, beta, pen, lam2):
    n, p = X.shape
    f = 0.0
    for i in range(n):
        eta = b0
        for j in range(p):
            eta += X[i, j] * beta[j]
        # log(1 + exp(eta)) - t*eta, overflow-safe
        if eta > 0:
            f += eta + np.log1p(np.exp(-eta)) - t[i] * eta
        else:
            f += np.log1p(np.exp(eta)) - t[i] * eta
    for j in range(p):
        if beta[j] != 0.0:
            f += lam2 * beta[j] * beta[j] + pen[j] * abs(beta[j])
    return f


@njit(cache=True)
def logistic_enet(X, t, pen, lam2, b0, beta, tol, max_outer, max_inner, coef_cap):
    """Proximal-Newton fit of the penalized logistic negative log-likelihood

        sum_i [log(1 + exp(eta_i)) - t_i*eta_i] + lam2*|b|^2 + sum(pen*|b|),

    eta = b0 + X b, intercept unpenalized. ``pen`` = +inf pins a coefficient
    at 0. Updates ``beta`` in place and returns (b0, iterations, converged,
    capped).
    """
    n, p = X.shape
    eta = np.empty(n)
    W = np.empty(n)
    z = np.empty(n)
    r = np.empty(n)
    xw2 = np.empty(p)
    new_beta = beta.copy()
    for j in range(p):
        if not np.isfinite(pen[j]):
            beta[j] = 0.0
    f_old = _logistic_objective(X, t, b0, beta, pen, lam2)
    converged = False
    capped = False
    outer = 0
    while outer < max_outer:
        outer += 1
        for i in range(n):
            e = b0
            for j in range(p):
                e += X[i, j] * beta[j]
            eta[i] = e
            pr = 1.0 / (1.0 + np.exp(-e))
            wi = pr * (1.0 - pr)
            if wi < 1e-5:
                wi = 1e-5
            W[i] = wi
            z[i] = e + (t[i] - pr) / wi
        for j in range(p):
            s = 0.0
            for i in range(n):
                s += W[i] * X[i, j] * X[i, j]
            xw2[j] = s
        sw = 0.0
        for i in range(n):
            sw += W[i]
        # inner weighted-least-squares CD, starting from current point
        nb0 = b0
        for j in range(p):
            new_beta[j] = beta[j]
        for i in range(n):
            r[i] = z[i] - eta[i]
        for _ in range(max_inner):
            max_delta = 0.0
            s = 0.0
            for i in range(n):
                s += W[i] * r[i]
            d0 = s / sw
            if d0 != 0.0:
                nb0 += d0
                for i in range(n):
                    r[i] -= d0
                if abs(d0) > max_delta:
                    max_delta = abs(d0)
            for j in range(p):
                if not np.isfinite(pen[j]):
                    continue
                old = new_beta[j]
                g = 0.0
                for i in range(n):
                    g += W[i] * X[i, j] * r[i]
                g += xw2[j] * old
                nv = _soft(g, pen[j]) / (xw2[j] + 2.0 * lam2)
                d = nv - old
                if d != 0.0:
                    new_beta[j] = nv
                    for i in range(n):
                        r[i] -= X[i, j] * d
                    if abs(d) > max_delta:
                        max_delta = abs(d)
            if max_delta < tol * 0.1:
                break
        # backtracking on the true objective keeps the iteration monotone
        step = 1.0
        db0 = nb0 - b0
        dbeta = new_beta - beta
        f_new = f_old
        accepted = False
        trial = beta.copy()
        for _ in range(40):
            tb0 = b0 + step * db0
            for j in range(p):
                trial[j] = beta[j] + step * dbeta[j]
            f_new = _logistic_objective(X, t, tb0, trial, pen, lam2)
            if f_new <= f_old + 1e-12 * abs(f_old):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        max_change = abs(step * db0)
        for j in range(p):
            if abs(step * dbeta[j]) > max_change:
                max_change = abs(step * dbeta[j])
        b0 = tb0
        for j in range(p):
            beta[j] = trial[j]
        big = 0.0
        for j in range(p):
            if abs(beta[j]) > big:
                big = abs(beta[j])
        if big > coef_cap:
            capped = True
            for j in range(p):
                if beta[j] > coef_cap:
                    beta[j] = coef_cap
                elif beta[j] < -coef_cap:
                    beta[j] = -coef_cap
            break
        rel = abs(f_old - f_new) / max(1.0, abs(f_new))
        f_old = f_new
        if max_change < tol or rel < 1e-14:
            converged = True
            break
    return b0, outer, converged, capped
