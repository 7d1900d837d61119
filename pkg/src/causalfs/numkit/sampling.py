import numpy as np


def equicorrelation_cholesky(p, rho):
    if not 0 <= rho < 1:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    cov = np.full((p, p), rho)
    np.fill_diagonal(cov, 1.0)
    return np.linalg.cholesky(cov)


def sample_equicorrelated_gaussian(n, p, rho, seed):
    """Draw n rows from N(0, S) with unit variances and all correlations rho.

    ``seed`` may be an int or a numpy Generator (consumed in place).
    """
    L = equicorrelation_cholesky(p, rho)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.standard_normal((n, p)) @ L.T
