"""Synthetic benchmark scenarios with known covariate roles.

Data are drawn as

    X ~ N(0, R),  R unit-diagonal with all correlations rho
    T ~ Bernoulli(expit(X beta))
    Y = alpha * T + X theta + eps,  eps ~ N(0, noise_sd^2)

Covariate indices in the scenario tables are 1-based (X1..Xp); arrays and
index sets returned by this module are 0-based.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import DegenerateScenarioError
from .numkit import sample_equicorrelated_gaussian

MAX_TREATMENT_DRAWS = 100

_THETA = {
    1: (0.6, 0.6, 0.6, 0.6),
    2: (0.6, 0.6, 0.6, 0.6),
    3: (0.2, 0.2, 0.6, 0.6),
    4: (0.6, 0.6, 0.6, 0.6),
}
_BETA = {
    1: (1.0, 1.0, 0.0, 0.0, 1.0, 1.0),
    2: (0.4, 0.4, 0.0, 0.0, 1.0, 1.0),
    3: (1.0, 1.0, 0.0, 0.0, 1.0, 1.0),
    4: (1.0, 1.0, 0.0, 0.0, 1.8, 1.8),
}


def _pad(values, p):
    out = np.zeros(p)
    out[: len(values)] = values
    return out


def classify_covariates(theta, beta):
    """Split covariate indices by role from the outcome/treatment coefficients.

    Returns a dict with keys ``confounders`` (both nonzero), ``outcome``
    (outcome only), ``treatment`` (treatment only) and ``noise``.
    """
    th = np.asarray(theta) != 0
    be = np.asarray(beta) != 0
    return {
        "confounders": np.flatnonzero(th & be),
        "outcome": np.flatnonzero(th & ~be),
        "treatment": np.flatnonzero(~th & be),
        "noise": np.flatnonzero(~th & ~be),
    }


@dataclass(frozen=True)
class ScenarioSpec:
    id: int = 1
    p: int = 20
    true_effect: float = 0.0
    outcome_noise_sd: float = 1.0
    theta: np.ndarray = field(default=None, repr=False)
    beta: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.theta is None or self.beta is None:
            if self.id not in _THETA:
                raise ValueError(f"unknown scenario {self.id}; pass theta and beta explicitly")
            if self.p < 6:
                raise ValueError("the built-in scenarios need p >= 6")
        theta = _pad(_THETA[self.id], self.p) if self.theta is None else np.asarray(
            self.theta, dtype=float)
        beta = _pad(_BETA[self.id], self.p) if self.beta is None else np.asarray(
            self.beta, dtype=float)
        if theta.shape != (self.p,) or beta.shape != (self.p,):
            raise ValueError("theta and beta must have length p")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def custom(cls, theta, beta, **kw):
        theta = np.asarray(theta, dtype=float)
        return cls(id=0, p=theta.size, theta=theta, beta=beta, **kw)

    @property
    def truth(self):
        return classify_covariates(self.theta, self.beta)


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    T: np.ndarray
    Y: np.ndarray
    truth: dict = None
    true_effect: float = None
    feature_names: tuple = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        T = np.asarray(self.T, dtype=np.float64).ravel()
        Y = np.asarray(self.Y, dtype=np.float64).ravel()
        if X.ndim != 2 or X.shape[0] != T.size or T.size != Y.size:
            raise ValueError("X, T and Y must have matching numbers of rows")
        if not np.isin(T, (0.0, 1.0)).all():
            raise ValueError("T must be binary 0/1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def target_set(self):
        """Covariates a selector should keep: confounders and outcome predictors."""
        if self.truth is None:
            raise ValueError("dataset has no ground-truth covariate roles")
        return np.sort(np.concatenate([self.truth["confounders"], self.truth["outcome"]]))

    def subset(self, rows):
        rows = np.asarray(rows)
        return Dataset(self.X[rows], self.T[rows], self.Y[rows], self.truth, self.true_effect,
                       self.feature_names)


def generate(spec, n, rho, seed):
    """Draw one dataset for ``spec``; a pure function of (spec, n, rho, seed).

    Treatment vectors with a single class are redrawn (up to 100 times).
    """
    if n < 20:
        raise ValueError("n must be at least 20")
    rng = np.random.default_rng(seed)
    X = sample_equicorrelated_gaussian(n, spec.p, rho, rng)
    prob = expit(X @ spec.beta)
    for _ in range(MAX_TREATMENT_DRAWS):
        T = (rng.random(n) < prob).astype(np.float64)
        if 0 < T.sum() < n:
            break
    else:
        raise DegenerateScenarioError(
            f"degenerate scenario: {MAX_TREATMENT_DRAWS} single-class treatment draws")
    Y = spec.true_effect * T + X @ spec.theta + spec.outcome_noise_sd * rng.standard_normal(n)
    return Dataset(X=X, T=T, Y=Y, truth=spec.truth, true_effect=float(spec.true_effect))


def true_att(spec):
    # constant additive effect: ATT equals the injected effect
    return float(spec.true_effect)
