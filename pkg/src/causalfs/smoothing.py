"""Maps from first-stage coefficients to L1 penalty weights.

Two directions are covered:

* penalty smoothing (exposure coefficient -> outcome-model weight): the
  weight grows with |beta_j|, bounded in [0.5**g, 1) for the sigmoid and in
  [0, 1) for tanh;
* inverse-power weights |theta_j|**(-g), used by the adaptive stage and by
  the outcome-adaptive baselines; they shrink as |theta_j| grows.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

KINDS = ("sigmoid", "tanh", "inversePower", "oalInverse")
DEFAULT_GAMMA = {"sigmoid": 1.0, "tanh": 0.5, "inversePower": 1.0, "oalInverse": 1.0}
ZERO_CLAMP = 1e8


@dataclass(frozen=True)
class SmoothingSpec:
    kind: str = "sigmoid"
    gamma: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown smoothing kind {self.kind!r}; expected one of {KINDS}")
        if self.gamma is None:
            object.__setattr__(self, "gamma", DEFAULT_GAMMA[self.kind])
        g = float(self.gamma)
        if not (np.isfinite(g) and g > 0):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma}")
        object.__setattr__(self, "gamma", g)

    def weights(self, coef, zero_policy="inf"):
        if self.kind == "sigmoid":
            return sigmoid_weights(coef, self.gamma)
        if self.kind == "tanh":
            return tanh_weights(coef, self.gamma)
        return inverse_power_weights(coef, self.gamma, zero_policy=zero_policy)


def _finite(beta):
    beta = np.asarray(beta, dtype=np.float64)
    if not np.isfinite(beta).all():
        raise ValueError("coefficients must be finite")
    return beta


def sigmoid_weights(beta, gamma=1.0):
    """``(1 / (1 + exp(-|beta|)))**gamma``."""
    return expit(np.abs(_finite(beta))) ** gamma


def tanh_weights(beta, gamma=0.5):
    """``tanh(|beta|)**gamma``."""
    return np.tanh(np.abs(_finite(beta))) ** gamma


def inverse_power_weights(theta, gamma=1.0, zero_policy="inf"):
    """``|theta|**(-gamma)``.

    zero_policy
        ``"inf"`` maps an exactly-zero coefficient to +inf (the coefficient is
        then excluded downstream); ``"clamp"`` caps every weight at 1e8.
    """
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    if zero_policy not in ("inf", "clamp"):
        raise ValueError(f"unknown zero_policy {zero_policy!r}")
    a = np.abs(np.asarray(theta, dtype=np.float64))
    with np.errstate(divide="ignore"):
        w = np.where(a > 0, a ** (-gamma), np.inf)
    if zero_policy == "clamp":
        w = np.minimum(w, ZERO_CLAMP)
    return w
