from dataclasses import dataclass

import numpy as np
from sklearn.utils.validation import check_array

from ..exceptions import DegenerateDesignError


@dataclass(frozen=True)
class DesignMatrix:
    """Covariate matrix together with the centering/scaling used to make it.

    ``constant`` flags columns with zero spread; they are centered to 0 and
    keep a scale of 1 so the inverse transform stays defined.
    """

    values: np.ndarray
    column_means: np.ndarray
    column_stds: np.ndarray
    standardized: bool
    constant: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    def transform(self, X):
        """Apply the stored centering/scaling to new rows."""
        X = check_array(X, dtype=np.float64)
        if not self.standardized:
            return X
        return (X - self.column_means) / self.column_stds

    def inverse_transform(self, Z):
        Z = np.asarray(Z, dtype=np.float64)
        if not self.standardized:
            return Z
        return Z * self.column_stds + self.column_means

    def coef_to_raw(self, coef):
        """Map standardized-scale slopes back to the raw covariate scale."""
        return np.asarray(coef, dtype=np.float64) / self.column_stds


def standardize(X):
    """Center each column and scale it to unit sample standard deviation.

    Raises
    ------
    DegenerateDesignError
        If every column is constant.
    """
    X = check_array(X, dtype=np.float64, ensure_min_samples=2)
    means = X.mean(axis=0)
    stds = X.std(axis=0, ddof=1)
    scale = np.maximum(np.abs(means), 1.0)
    constant = stds <= 1e-12 * scale
    if constant.all():
        raise DegenerateDesignError("degenerate design: every column is constant")
    stds = np.where(constant, 1.0, stds)
    Z = (X - means) / stds
    Z[:, constant] = 0.0
    return DesignMatrix(
        values=Z,
        column_means=means,
        column_stds=stds,
        standardized=True,
        constant=constant,
    )


def as_design(X):
    """Wrap an already prepared array without rescaling it."""
    if isinstance(X, DesignMatrix):
        return X
    X = check_array(X, dtype=np.float64, ensure_min_samples=2)
    p = X.shape[1]
    return DesignMatrix(
        values=X,
        column_means=np.zeros(p),
        column_stds=np.ones(p),
        standardized=False,
        constant=np.zeros(p, dtype=bool),
    )
