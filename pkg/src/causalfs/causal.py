"""Post-selection treatment-effect estimation.

Treated units are matched one-to-one, without replacement, to their nearest
control on the selected covariates; the ATT is then the coefficient of T in
an OLS fit of Y on (1, T, selected covariates) over the matched rows.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import DataError


@dataclass(frozen=True)
class MatchedSample:
    pairs: np.ndarray  # (k, 2) int: treated row, control row
    distances: np.ndarray
    flags: tuple = ()

    def __len__(self):
        return self.pairs.shape[0]

    @property
    def treated(self):
        return self.pairs[:, 0]

    @property
    def controls(self):
        return self.pairs[:, 1]

    @property
    def rows(self):
        return np.concatenate([self.pairs[:, 0], self.pairs[:, 1]])

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["treated_id", "control_id", "distance"])
            for (t, c), d in zip(self.pairs, self.distances):
                writer.writerow([int(t), int(c), repr(float(d))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        pairs = np.array([[int(r["treated_id"]), int(r["control_id"])] for r in rows],
                         dtype=np.int64).reshape(-1, 2)
        dist = np.array([float(r["distance"]) for r in rows])
        return cls(pairs, dist)


@dataclass(frozen=True)
class AttEstimate:
    att: float
    standard_error: float
    n_pairs: int
    model_used: str  # "selected-covariate regression" | "matched-mean-difference fallback"
    flags: tuple = ()
    dropped: tuple = field(default=())


def _match_space(X, selected, metric):
    Z = np.asarray(X, dtype=np.float64)[:, selected]
    sd = Z.std(axis=0, ddof=1)
    Z = (Z - Z.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    if metric == "mahalanobis" and Z.shape[1] > 1:
        cov = np.atleast_2d(np.cov(Z, rowvar=False))
        L = linalg.cholesky(cov + 1e-10 * np.eye(cov.shape[0]), lower=True)
        Z = linalg.solve_triangular(L, Z.T, lower=True).T
    elif metric not in ("euclidean", "mahalanobis"):
        raise ValueError(f"unknown metric {metric!r}")
    return Z


def nearest_neighbor_match(data, selected, metric="euclidean", caliper=None):
    """Greedy one-to-one nearest-neighbour matching without replacement.

    Treated rows are processed in ascending index order; each takes the
    closest still-unmatched control (Euclidean distance on the standardized
    selected covariates by default), ties going to the lowest control index.
    With no selected covariates each treated row is paired with the next
    unused control in index order. If controls run out, the remaining
    treated rows stay unmatched. Both situations are reported in ``flags``.
    """
    T = data.T
    treated = np.flatnonzero(T == 1)
    controls = np.flatnonzero(T == 0)
    if treated.size == 0 or controls.size == 0:
        raise DataError("matching needs both treated and control units")
    selected = np.asarray(selected, dtype=np.int64).ravel()
    flags = []
    if controls.size < treated.size:
        flags.append("fewer controls than treated")
    k = min(treated.size, controls.size)

    if selected.size == 0:
        flags.append("no covariates selected")
        pairs = np.column_stack([treated[:k], controls[:k]])
        return MatchedSample(pairs, np.zeros(k), tuple(flags))

    Z = _match_space(data.X, selected, metric)
    D = np.sqrt(((Z[treated][:, None, :] - Z[controls][None, :, :]) ** 2).sum(axis=2))
    used = np.zeros(controls.size, dtype=bool)
    pairs, dists = [], []
    for a, t in enumerate(treated):
        if used.all():
            break
        row = np.where(used, np.inf, D[a])
        j = int(np.argmin(row))
        if caliper is not None and row[j] > caliper:
            continue
        used[j] = True
        pairs.append((t, controls[j]))
        dists.append(row[j])
    if caliper is not None and len(pairs) < k:
        flags.append("caliper dropped treated units")
    return MatchedSample(np.array(pairs, dtype=np.int64).reshape(-1, 2), np.array(dists),
                         tuple(flags))


def _ols_with_se(A, y):
    coef, *_ = linalg.lstsq(A, y)
    resid = y - A @ coef
    dof = A.shape[0] - A.shape[1]
    if dof <= 0:
        # point estimate still identified; no residual degrees of freedom for a SE
        return coef, np.full(A.shape[1], np.nan)
    sigma2 = resid @ resid / dof
    cov = sigma2 * linalg.pinvh(A.T @ A)
    return coef, np.sqrt(np.maximum(np.diag(cov), 0.0))


def estimate_att(data, matched, selected):
    """ATT as the T coefficient of OLS(Y ~ 1 + T + selected) on matched rows.

    Covariates that are collinear with earlier columns are dropped (and
    listed in ``dropped``). With no selected covariates this reduces to the
    difference of matched means.
    """
    if len(matched) == 0:
        raise DataError("matched sample is empty")
    rows = matched.rows
    y = data.Y[rows]
    cols = [np.ones(rows.size), data.T[rows]]
    kept, dropped = [], []
    selected = [int(j) for j in np.asarray(selected, dtype=np.int64).ravel()]
    base = np.column_stack(cols)
    rank = np.linalg.matrix_rank(base)
    for j in selected:
        trial = np.column_stack([base, data.X[rows, j]])
        r = np.linalg.matrix_rank(trial)
        if r > rank:
            base, rank = trial, r
            kept.append(j)
        else:
            dropped.append(j)
    coef, se = _ols_with_se(base, y)
    flags = list(matched.flags)
    if dropped:
        flags.append("collinear covariates dropped")
    model = "selected-covariate regression" if kept else "matched-mean-difference fallback"
    if not selected:
        flags.append("empty selection")
    return AttEstimate(
        att=float(coef[1]),
        standard_error=float(se[1]),
        n_pairs=len(matched),
        model_used=model,
        flags=tuple(flags),
        dropped=tuple(dropped),
    )


def match_and_estimate(data, selected, **match_kw):
    matched = nearest_neighbor_match(data, selected, **match_kw)
    return estimate_att(data, matched, selected)


def target_model_att(data, **match_kw):
    """ATT using the true confounders and outcome predictors as the covariate set."""
    return match_and_estimate(data, data.target_set, **match_kw)


def selection_bias(model_att, reference):
    """Signed difference ``att - reference`` (absolute values are a reporting choice)."""
    att = model_att.att if isinstance(model_att, AttEstimate) else float(model_att)
    return att - float(reference)


def standardized_mean_differences(X, T, rows=None, scale=None):
    """|mean(treated) - mean(control)| / scale per column, over ``rows``.

    ``scale`` defaults to the pooled SD of the full sample, so pre- and
    post-matching values are comparable.
    """
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if scale is None:
        scale = np.sqrt(0.5 * (X[T == 1].var(axis=0, ddof=1) + X[T == 0].var(axis=0, ddof=1)))
    if rows is not None:
        X, T = X[rows], T[rows]
    diff = np.abs(X[T == 1].mean(axis=0) - X[T == 0].mean(axis=0))
    return diff / np.where(scale > 0, scale, 1.0)


def pair_standardized_differences(X, T, matched, cols):
    """Mean |x_treated - x_control| / sd per column: over matched pairs, and
    over all treated-control combinations (the unmatched baseline).

    Returns (matched_value, baseline_value); sd is the full-sample pooled SD.
    """
    X = np.asarray(X, dtype=np.float64)[:, cols]
    T = np.asarray(T, dtype=np.float64)
    scale = np.sqrt(0.5 * (X[T == 1].var(axis=0, ddof=1) + X[T == 0].var(axis=0, ddof=1)))
    scale = np.where(scale > 0, scale, 1.0)
    matched_diff = np.abs(X[matched.treated] - X[matched.controls]).mean(axis=0) / scale
    xt, xc = X[T == 1], X[T == 0]
    baseline = np.array([np.abs(xt[:, j][:, None] - xc[:, j][None, :]).mean()
                         for j in range(X.shape[1])]) / scale
    return matched_diff, baseline
