"""Bootstrap selection study on a user-supplied CSV.

Each iteration keeps every treated row plus a fresh without-replacement
sample of control rows, runs each selector, and matches on the selected
covariates. Covariates picked in at least ``threshold`` of the iterations
form a model's consensus set.
"""

import csv
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..causal import match_and_estimate, selection_bias
from ..exceptions import DataError
from ..frameworks import MODEL_NAMES, THREE_STAGE_MODELS, SelectorConfig, run_selector
from ..synthgen import Dataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RealDataJob:
    csv_path: str
    treatment: str
    outcome: str
    iterations: int = 500
    control_sample_size: int = 5000
    threshold: float = 0.70
    expert_features: tuple = None  # column names, or 1-based positions among the features
    seed: int = 0
    models: tuple = THREE_STAGE_MODELS

    def __post_init__(self):
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must lie in (0, 1]")
        if self.iterations < 1 or self.control_sample_size < 1:
            raise ValueError("iterations and control sample size must be positive")
        bad = [m for m in self.models if m not in MODEL_NAMES]
        if bad:
            raise ValueError(f"unknown models {bad}")
        if self.expert_features is not None:
            object.__setattr__(self, "expert_features", tuple(self.expert_features))
        object.__setattr__(self, "models", tuple(self.models))


@dataclass(frozen=True)
class ModelReport:
    model: str
    frequencies: tuple
    consensus: tuple  # 0-based feature indices
    mean_att: float
    sd_att: float
    bias: float = None  # mean ATT minus the expert-set mean ATT
    mean_seconds: float = field(default=None, compare=False)


@dataclass(frozen=True)
class StudyReport:
    feature_names: tuple
    iterations: int
    n_treated: int
    n_controls: int
    rows_dropped: int
    models: dict
    expert_features: tuple = None  # 0-based
    expert_mean_att: float = None

    def consensus_names(self, model):
        return tuple(self.feature_names[j] for j in self.models[model].consensus)

    def to_dict(self):
        return {
            "feature_names": list(self.feature_names),
            "iterations": self.iterations,
            "n_treated": self.n_treated,
            "n_controls": self.n_controls,
            "rows_dropped": self.rows_dropped,
            "expert_features": None if self.expert_features is None else [
                self.feature_names[j] for j in self.expert_features],
            "expert_mean_att": self.expert_mean_att,
            "models": {
                m: {
                    "consensus": list(self.consensus_names(m)),
                    "consensus_positions": [j + 1 for j in r.consensus],
                    "mean_att": r.mean_att,
                    "sd_att": r.sd_att,
                    "bias": r.bias,
                    "mean_seconds": r.mean_seconds,
                    "frequencies": dict(zip(self.feature_names, r.frequencies)),
                }
                for m, r in self.models.items()
            },
        }


def _binary_codes(series, name):
    """0/1 codes for a two-valued column; numeric 0/1 is kept, other pairs map in sorted order."""
    levels = sorted(series.unique().tolist(), key=str)
    if len(levels) != 2:
        raise DataError(f"column {name!r} must have exactly two values, found {len(levels)}")
    if set(levels) <= {0, 1}:
        return series.astype(np.float64).to_numpy()
    return (series == levels[1]).astype(np.float64).to_numpy()


def encode_frame(frame, treatment, outcome):
    """Dataset from a DataFrame: NA rows dropped, categoricals one-hot with first level dropped.

    Returns (dataset, rows_dropped). The outcome may be numeric or two-valued.
    """
    for col in (treatment, outcome):
        if col not in frame.columns:
            raise DataError(f"column {col!r} not found")
    before = len(frame)
    frame = frame.dropna()
    dropped = before - len(frame)
    if frame.empty:
        raise DataError("no complete rows")
    T = _binary_codes(frame[treatment], treatment)
    y = frame[outcome]
    Y = y.to_numpy(np.float64) if pd.api.types.is_numeric_dtype(y) else _binary_codes(y, outcome)
    feats = frame.drop(columns=[treatment, outcome])
    categorical = [c for c in feats.columns if not pd.api.types.is_numeric_dtype(feats[c])
                   or pd.api.types.is_bool_dtype(feats[c])]
    if categorical:
        feats = pd.get_dummies(feats, columns=categorical, drop_first=True, dtype=np.float64)
    if feats.shape[1] == 0:
        raise DataError("no covariate columns")
    data = Dataset(feats.to_numpy(np.float64), T, Y,
                   feature_names=tuple(str(c) for c in feats.columns))
    return data, dropped


def load_job_data(job):
    try:
        frame = pd.read_csv(job.csv_path, encoding="utf-8")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {job.csv_path}: {exc}") from exc
    return encode_frame(frame, job.treatment, job.outcome)


def _resolve_features(wanted, names):
    out = []
    for f in wanted:
        if isinstance(f, str) and f in names:
            out.append(names.index(f))
            continue
        try:
            pos = int(f)
        except (TypeError, ValueError):
            raise DataError(f"unknown expert feature {f!r}") from None
        if not 1 <= pos <= len(names):
            raise DataError(f"expert feature position {pos} out of range 1..{len(names)}")
        out.append(pos - 1)
    return tuple(sorted(set(out)))


def run_bootstrap_study(job, data=None, rows_dropped=0):
    """Run the bootstrap workflow of ``job``; returns a :class:`StudyReport`.

    ``data`` skips CSV loading (it must carry ``feature_names``).
    """
    if data is None:
        data, rows_dropped = load_job_data(job)
    names = tuple(data.feature_names or (f"X{j + 1}" for j in range(data.p)))
    treated = np.flatnonzero(data.T == 1)
    controls = np.flatnonzero(data.T == 0)
    if treated.size == 0 or controls.size == 0:
        raise DataError("both treatment classes must be present")
    expert = None if job.expert_features is None else _resolve_features(job.expert_features,
                                                                         list(names))
    k = min(job.control_sample_size, controls.size)
    configs = {m: SelectorConfig.from_name(m) for m in job.models}

    counts = {m: np.zeros(data.p) for m in job.models}
    atts = {m: [] for m in job.models}
    secs = {m: [] for m in job.models}
    expert_atts = []
    for it, child in enumerate(np.random.SeedSequence(job.seed).spawn(job.iterations)):
        rng = np.random.default_rng(child)
        rows = np.sort(np.concatenate([treated, rng.choice(controls, size=k, replace=False)]))
        sub = data.subset(rows)
        for m, cfg in configs.items():
            start = time.perf_counter()
            res = run_selector(sub, cfg)
            secs[m].append(time.perf_counter() - start)
            counts[m][res.selected] += 1
            atts[m].append(match_and_estimate(sub, res.selected).att)
        if expert is not None:
            expert_atts.append(match_and_estimate(sub, list(expert)).att)
        log.debug("bootstrap iteration %d/%d done", it + 1, job.iterations)

    expert_mean = float(np.mean(expert_atts)) if expert is not None else None
    reports = {}
    for m in job.models:
        freq = counts[m] / job.iterations
        a = np.array(atts[m])
        mean_att = float(a.mean())
        reports[m] = ModelReport(
            model=m,
            frequencies=tuple(float(f) for f in freq),
            # small slack so e.g. 7/10 counts at threshold 0.7
            consensus=tuple(int(j) for j in np.flatnonzero(freq >= job.threshold - 1e-12)),
            mean_att=mean_att,
            sd_att=float(a.std(ddof=1)) if a.size > 1 else 0.0,
            bias=None if expert_mean is None else selection_bias(mean_att, expert_mean),
            mean_seconds=float(np.mean(secs[m])),
        )
    return StudyReport(
        feature_names=names,
        iterations=job.iterations,
        n_treated=int(treated.size),
        n_controls=int(controls.size),
        rows_dropped=int(rows_dropped),
        models=reports,
        expert_features=expert,
        expert_mean_att=expert_mean,
    )


def consensus_intersection(report):
    """Features in every model's consensus set (0-based)."""
    sets = [set(r.consensus) for r in report.models.values()]
    return tuple(sorted(set.intersection(*sets))) if sets else ()


def write_report(report, out_prefix):
    """Write ``<prefix>.json`` and a long-format ``<prefix>_frequencies.csv``."""
    with open(out_prefix + ".json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    with open(out_prefix + "_frequencies.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("model", "covariate", "name", "frequency", "consensus"))
        for m, r in report.models.items():
            for j, f in enumerate(r.frequencies):
                writer.writerow((m, j + 1, report.feature_names[j], repr(f),
                                 "true" if j in r.consensus else "false"))


def write_dataset_csv(data, path, treatment="T", outcome="Y"):
    """Export a dataset in the layout ``load_job_data`` reads (X1..Xp, T, Y)."""
    names = data.feature_names or tuple(f"X{j + 1}" for j in range(data.p))
    frame = pd.DataFrame(data.X, columns=list(names))
    frame[treatment] = data.T.astype(np.int64)
    frame[outcome] = data.Y
    frame.to_csv(path, index=False, encoding="utf-8", float_format="%.17g")
