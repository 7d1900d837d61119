"""Summaries of a record store: selection frequencies, bias tests, plot tables."""

import csv
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .grid import read_records

PLOT_HEADERS = {
    "bias": ("model", "scenario", "n", "rho", "seed", "bias"),
    "selectionProbability": ("model", "scenario", "n", "rho", "covariate", "frequency"),
    "biasSummary": ("model", "scenario", "n", "rho", "seeds", "mean_bias", "sd_bias",
                    "p_value", "degenerate"),
    "timing": ("model", "scenario", "n", "rho", "runs", "mean_seconds", "total_seconds"),
}


@dataclass(frozen=True)
class BiasSummary:
    model: str
    scenario: int
    n: int
    rho: float
    seeds: int
    mean_bias: float
    sd_bias: float
    p_value: float  # nan when degenerate
    degenerate: bool


def _groups(records):
    out = defaultdict(list)
    for r in records:
        if not r.error:
            out[(r.model, r.scenario, r.n, r.rho)].append(r)
    return dict(sorted(out.items()))


def aggregate_selection_probabilities(records):
    """Per (model, scenario, n, rho, covariate) share of seeds selecting it.

    Returns a list of tuples ``(model, scenario, n, rho, covariate, frequency)``
    with 1-based covariate numbers; every covariate 1..p gets a row.
    """
    groups = _groups(records)
    if not groups:
        raise ValueError("no records to aggregate")
    rows = []
    for (model, scenario, n, rho), recs in groups.items():
        p = recs[0].p
        counts = np.zeros(p)
        for r in recs:
            counts[list(r.selected)] += 1
        for j in range(p):
            rows.append((model, scenario, n, rho, j + 1, counts[j] / len(recs)))
    return rows


def bias_summary(records):
    """Mean and SD of bias per cell, with a two-sided one-sample t-test of mean 0.

    Cells whose biases have zero spread get ``degenerate=True`` and a NaN
    p-value instead of a test.
    """
    out = []
    for (model, scenario, n, rho), recs in _groups(records).items():
        b = np.array([r.bias for r in recs])
        if b.size < 2:
            raise ValueError(f"cell {(model, scenario, n, rho)} has fewer than 2 seeds")
        sd = float(b.std(ddof=1))
        degenerate = not sd > 1e-12 * max(1.0, float(np.abs(b).max()))
        p = math.nan if degenerate else float(stats.ttest_1samp(b, 0.0).pvalue)
        out.append(BiasSummary(model, scenario, n, rho, b.size, float(b.mean()), sd, p,
                               degenerate))
    return out


def timing_summary(records):
    out = []
    for (model, scenario, n, rho), recs in _groups(records).items():
        t = np.array([r.wall_clock_seconds for r in recs])
        out.append((model, scenario, n, rho, t.size, float(t.mean()), float(t.sum())))
    return out


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_plot_data(store, kind, out_path):
    """Write a long-format CSV for ``kind`` with the fixed header in PLOT_HEADERS.

    ``store`` is a record-store directory, a records CSV, or a list of records.
    Returns the number of data rows written.
    """
    if kind not in PLOT_HEADERS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {sorted(PLOT_HEADERS)}")
    records = read_records(store) if isinstance(store, str) else list(store)
    if not records:
        raise ValueError("record store is empty")
    if kind == "bias":
        rows = [(r.model, r.scenario, r.n, r.rho, r.seed, r.bias)
                for r in sorted(records, key=lambda r: r.key) if not r.error]
    elif kind == "selectionProbability":
        rows = aggregate_selection_probabilities(records)
    elif kind == "biasSummary":
        rows = [(s.model, s.scenario, s.n, s.rho, s.seeds, s.mean_bias, s.sd_bias, s.p_value,
                 s.degenerate) for s in bias_summary(records)]
    else:
        rows = timing_summary(records)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLOT_HEADERS[kind])
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return len(rows)
