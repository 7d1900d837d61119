"""Simulation grid: scenario x N x rho x seed cells, one record per model.

Records stream into ``records.csv`` under the output directory; a
``manifest.json`` next to it carries the grid and selector-config hashes so a
rerun can tell whether the store belongs to the same experiment. Cells whose
key is already in the store are skipped.
"""

import csv
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..causal import match_and_estimate, selection_bias
from ..frameworks import MODEL_NAMES, THREE_STAGE_MODELS, SelectorConfig, run_selector
from ..synthgen import ScenarioSpec, generate, true_att

log = logging.getLogger(__name__)

RECORD_FIELDS = ("scenario", "n", "rho", "seed", "model", "p", "selected", "att", "bias",
                 "wall_clock_seconds", "cell_seconds", "error")
RECORDS_FILE = "records.csv"
MANIFEST_FILE = "manifest.json"


@dataclass(frozen=True)
class ExperimentGrid:
    scenarios: tuple = (1, 2, 3, 4)
    ns: tuple = (200, 500, 1000)
    rhos: tuple = (0.0, 0.25, 0.5, 0.75)
    seeds: tuple = tuple(range(1, 31))
    models: tuple = THREE_STAGE_MODELS
    true_effect: float = 0.0
    p: int = 20

    def __post_init__(self):
        for name in ("scenarios", "ns", "rhos", "seeds", "models"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"grid field {name!r} is empty")
            object.__setattr__(self, name, values)
        bad = [s for s in self.scenarios if s not in (1, 2, 3, 4)]
        if bad:
            raise ValueError(f"unknown scenarios {bad}")
        bad = [m for m in self.models if m not in MODEL_NAMES]
        if bad:
            raise ValueError(f"unknown models {bad}")
        if any(not 0 <= r < 1 for r in self.rhos):
            raise ValueError("rho values must lie in [0, 1)")
        if any(n < 20 for n in self.ns):
            raise ValueError("sample sizes must be at least 20")

    def cells(self):
        """Data cells in canonical order; every model runs on each cell's data."""
        return [(s, n, float(r), seed) for s in self.scenarios for n in self.ns
                for r in self.rhos for seed in self.seeds]

    def keys(self):
        return [(*cell, m) for cell in self.cells() for m in self.models]

    def config_hashes(self):
        return {m: _sha(SelectorConfig.from_name(m).to_kv()) for m in self.models}

    def grid_hash(self):
        return _sha(json.dumps(asdict(self), sort_keys=True))


@dataclass
class ExperimentRecord:
    scenario: int
    n: int
    rho: float
    seed: int
    model: str
    p: int
    selected: tuple = ()  # 0-based
    att: float = math.nan
    bias: float = math.nan
    wall_clock_seconds: float = math.nan
    cell_seconds: float = math.nan
    error: str = ""

    @property
    def key(self):
        return (self.scenario, self.n, self.rho, self.seed, self.model)

    def to_row(self):
        row = asdict(self)
        # stored 1-based, matching the X1..Xp covariate names
        row["selected"] = ";".join(str(j + 1) for j in self.selected)
        for k in ("rho", "att", "bias", "wall_clock_seconds", "cell_seconds"):
            row[k] = repr(float(row[k]))
        return row

    @classmethod
    def from_row(cls, row):
        sel = row["selected"].strip()
        return cls(
            scenario=int(row["scenario"]),
            n=int(row["n"]),
            rho=float(row["rho"]),
            seed=int(row["seed"]),
            model=row["model"],
            p=int(row["p"]),
            selected=tuple(int(j) - 1 for j in sel.split(";")) if sel else (),
            att=float(row["att"]),
            bias=float(row["bias"]),
            wall_clock_seconds=float(row["wall_clock_seconds"]),
            cell_seconds=float(row["cell_seconds"]),
            error=row.get("error", "") or "",
        )


@dataclass
class RunSummary:
    computed: int = 0
    skipped: int = 0
    errors: int = 0
    elapsed_seconds: float = 0.0
    records: list = field(default_factory=list)


def _sha(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_cell(cell, models, true_effect=0.0, p=20):
    """Run every model on one data cell. Never raises; failures become error records."""
    scenario, n, rho, seed = cell
    spec = ScenarioSpec(id=scenario, p=p, true_effect=true_effect)
    try:
        data = generate(spec, n, rho, seed)
    except Exception as exc:  # noqa: BLE001 - recorded, grid continues
        return [ExperimentRecord(scenario, n, rho, seed, m, p, error=_tag(exc)) for m in models]
    out = []
    for m in models:
        start = time.perf_counter()
        try:
            res = run_selector(data, SelectorConfig.from_name(m))
            est = match_and_estimate(data, res.selected)
            out.append(ExperimentRecord(
                scenario, n, rho, seed, m, p,
                selected=tuple(int(j) for j in res.selected),
                att=est.att,
                bias=selection_bias(est, true_att(spec)),
                wall_clock_seconds=res.wall_clock_seconds,
                cell_seconds=time.perf_counter() - start,
            ))
        except Exception as exc:  # noqa: BLE001
            out.append(ExperimentRecord(scenario, n, rho, seed, m, p, error=_tag(exc),
                                        cell_seconds=time.perf_counter() - start))
    return out


def _tag(exc):
    return f"{type(exc).__name__}: {exc}".replace("\n", " ")


def _run_cell_star(args):
    return run_cell(*args)


def read_records(path, include_errors=False):
    if os.path.isdir(path):
        path = os.path.join(path, RECORDS_FILE)
    if not os.path.exists(path):
        return []
    with open(path, newline="", encoding="utf-8") as fh:
        recs = [ExperimentRecord.from_row(r) for r in csv.DictReader(fh)]
    return recs if include_errors else [r for r in recs if not r.error]


def write_records(path, records):
    """Write records sorted by key, so the file is independent of completion order."""
    tmp = path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
        writer.writeheader()
        for rec in sorted(records, key=lambda r: r.key):
            writer.writerow(rec.to_row())
    os.replace(tmp, path)


def _check_manifest(out_dir, grid):
    path = os.path.join(out_dir, MANIFEST_FILE)
    if not os.path.exists(path):
        return
    with open(path, encoding="utf-8") as fh:
        old = json.load(fh)
    stale = {m for m, h in old.get("config_hashes", {}).items()
             if grid.config_hashes().get(m, h) != h}
    if stale:
        raise ValueError(f"store at {out_dir} was produced with different settings for "
                         f"{sorted(stale)}; use a fresh output directory")
    if old.get("p", grid.p) != grid.p or old.get("true_effect", grid.true_effect) != grid.true_effect:
        raise ValueError(f"store at {out_dir} uses a different p or true effect")


def _write_manifest(out_dir, grid, summary, records):
    path = os.path.join(out_dir, MANIFEST_FILE)
    hashes = {}
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            hashes = json.load(fh).get("config_hashes", {})
    hashes.update(grid.config_hashes())
    manifest = {
        "grid": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(grid).items()},
        "grid_hash": grid.grid_hash(),
        "config_hashes": hashes,
        "p": grid.p,
        "true_effect": grid.true_effect,
        "records": len([r for r in records if not r.error]),
        "error_records": len([r for r in records if r.error]),
        "last_run": {
            "computed": summary.computed,
            "skipped": summary.skipped,
            "errors": summary.errors,
            "elapsed_seconds": summary.elapsed_seconds,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def run_grid(grid, out_dir, workers=1):
    """Execute every missing cell of ``grid`` and merge into the store at ``out_dir``.

    Returns a :class:`RunSummary`. Per-cell failures are stored as records
    with a non-empty ``error`` and do not stop the run; they count as
    present on resume.
    """
    os.makedirs(out_dir, exist_ok=True)
    _check_manifest(out_dir, grid)
    recover_journal(out_dir)
    path = os.path.join(out_dir, RECORDS_FILE)
    existing = {r.key: r for r in read_records(path, include_errors=True)}

    todo = []
    for cell in grid.cells():
        missing = tuple(m for m in grid.models if (*cell, m) not in existing)
        if missing:
            todo.append((cell, missing, grid.true_effect, grid.p))
    summary = RunSummary(skipped=len(grid.keys()) - sum(len(t[1]) for t in todo))

    start = time.perf_counter()
    # appends go through this process only; workers just compute
    journal = open(path + ".journal", "a", newline="", encoding="utf-8")
    try:
        writer = csv.DictWriter(journal, fieldnames=RECORD_FIELDS)
        if workers > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(_run_cell_star, todo, chunksize=1)
                for recs in results:
                    _absorb(recs, existing, writer, journal, summary)
        else:
            for args in todo:
                _absorb(_run_cell_star(args), existing, writer, journal, summary)
    finally:
        journal.close()
    summary.elapsed_seconds = time.perf_counter() - start

    records = list(existing.values())
    write_records(path, records)
    os.remove(path + ".journal")
    _write_manifest(out_dir, grid, summary, records)
    summary.records = sorted(records, key=lambda r: r.key)
    log.info("grid: %d computed, %d skipped, %d errors in %.1fs", summary.computed,
             summary.skipped, summary.errors, summary.elapsed_seconds)
    return summary


def _absorb(recs, existing, writer, fh, summary):
    for rec in recs:
        existing[rec.key] = rec
        writer.writerow(rec.to_row())
        summary.computed += 1
        summary.errors += bool(rec.error)
    fh.flush()


def recover_journal(out_dir):
    """Fold records from an interrupted run's journal back into the store."""
    path = os.path.join(out_dir, RECORDS_FILE)
    journal = path + ".journal"
    if not os.path.exists(journal):
        return 0
    recs = {r.key: r for r in read_records(path, include_errors=True)}
    with open(journal, newline="", encoding="utf-8") as fh:
        extra = [ExperimentRecord.from_row(dict(zip(RECORD_FIELDS, row)))
                 for row in csv.reader(fh) if len(row) == len(RECORD_FIELDS)]
    for r in extra:
        recs[r.key] = r
    write_records(path, list(recs.values()))
    os.remove(journal)
    return len(extra)


def mean_wall_clock(records, model=None, n=None):
    vals = [r.wall_clock_seconds for r in records
            if (model is None or r.model == model) and (n is None or r.n == n)]
    return float(np.mean(vals)) if vals else math.nan
