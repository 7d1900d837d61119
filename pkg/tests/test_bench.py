import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from causalfs.bench import (
    PLOT_HEADERS,
    ExperimentGrid,
    ExperimentRecord,
    RealDataJob,
    aggregate_selection_probabilities,
    bias_summary,
    emit_plot_data,
    encode_frame,
    read_records,
    run_bootstrap_study,
    run_grid,
)
from causalfs.bench import bootstrap as bootstrap_mod
from causalfs.bench import grid as grid_mod
from causalfs.bench.bootstrap import write_dataset_csv
from causalfs.bench.cli import main, read_config, seed_list
from causalfs.exceptions import DataError
from causalfs.frameworks import SelectionResult
from causalfs.synthgen import ScenarioSpec, generate

SMALL = dict(scenarios=(1,), ns=(200,), rhos=(0.0,), seeds=(1,), models=("Enh-ESVMS",))


def rec(model="M", seed=1, selected=(), bias=0.0, p=4, scenario=1, n=200, rho=0.0):
    return ExperimentRecord(scenario, n, rho, seed, model, p, selected=tuple(selected),
                            att=bias, bias=bias, wall_clock_seconds=0.1, cell_seconds=0.1)


# grid


def test_default_grid_size():
    g = ExperimentGrid()
    assert len(g.cells()) == 4 * 3 * 4 * 30
    assert len(g.keys()) == 1440 * 4


def test_grid_validation():
    with pytest.raises(ValueError):
        ExperimentGrid(scenarios=(5,))
    with pytest.raises(ValueError):
        ExperimentGrid(models=("nope",))
    with pytest.raises(ValueError):
        ExperimentGrid(rhos=(1.0,))


def test_one_cell_grid_and_resume(tmp_path):
    g = ExperimentGrid(**SMALL)
    first = run_grid(g, str(tmp_path))
    recs = read_records(str(tmp_path))
    assert first.computed == 1 and len(recs) == 1
    r = recs[0]
    assert r.selected and math.isfinite(r.att) and r.bias == r.att
    assert r.wall_clock_seconds > 0 and not r.error
    again = run_grid(g, str(tmp_path))
    assert again.computed == 0 and again.skipped == 1
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["grid_hash"] == g.grid_hash()
    assert set(manifest["config_hashes"]) == {"Enh-ESVMS"}


def test_resume_extends_store(tmp_path):
    run_grid(ExperimentGrid(**SMALL), str(tmp_path))
    more = ExperimentGrid(**{**SMALL, "seeds": (1, 2)})
    s = run_grid(more, str(tmp_path))
    assert s.computed == 1 and s.skipped == 1
    assert [r.seed for r in read_records(str(tmp_path))] == [1, 2]


def test_store_rejects_changed_settings(tmp_path):
    run_grid(ExperimentGrid(**SMALL), str(tmp_path))
    with pytest.raises(ValueError):
        run_grid(ExperimentGrid(**SMALL, true_effect=1.0), str(tmp_path))


def test_cell_failures_are_recorded(tmp_path, monkeypatch):
    def boom(data, cfg):
        if cfg.name == "Enh-ELRT":
            raise FloatingPointError("synthetic failure")
        return SelectionResult(None, None, None, np.array([0, 1]), wall_clock_seconds=0.01)

    monkeypatch.setattr(grid_mod, "run_selector", boom)
    g = ExperimentGrid(**{**SMALL, "seeds": (1, 2), "models": ("Enh-ESVMS", "Enh-ELRT")})
    s = run_grid(g, str(tmp_path))
    assert s.errors == 2
    good = read_records(str(tmp_path))
    assert len(good) == len(g.keys()) - s.errors
    bad = [r for r in read_records(str(tmp_path), include_errors=True) if r.error]
    assert all("FloatingPointError" in r.error for r in bad)


def test_parallel_run_matches_serial(tmp_path):
    g = ExperimentGrid(scenarios=(1, 2), ns=(200,), rhos=(0.0,), seeds=(1, 2),
                       models=("Enh-ESVMS", "Enh-ELRS"))
    run_grid(g, str(tmp_path / "serial"))
    run_grid(g, str(tmp_path / "par"), workers=2)

    def strip(path):
        rows = list(csv.DictReader(open(path / "records.csv")))
        return [{k: v for k, v in r.items() if not k.endswith("seconds")} for r in rows]

    assert strip(tmp_path / "serial") == strip(tmp_path / "par")


def test_timing_totals_consistent(tmp_path):
    g = ExperimentGrid(**{**SMALL, "seeds": (1, 2, 3), "models": ("Enh-ESVMS", "Enh-ELRT")})
    s = run_grid(g, str(tmp_path))
    recs = read_records(str(tmp_path))
    assert all(r.wall_clock_seconds > 0 for r in recs)
    assert all(r.cell_seconds >= r.wall_clock_seconds for r in recs)
    assert sum(r.cell_seconds for r in recs) == pytest.approx(s.elapsed_seconds, rel=0.1)


def test_journal_recovery(tmp_path):
    g = ExperimentGrid(**SMALL)
    run_grid(g, str(tmp_path))
    store = tmp_path / "records.csv"
    row = open(store).read().splitlines()[1].replace(",1,Enh-ESVMS,", ",2,Enh-ESVMS,")
    (tmp_path / "records.csv.journal").write_text(row + "\n")
    s = run_grid(ExperimentGrid(**{**SMALL, "seeds": (1, 2)}), str(tmp_path))
    assert s.computed == 0 and len(read_records(str(tmp_path))) == 2


# aggregation


def test_selection_frequency_arithmetic():
    recs = [rec(seed=s, selected=(0, 1) if s <= 27 else (0,)) for s in range(1, 31)]
    table = aggregate_selection_probabilities(recs)
    freq = {row[4]: row[5] for row in table}
    assert freq == {1: 1.0, 2: 0.9, 3: 0.0, 4: 0.0}


def test_selection_table_row_count():
    recs = [rec(model=m, scenario=s, n=n, rho=r, seed=k, selected=(0,))
            for m in ("A", "B") for s in (1, 2) for n in (200, 500) for r in (0.0, 0.5, 0.75)
            for k in (1, 2)]
    assert len(aggregate_selection_probabilities(recs)) == 2 * 2 * 2 * 3 * 4
    with pytest.raises(ValueError):
        aggregate_selection_probabilities([])


def test_bias_summary_degenerate_cases():
    zero = bias_summary([rec(seed=s, bias=0.0) for s in range(1, 31)])[0]
    assert zero.mean_bias == 0 and zero.degenerate and math.isnan(zero.p_value)
    ones = bias_summary([rec(seed=s, bias=1.0) for s in range(1, 31)])[0]
    assert ones.sd_bias == 0 and ones.degenerate
    with pytest.raises(ValueError):
        bias_summary([rec(seed=1)])


def test_bias_test_matches_scipy():
    b = np.random.default_rng(0).standard_normal(30)
    s = bias_summary([rec(seed=k + 1, bias=v) for k, v in enumerate(b)])[0]
    assert s.p_value == pytest.approx(stats.ttest_1samp(b, 0).pvalue)
    assert s.sd_bias == pytest.approx(b.std(ddof=1))


def test_bias_p_values_calibrated_under_null():
    r = np.random.default_rng(2024)
    pvals = []
    for _ in range(200):
        b = r.standard_normal(30)
        pvals.append(bias_summary([rec(seed=k + 1, bias=v) for k, v in enumerate(b)])[0].p_value)
    assert stats.kstest(pvals, "uniform").pvalue > 0.01


def test_plot_headers_and_round_trip(tmp_path):
    r = np.random.default_rng(1)
    recs = [rec(model=m, seed=k, bias=float(r.standard_normal()) * 1e-3, selected=(0, 2))
            for m in ("A", "B") for k in range(1, 4)]
    out = tmp_path / "bias.csv"
    emit_plot_data(recs, "bias", str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "model,scenario,n,rho,seed,bias"
    back = [float(row["bias"]) for row in csv.DictReader(open(out))]
    want = [x.bias for x in sorted(recs, key=lambda x: x.key)]
    assert all(float(f"{a:.12g}") == float(f"{b:.12g}") for a, b in zip(back, want))
    out2 = tmp_path / "sel.csv"
    emit_plot_data(recs, "selectionProbability", str(out2))
    assert out2.read_text().splitlines()[0] == "model,scenario,n,rho,covariate,frequency"
    assert ",".join(PLOT_HEADERS["bias"]) == "model,scenario,n,rho,seed,bias"
    with pytest.raises(ValueError):
        emit_plot_data(recs, "violin", str(tmp_path / "x.csv"))


def test_store_round_trip_preserves_values(tmp_path):
    recs = [rec(seed=k, bias=1 / 3 * k, selected=(k % 4,)) for k in range(1, 5)]
    path = tmp_path / "records.csv"
    grid_mod.write_records(str(path), recs)
    back = read_records(str(path))
    assert [(r.bias, r.selected) for r in back] == [(r.bias, r.selected) for r in recs]


# bootstrap


def frame_from(data):
    import pandas as pd

    f = pd.DataFrame(data.X, columns=[f"X{j + 1}" for j in range(data.p)])
    f["T"], f["Y"] = data.T, data.Y
    return f


def test_encoding_one_hot_and_missing_rows():
    import pandas as pd

    f = pd.DataFrame({"age": [30, 40, None, 50, 60], "region": ["b", "a", "c", "c", "a"],
                      "treat": ["yes", "no", "yes", "no", "yes"], "y": [1.0, 0.0, 1.0, 2.0, 0.5]})
    data, dropped = encode_frame(f, "treat", "y")
    assert dropped == 1
    assert data.feature_names == ("age", "region_b", "region_c")
    np.testing.assert_array_equal(data.T, [1, 0, 0, 1])
    np.testing.assert_array_equal(data.X[:, 1], [1, 0, 0, 0])


def test_encoding_errors():
    import pandas as pd

    f = pd.DataFrame({"x": [1.0, 2, 3], "t": [0, 1, 2], "y": [1.0, 2, 3]})
    with pytest.raises(DataError, match="exactly two values"):
        encode_frame(f, "t", "y")
    with pytest.raises(DataError, match="not found"):
        encode_frame(f, "treatment", "y")


def test_threshold_one_with_disjoint_selections(monkeypatch):
    calls = iter([[0, 1], [2, 3]])

    def alternate(data, cfg):
        return SelectionResult(None, None, None, np.array(next(calls)))

    monkeypatch.setattr(bootstrap_mod, "run_selector", alternate)
    data = generate(ScenarioSpec(1), 200, 0.0, 1)
    job = RealDataJob("<memory>", "T", "Y", iterations=2, control_sample_size=50,
                      threshold=1.0, models=("Enh-ESVMS",))
    rep = run_bootstrap_study(job, data=data)
    assert rep.models["Enh-ESVMS"].consensus == ()
    assert rep.models["Enh-ESVMS"].frequencies[:4] == (0.5, 0.5, 0.5, 0.5)


def test_bootstrap_sampling_keeps_treated_and_draws_without_replacement(monkeypatch):
    seen = []

    def record(data, cfg):
        seen.append(data)
        return SelectionResult(None, None, None, np.array([0]))

    monkeypatch.setattr(bootstrap_mod, "run_selector", record)
    data = generate(ScenarioSpec(1), 300, 0.0, 4)
    job = RealDataJob("<memory>", "T", "Y", iterations=3, control_sample_size=40, seed=1,
                      models=("Enh-ESVMS",))
    run_bootstrap_study(job, data=data)
    n_treated = int(data.T.sum())
    assert all(d.T.sum() == n_treated and (1 - d.T).sum() == 40 for d in seen)
    assert all(len(np.unique(d.X[:, 0])) == d.n for d in seen)
    assert not np.array_equal(seen[0].X, seen[1].X)


def test_bootstrap_reproducible_and_expert_bias(tmp_path):
    data = generate(ScenarioSpec(1), 600, 0.0, 6)
    path = tmp_path / "d.csv"
    write_dataset_csv(data, str(path))
    job = RealDataJob(str(path), "T", "Y", iterations=3, control_sample_size=200, seed=3,
                      models=("Enh-ELRS",), expert_features=("X1", "X2", "3", "4"))
    a, b = run_bootstrap_study(job), run_bootstrap_study(job)
    assert a == b
    assert a.expert_features == (0, 1, 2, 3)
    r = a.models["Enh-ELRS"]
    assert r.bias == pytest.approx(r.mean_att - a.expert_mean_att)


def test_job_validation():
    with pytest.raises(ValueError):
        RealDataJob("x.csv", "T", "Y", threshold=0.0)
    with pytest.raises(ValueError):
        RealDataJob("x.csv", "T", "Y", models=("bogus",))


# CLI


def test_seed_ranges():
    assert seed_list("1-3,7") == [1, 2, 3, 7]


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("# comment\nscenario = 1\n--n = 200\ntrue-effect = 2.5  # inline\n")
    assert read_config(str(cfg)) == {"scenario": "1", "n": "200", "true_effect": "2.5"}


def test_cli_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1
    assert main(["simulate", "--scenario", "9", "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--n", "abc", "--out", str(tmp_path)]) == 1
    assert main(["aggregate", "--store", str(tmp_path), "--kind", "pie",
                 "--out", "x.csv"]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 1


def test_cli_data_errors(tmp_path):
    assert main(["bootstrap", "--csv", str(tmp_path / "missing.csv"), "--treatment", "T",
                 "--outcome", "Y", "--out", str(tmp_path / "r")]) == 2
    assert main(["aggregate", "--store", str(tmp_path), "--kind", "bias",
                 "--out", str(tmp_path / "b.csv")]) == 2
    f = tmp_path / "three.csv"
    f.write_text("x,T,Y\n1,0,1\n2,1,2\n3,2,3\n")
    assert main(["bootstrap", "--csv", str(f), "--treatment", "T", "--outcome", "Y",
                 "--out", str(tmp_path / "r")]) == 2


def test_cli_flags_override_config(tmp_path):
    store = tmp_path / "store"
    cfg = tmp_path / "sim.cfg"
    cfg.write_text(f"scenario = 2\nn = 200\nrho = 0\nseeds = 1\nmodels = Enh-ESVMS\n"
                   f"out = {store}\n")
    assert main(["simulate", "--config", str(cfg), "--scenario", "1"]) == 0
    recs = read_records(str(store))
    assert [(r.scenario, r.n, r.seed) for r in recs] == [(1, 200, 1)]
    out = tmp_path / "bias.csv"
    assert main(["aggregate", "--store", str(store), "--kind", "bias", "--out", str(out)]) == 0
    assert out.read_text().startswith("model,scenario,n,rho,seed,bias\n")


def test_cli_bootstrap_outputs(tmp_path):
    data = generate(ScenarioSpec(1), 400, 0.0, 2)
    path = tmp_path / "d.csv"
    write_dataset_csv(data, str(path))
    prefix = tmp_path / "study"
    code = main(["bootstrap", "--csv", str(path), "--treatment", "T", "--outcome", "Y",
                 "--iters", "2", "--control-sample", "100", "--models", "Enh-ESVMS",
                 "--expert-features", "1,2,3,4", "--seed", "5", "--out", str(prefix)])
    assert code == 0
    report = json.loads((tmp_path / "study.json").read_text())
    assert report["iterations"] == 2 and "Enh-ESVMS" in report["models"]
    head = (tmp_path / "study_frequencies.csv").read_text().splitlines()[0]
    assert head == "model,covariate,name,frequency,consensus"


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "causalfs", "--help"], capture_output=True,
                         text=True, check=True)
    for cmd in ("simulate", "aggregate", "bootstrap", "selftest"):
        assert cmd in out.stdout
