"""Invariant suite shipped with the package (``causalfs selftest``).

Each check returns ``(passed, detail)``. The heavy simulation checks share
one cache of selector runs so the whole suite stays within a few minutes on
a single core.
"""

import functools
import tempfile
import time
import warnings

import numpy as np

from ..causal import (
    estimate_att,
    nearest_neighbor_match,
    pair_standardized_differences,
)
from ..frameworks import SelectorConfig, run_selector
from ..numkit import (
    CvPlan,
    enet_kkt_residual,
    elastic_net_path,
    fit_linear_svm,
    fit_ols,
    fit_weighted_elastic_net,
    logistic_gradient,
    logistic_loss,
)
from ..smoothing import inverse_power_weights, sigmoid_weights, tanh_weights
from ..synthgen import ScenarioSpec, generate

SEEDS = tuple(range(1, 31))
CHECKS = []


def check(module):
    def wrap(fn):
        CHECKS.append((module, fn.__name__, fn))
        return fn
    return wrap


def _regression_instance(rng, n=80, p=8):
    X = rng.standard_normal((n, p))
    coef = rng.standard_normal(p) * (rng.random(p) < 0.5)
    y = X @ coef + rng.standard_normal(n)
    return X, y


@functools.lru_cache(maxsize=None)
def _scenario1_run(model, n, seed, rho=0.0):
    data = generate(ScenarioSpec(1), n, rho, seed)
    return data, run_selector(data, SelectorConfig.from_name(model))


# numkit

@check("numkit")
def enet_kkt():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(10):
        X, y = _regression_instance(rng)
        w = rng.uniform(0.2, 2.0, X.shape[1])
        lam1, lam2 = rng.uniform(1, 40), rng.uniform(0, 5)
        fit = fit_weighted_elastic_net(X, y, lam1, lam2, w)
        worst = max(worst, float(np.max(enet_kkt_residual(X, y, fit.coefficients, lam1, lam2,
                                                          w))))
    return worst <= 1e-6, f"max KKT violation {worst:.2e}"


@check("numkit")
def path_support_monotone():
    rng = np.random.default_rng(102)
    bad = 0
    for _ in range(10):
        X, y = _regression_instance(rng)
        w = rng.uniform(0.5, 1.5, X.shape[1])
        grid = np.geomspace(400, 0.4, 30)
        nnz = (elastic_net_path(X, y, grid, 0.1, w) != 0).sum(axis=1)
        bad += int(np.any(np.diff(nnz) < 0))
    return bad == 0, f"{bad}/10 paths lost a coefficient as lambda1 decreased"


@check("numkit")
def ols_reduction():
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(10):
        X, y = _regression_instance(rng)
        w = rng.uniform(0.1, 3.0, X.shape[1])
        a = fit_weighted_elastic_net(X, y, 0.0, 0.0, w, tol=1e-14).coefficients
        b = fit_ols(X, y).coefficients
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst <= 1e-8, f"max |enet - ols| {worst:.2e}"


@check("numkit")
def logistic_gradient_fd():
    rng = np.random.default_rng(104)
    X = rng.standard_normal((60, 5))
    t = (rng.random(60) < 0.5).astype(float)
    worst = 0.0
    h = 1e-5
    for _ in range(10):
        params = rng.standard_normal(6)
        g = logistic_gradient(params, X, t, ridge=0.1)
        fd = np.array([(logistic_loss(params + h * e, X, t, 0.1)
                        - logistic_loss(params - h * e, X, t, 0.1)) / (2 * h)
                       for e in np.eye(6)])
        worst = max(worst, float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-8))))
    return worst <= 1e-4, f"max relative error {worst:.2e}"


@check("numkit")
def svm_objective_decrease():
    rng = np.random.default_rng(105)
    bad = 0
    for _ in range(5):
        X = rng.standard_normal((200, 6))
        t = (X[:, 0] + 0.5 * rng.standard_normal(200) > 0).astype(float)
        trace = fit_linear_svm(X, t).objective_trace
        bad += int(np.any(np.diff(trace) > 0))
    return bad == 0, f"{bad}/5 traces increased"


@check("numkit")
def seeded_reproducibility():
    a = generate(ScenarioSpec(2), 300, 0.25, 7)
    b = generate(ScenarioSpec(2), 300, 0.25, 7)
    same = all(np.array_equal(getattr(a, k), getattr(b, k)) for k in ("X", "T", "Y"))
    folds = np.array_equal(CvPlan(300, 10, 3).fold_assignment, CvPlan(300, 10, 3).fold_assignment)
    return same and folds, "dataset and fold assignment repeat under a fixed seed"


# smoothing

_GRID = np.linspace(0.0, 3.0, 301)


@check("smoothing")
def weight_monotonicity():
    s = sigmoid_weights(_GRID, 1.0)
    t = tanh_weights(_GRID, 0.5)
    inv = inverse_power_weights(_GRID[1:], 1.0)
    ok = np.all(np.diff(s) > 0) and np.all(np.diff(t) > 0) and np.all(np.diff(inv) < 0)
    return bool(ok), "sigmoid, tanh increasing; inverse power decreasing"


@check("smoothing")
def weight_range():
    rng = np.random.default_rng(106)
    ok = True
    for g in (0.25, 0.5, 1.0, 2.0):
        beta = rng.standard_normal(50) * 3
        s, t = sigmoid_weights(beta, g), tanh_weights(beta, g)
        ok &= bool(np.all((s >= 0.5 ** g) & (s < 1)) and np.all((t >= 0) & (t < 1)))
        ok &= bool((s ** 2).sum() < beta.size and (t ** 2).sum() < beta.size)
    return ok, "weights inside [0.5^g, 1) / [0, 1) and sum of squares < p"


@check("smoothing")
def convexity_ordering_as_stated():
    # literal statement: tanh increments dominate sigmoid increments for all pairs in [0, 3]
    s, t = sigmoid_weights(_GRID, 1.0), tanh_weights(_GRID, 1.0)
    ds = s[None, :] - s[:, None]
    dt = t[None, :] - t[:, None]
    upper = np.triu(np.ones_like(ds, dtype=bool), 1)
    viol = upper & (dt < ds - 1e-12)
    if not viol.any():
        return True, "holds on [0, 3]"
    i, j = map(int, np.argwhere(viol)[-1])
    return False, (f"fails for {viol.sum()} pairs, e.g. a={_GRID[i]:.2f}, b={_GRID[j]:.2f}: "
                   f"tanh rises {dt[i, j]:.4f}, sigmoid {ds[i, j]:.4f} "
                   f"(tanh' < sigmoid' beyond x = {np.arccosh(1 + np.sqrt(3)):.4f})")


@check("smoothing")
def convexity_ordering_where_valid():
    # tanh' >= sigmoid' exactly on [0, acosh(1 + sqrt 3)]; from 0 the ordering holds on all of [0, 3]
    edge = np.arccosh(1 + np.sqrt(3))
    x = _GRID[_GRID <= edge]
    s, t = sigmoid_weights(x, 1.0), tanh_weights(x, 1.0)
    pairwise = np.all(np.triu((t[None, :] - t[:, None]) - (s[None, :] - s[:, None])) >= -1e-12)
    s3, t3 = sigmoid_weights(_GRID, 1.0), tanh_weights(_GRID, 1.0)
    anchored = np.all((t3 - t3[0]) >= (s3 - s3[0]) - 1e-12)
    return bool(pairwise and anchored), f"pairwise on [0, {edge:.4f}], anchored at 0 on [0, 3]"


# frameworks

@check("frameworks")
def penalty_direction():
    data = generate(ScenarioSpec(1), 500, 0.0, 1)
    ok = True
    for model in ("Enh-ESVMS", "Enh-ELRT", "ESVMS"):
        cfg = SelectorConfig.from_name(model)
        beta = run_selector(data, cfg).stage1_coefficients
        order = np.argsort(np.abs(beta))
        ok &= bool(np.all(np.diff(cfg.smoothing.weights(beta)[order]) >= 0))
    theta = run_selector(data, SelectorConfig.from_name("OAL")).stage1_coefficients
    order = np.argsort(np.abs(theta))
    ok &= bool(np.all(np.diff(inverse_power_weights(theta, 2.05)[order]) <= 0))
    return ok, "stage-2 weights rise with |beta|; OAL weights fall with |theta|"


def _exact_rate(model, n):
    return np.mean([set(_scenario1_run(model, n, s)[1].selected) == {0, 1, 2, 3}
                    for s in SEEDS])


@check("frameworks")
def oracle_trend():
    parts, ok = [], True
    for model in ("Enh-ELRT", "Enh-ELRS", "Enh-ESVMT", "Enh-ESVMS"):
        rates = [_exact_rate(model, n) for n in (200, 500, 1000)]
        ok &= all(b >= a - 1 / 30 - 1e-12 for a, b in zip(rates, rates[1:]))
        parts.append(f"{model} " + "/".join(f"{r:.2f}" for r in rates))
    return ok, "; ".join(parts)


def _freq(model, cols):
    return np.mean([np.isin(cols, _scenario1_run(model, 1000, s)[1].selected).mean()
                    for s in SEEDS])


@check("frameworks")
def selection_asymmetry():
    t_lr, t_svm = _freq("Enh-ELRT", [4, 5]), _freq("Enh-ESVMS", [4, 5])
    c_lr, c_svm = _freq("Enh-ELRT", [0, 1]), _freq("Enh-ESVMS", [0, 1])
    ok = t_lr <= t_svm + 0.1 and c_svm >= c_lr - 0.1
    return ok, (f"X5,X6: ELRT {t_lr:.2f} vs ESVMS {t_svm:.2f}; "
                f"X1,X2: ESVMS {c_svm:.2f} vs ELRT {c_lr:.2f}")


@check("frameworks")
def final_stage_exclusion():
    bad = 0
    for model in ("Enh-ELRT", "Enh-ESVMS"):
        for s in SEEDS:
            res = _scenario1_run(model, 1000, s)[1]
            bad += int(np.isin(np.flatnonzero(res.stage2_coefficients == 0), res.selected).any())
    return bad == 0, f"{bad} runs selected a covariate dropped at stage 2"


# synthgen

@check("synthgen")
def role_labels():
    ok = True
    for sid in (1, 2, 3, 4):
        spec = ScenarioSpec(sid)
        th, be, roles = spec.theta != 0, spec.beta != 0, spec.truth
        ok &= bool(np.all(th[roles["confounders"]] & be[roles["confounders"]]))
        ok &= bool(np.all(th[roles["outcome"]] & ~be[roles["outcome"]]))
        ok &= bool(np.all(~th[roles["treatment"]] & be[roles["treatment"]]))
        ok &= bool(np.all(~th[roles["noise"]] & ~be[roles["noise"]]))
        ok &= sum(len(v) for v in roles.values()) == spec.p
    return ok, "roles agree with coefficient supports in all four scenarios"


@check("synthgen")
def seed_determinism():
    a = generate(ScenarioSpec(3), 400, 0.5, 11)
    b = generate(ScenarioSpec(3), 400, 0.5, 11)
    ok = all(getattr(a, k).tobytes() == getattr(b, k).tobytes() for k in ("X", "T", "Y"))
    return ok, "byte-identical datasets"


@check("synthgen")
def treated_prevalence():
    fr = [generate(ScenarioSpec(1), n, 0.0, s).T.mean() for n in (500, 1000) for s in SEEDS]
    return bool(min(fr) >= 0.35 and max(fr) <= 0.65), f"range {min(fr):.3f}..{max(fr):.3f}"


# causal

def _matched(seed, n=400):
    data = generate(ScenarioSpec(1), n, 0.0, seed)
    sel = data.target_set
    return data, sel, nearest_neighbor_match(data, sel)


@check("causal")
def no_control_reuse():
    bad = sum(int(len(set(m.controls)) != len(m)) for _, _, m in map(_matched, range(1, 21)))
    return bad == 0, f"{bad}/20 matchings reused a control"


@check("causal")
def greedy_step_optimality():
    bad = 0
    for seed in range(1, 11):
        data, sel, m = _matched(seed)
        Z = data.X[:, sel]
        Z = (Z - Z.mean(axis=0)) / Z.std(axis=0, ddof=1)
        free = set(np.flatnonzero(data.T == 0).tolist())
        for (t, c), d in zip(m.pairs, m.distances):
            others = np.array(sorted(free))
            best = np.sqrt(((Z[others] - Z[t]) ** 2).sum(axis=1)).min()
            bad += int(d > best + 1e-12)
            free.discard(int(c))
    return bad == 0, f"{bad} pairs beaten by a still-free control"


@check("causal")
def balance_improvement():
    # within-pair standardized difference vs. the same over all treated-control pairs
    improved = 0
    for seed in range(1, 101):
        data, sel, m = _matched(seed, n=1000)
        after, before = pair_standardized_differences(data.X, data.T, m, sel)
        improved += int(np.all(after <= before + 1e-9))
    return improved >= 90, f"{improved}/100 datasets improved on every selected covariate"


@check("causal")
def att_shift_invariance():
    worst = 0.0
    for seed in range(1, 6):
        data, sel, m = _matched(seed)
        a = estimate_att(data, m, sel).att
        shifted = type(data)(data.X, data.T, data.Y + 123.456, data.truth, data.true_effect)
        worst = max(worst, abs(estimate_att(shifted, m, sel).att - a))
    return worst <= 1e-10, f"max att change {worst:.1e}"


# bench

@check("bench")
def grid_completeness_and_timing():
    from .grid import ExperimentGrid, read_records, run_grid

    grid = ExperimentGrid(scenarios=(1, 2), ns=(200,), rhos=(0.0,), seeds=(1, 2),
                          models=("Enh-ESVMS", "Enh-ELRT"))
    with tempfile.TemporaryDirectory() as tmp:
        first = run_grid(grid, tmp)
        recs = read_records(tmp, include_errors=True)
        good = [r for r in recs if not r.error]
        complete = len(good) == len(grid.keys()) - first.errors
        again = run_grid(grid, tmp)
    cell_total = sum(r.cell_seconds for r in recs)
    timing = all(r.wall_clock_seconds > 0 for r in good) and \
        abs(first.elapsed_seconds - cell_total) <= 0.1 * first.elapsed_seconds
    ok = complete and again.computed == 0 and timing
    return ok, (f"{len(good)} records, rerun computed {again.computed}, elapsed "
                f"{first.elapsed_seconds:.2f}s vs cell sum {cell_total:.2f}s")


@check("bench")
def bootstrap_reproducibility():
    from .bootstrap import RealDataJob, run_bootstrap_study

    data = generate(ScenarioSpec(1), 600, 0.0, 5)
    job = RealDataJob("<memory>", "T", "Y", iterations=3, control_sample_size=150, seed=9,
                      models=("Enh-ESVMS",), expert_features=("1", "2", "3", "4"))
    a = run_bootstrap_study(job, data=data)
    b = run_bootstrap_study(job, data=data)
    return a == b, "two runs of the same job give equal reports"


def run_selftest(stream=None, only=None):
    """Run every check, print one line each, return the list of (module, name, ok, detail, s)."""
    results = []
    for module, name, fn in CHECKS:
        if only and module not in only:
            continue
        start = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                ok, detail = fn()
            except Exception as exc:  # noqa: BLE001 - a crash is a failed check
                ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        secs = time.perf_counter() - start
        results.append((module, name, bool(ok), detail, secs))
        if stream is not None:
            print(f"{'PASS' if ok else 'FAIL'} {module}.{name} ({secs:.1f}s): {detail}",
                  file=stream, flush=True)
    _scenario1_run.cache_clear()
    return results


if __name__ == "__main__":
    import sys

    res = run_selftest(sys.stdout)
    sys.exit(0 if all(r[2] for r in res) else 3)
