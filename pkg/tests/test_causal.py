import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from causalfs.causal import (
    MatchedSample,
    estimate_att,
    match_and_estimate,
    nearest_neighbor_match,
    pair_standardized_differences,
    selection_bias,
    standardized_mean_differences,
    target_model_att,
)
from causalfs.exceptions import DataError
from causalfs.synthgen import Dataset, ScenarioSpec, generate


def tiny(xs, ts, ys=None):
    X = np.asarray(xs, dtype=float)[:, None]
    ys = np.zeros(len(xs)) if ys is None else ys
    return Dataset(X, np.asarray(ts, dtype=float), np.asarray(ys, dtype=float))


def test_hand_matching():
    # treated at 0 and 10, controls at 1 and 9
    d = tiny([0, 10, 1, 9], [1, 1, 0, 0])
    m = nearest_neighbor_match(d, [0])
    assert m.pairs.tolist() == [[0, 2], [1, 3]]
    sd = np.std([0, 10, 1, 9], ddof=1)
    np.testing.assert_allclose(m.distances, [1 / sd, 1 / sd])


def test_greedy_order_and_ties():
    # both treated are closest to control 2; the first treated row wins it
    d = tiny([5, 5.1, 5.05, 0], [1, 1, 0, 0])
    assert nearest_neighbor_match(d, [0]).pairs.tolist() == [[0, 2], [1, 3]]
    # equidistant controls: lowest index
    d = tiny([0, -1, 1], [1, 0, 0])
    assert nearest_neighbor_match(d, [0]).pairs.tolist() == [[0, 1]]


def test_fewer_controls_and_empty_selection():
    d = tiny([0, 1, 2, 3], [1, 1, 1, 0], ys=[1, 2, 3, 0])
    m = nearest_neighbor_match(d, [0])
    assert len(m) == 1 and "fewer controls than treated" in m.flags
    m = nearest_neighbor_match(d, [])
    assert "no covariates selected" in m.flags
    est = estimate_att(d, m, [])
    assert est.model_used == "matched-mean-difference fallback"
    assert est.att == pytest.approx(1.0)


def test_caliper_drops_far_units():
    d = tiny([0, 100, 0.1, 50], [1, 1, 0, 0])
    m = nearest_neighbor_match(d, [0], caliper=0.1)
    assert m.pairs.tolist() == [[0, 2]]
    assert "caliper dropped treated units" in m.flags


def test_requires_both_arms():
    with pytest.raises(DataError):
        nearest_neighbor_match(tiny([0, 1], [1, 1]), [0])


@given(st.integers(0, 10_000), st.integers(30, 120))
def test_matching_invariants(seed, n):
    d = generate(ScenarioSpec(1), n, 0.25, seed)
    sel = [0, 1, 2, 3]
    m = nearest_neighbor_match(d, sel)
    assert len(set(m.controls.tolist())) == len(m)
    assert np.all(d.T[m.treated] == 1) and np.all(d.T[m.controls] == 0)
    Z = d.X[:, sel]
    Z = (Z - Z.mean(axis=0)) / Z.std(axis=0, ddof=1)
    free = set(np.flatnonzero(d.T == 0).tolist())
    for (t, c), dist in zip(m.pairs, m.distances):
        rest = np.array(sorted(free))
        assert dist <= np.sqrt(((Z[rest] - Z[t]) ** 2).sum(axis=1)).min() + 1e-12
        free.remove(int(c))


def test_mahalanobis_metric_runs():
    d = generate(ScenarioSpec(1), 200, 0.5, 1)
    m = nearest_neighbor_match(d, [0, 1, 2], metric="mahalanobis")
    assert len(m) == min(d.T.sum(), (1 - d.T).sum())
    with pytest.raises(ValueError):
        nearest_neighbor_match(d, [0, 1], metric="cosine")


@given(st.integers(0, 10_000), st.floats(-1e3, 1e3))
def test_att_shift_invariance(seed, c):
    d = generate(ScenarioSpec(1), 120, 0.0, seed)
    m = nearest_neighbor_match(d, d.target_set)
    a = estimate_att(d, m, d.target_set).att
    shifted = Dataset(d.X, d.T, d.Y + c)
    assert estimate_att(shifted, m, d.target_set).att == pytest.approx(a, abs=1e-10)


def test_att_regression_against_lstsq():
    d = generate(ScenarioSpec(1, true_effect=1.0), 300, 0.0, 5)
    m = nearest_neighbor_match(d, [0, 1])
    rows = m.rows
    A = np.column_stack([np.ones(rows.size), d.T[rows], d.X[rows][:, [0, 1]]])
    ref = np.linalg.lstsq(A, d.Y[rows], rcond=None)[0][1]
    assert estimate_att(d, m, [0, 1]).att == pytest.approx(ref, abs=1e-10)


def test_collinear_covariate_dropped():
    d = generate(ScenarioSpec(1), 200, 0.0, 2)
    X = np.column_stack([d.X, d.X[:, 0] * 2])
    d2 = Dataset(X, d.T, d.Y)
    est = match_and_estimate(d2, [0, 20])
    assert est.dropped == (20,)
    assert "collinear covariates dropped" in est.flags


def test_known_effect_and_target_model():
    d = generate(ScenarioSpec(1, true_effect=2.0), 1000, 0.0, 3)
    assert target_model_att(d).att == pytest.approx(2.0, abs=0.2)


def test_selection_bias_arithmetic():
    assert selection_bias(0.0436, 0.0587) == pytest.approx(-0.0151, abs=1e-15)
    assert round(selection_bias(0.0258, 0.0587), 4) == -0.0329


def test_matched_sample_csv_round_trip(tmp_path):
    d = generate(ScenarioSpec(1), 100, 0.0, 1)
    m = nearest_neighbor_match(d, [0, 1])
    path = tmp_path / "pairs.csv"
    m.to_csv(path)
    assert path.read_text().splitlines()[0] == "treated_id,control_id,distance"
    back = MatchedSample.from_csv(path)
    np.testing.assert_array_equal(back.pairs, m.pairs)
    np.testing.assert_array_equal(back.distances, m.distances)


def test_pair_differences_improve_after_matching():
    improved = 0
    for seed in range(1, 31):
        d = generate(ScenarioSpec(1), 1000, 0.0, seed)
        m = nearest_neighbor_match(d, d.target_set)
        after, before = pair_standardized_differences(d.X, d.T, m, d.target_set)
        improved += np.all(after <= before + 1e-9)
    assert improved >= 27


def test_standardized_mean_differences():
    X = np.array([[0.0], [2.0], [1.0], [3.0]])
    T = np.array([1, 1, 0, 0.0])
    # |1 - 2| / sqrt((2 + 2) / 2)
    assert standardized_mean_differences(X, T)[0] == pytest.approx(1 / np.sqrt(2))
