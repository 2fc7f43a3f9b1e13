import json
import warnings

import numpy as np
import pytest

from c3l import datasets
from c3l.evaluation import empirical_leakage, nmi
from c3l.exceptions import InputError, OptimizationError
from c3l.geometry import Hyperplane
from c3l.model import Partition
from c3l.optimizer import (OptimizerConfig, initialize, refine, reassign_gain, restart_rng, run,
                           run_cec, run_cec_h)
from conftest import assert_descent
from oracles import rebuild_total_cost


@pytest.fixture(scope="module")
def separated():
    # seed 2 draws no point on the far side of the boundary
    return datasets.two_separated_blobs(seed=2)


@pytest.fixture(scope="module")
def separated_run(separated):
    X, _ = separated
    return run(X, None, OptimizerConfig(k_init=2, alpha=0.05, restarts=3, seed=0))


@pytest.fixture(scope="module")
def three_blob_run():
    X, y = datasets.three_blobs(seed=0)
    return X, y, run(X, None, OptimizerConfig(k_init=10, alpha=0.05, restarts=2, seed=0))


def test_config_clamps_alpha():
    with pytest.warns(UserWarning):
        cfg = OptimizerConfig(alpha=0.8)
    assert cfg.alpha == 0.5
    for bad in (0.0, -0.1, float("nan")):
        with pytest.raises(InputError):
            OptimizerConfig(alpha=bad)


def test_initialize_deterministic(rng):
    X = rng.normal(size=(100, 2))
    cfg = OptimizerConfig(k_init=2, seed=7)
    a = initialize(X, cfg, restart_rng(7, 0))
    b = initialize(X, cfg, restart_rng(7, 0))
    np.testing.assert_array_equal(a.labels, b.labels)
    assert a.counts.min() >= cfg.min_size(2, 100)


def test_initialize_too_small(rng):
    with pytest.raises(InputError):
        initialize(rng.normal(size=(5, 3)), OptimizerConfig(k_init=2))


def test_initialize_single_cluster(rng):
    part = initialize(rng.normal(size=(30, 2)), OptimizerConfig(k_init=1))
    assert np.all(part.labels == 0)


def test_initialize_fallback_round_robin(rng):
    # exactly k * min_size rows: uniform draws essentially never qualify
    X = rng.normal(size=(40, 2))
    cfg = OptimizerConfig(k_init=10, min_cluster_size=4, min_cluster_fraction=0.0)
    part = initialize(X, cfg)
    assert np.all(part.counts == 4)


def test_restart_streams_are_independent():
    a = restart_rng(3, 1).random(5)
    b = restart_rng(3, 1).random(5)
    c = restart_rng(3, 2).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def _moved_cost(X, labels, i, to, alpha):
    lab = labels.copy()
    lab[i] = to
    return rebuild_total_cost(X, lab, alpha)


def test_gain_own_cluster_is_zero(rng):
    X = rng.normal(size=(20, 2))
    part = Partition(X, np.arange(20) % 2)
    assert reassign_gain(part, 3, part.labels[3], 0.05) == 0.0


def test_gain_deep_point_is_negative(rng):
    A = rng.normal([-5, 0], 0.5, size=(10, 2))
    B = rng.normal([5, 0], 0.5, size=(10, 2))
    X = np.vstack([A, B])
    labels = np.repeat([0, 1], 10)
    part = Partition(X, labels)
    i = int(np.argmin(np.linalg.norm(A - A.mean(0), axis=1)))
    gain = reassign_gain(part, i, 1, 0.05, min_size=4)
    oracle = rebuild_total_cost(X, labels, 0.05) - _moved_cost(X, labels, i, 1, 0.05)
    assert gain < 0
    assert gain == pytest.approx(oracle, abs=1e-8)


def test_gain_matches_rebuild(rng):
    for _ in range(40):
        alpha = float(rng.choice([0.01, 0.1, 0.5]))
        X = rng.normal(size=(45, 3)) * [2, 1, 1] + [0.5, 0, 0]
        labels = rng.permutation(np.arange(45) % 3)
        part = Partition(X, labels, 3)
        i, to = int(rng.integers(45)), int(rng.integers(3))
        if to == labels[i]:
            continue
        oracle = rebuild_total_cost(X, labels, alpha) - _moved_cost(X, labels, i, to, alpha)
        assert reassign_gain(part, i, to, alpha, min_size=5) == pytest.approx(oracle, abs=1e-8)


def test_gain_blocked_at_min_size(rng):
    X = rng.normal(size=(12, 2))
    part = Partition(X, np.repeat([0, 1], 6))
    assert reassign_gain(part, 0, 1, 0.05, min_size=6) == -np.inf


def test_separated_blobs_recovered(separated, separated_run):
    _, y = separated
    res = separated_run
    assert res.n_clusters == 2
    assert nmi(res.labels, y) == 1.0
    assert empirical_leakage(res)[1] <= 0.05 + 1e-6
    assert_descent(res.trace)


def test_half_alpha_matches_cec(rng):
    for seed in range(3):
        X = rng.normal(size=(120, 2)) + np.repeat([[-1.0, 0], [1.5, 1]], 60, axis=0)
        cfg = OptimizerConfig(k_init=3, alpha=0.5, restarts=2, seed=seed)
        a, b = run(X, None, cfg), run_cec(X, None, cfg)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert a.trace.move_costs == b.trace.move_costs
        assert a.cost == b.cost


def test_cluster_reduction(three_blob_run):
    X, y, res = three_blob_run
    # regression value of this seeded run
    assert res.n_clusters == 3
    assert res.trace.final_k == 3
    assert len(res.trace.removals) == 7
    for r in res.trace.removals:
        assert r["cost_after"] < r["cost_before"]
    assert nmi(res.labels, y) == 1.0
    assert_descent(res.trace)
    assert empirical_leakage(res)[1] <= 0.05 + 1e-6


def test_descent_and_termination(rng):
    X, _ = datasets.two_crossing_blobs(seed=2, n_per_blob=100)
    for alpha in (0.01, 0.2, None):
        res = run(X, None, OptimizerConfig(k_init=5, alpha=alpha, restarts=2, seed=1, max_sweeps=3))
        assert res.trace.n_sweeps <= 3
        assert_descent(res.trace)


def test_converged_run_cost_matches_rebuild(separated, separated_run):
    X, _ = separated
    res = separated_run
    assert res.cost == pytest.approx(rebuild_total_cost(res.canonical(X), res.labels, 0.05),
                                     abs=1e-8)
    assert res.cost == pytest.approx(res.trace.sweep_costs[-1], abs=1e-8)


def test_deterministic_and_parallel_agnostic(separated):
    X, _ = datasets.two_crossing_blobs(seed=4, n_per_blob=80)
    cfg = OptimizerConfig(k_init=3, alpha=0.05, restarts=3, seed=11)
    docs = [json.dumps(run(X, None, c).to_dict(), sort_keys=True)
            for c in (cfg, cfg, cfg.replace(n_jobs=2))]
    assert docs[0] == docs[1] == docs[2]


def test_oblique_hyperplane(rng):
    X, y = datasets.two_separated_blobs(seed=1, n_per_blob=100)
    theta = 0.7
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    Xr = X @ R.T + [2.0, -1.0]
    hp = Hyperplane(R @ [1.0, 0.0], float((R @ [1.0, 0.0]) @ [2.0, -1.0]))
    res = run(Xr, hp, OptimizerConfig(k_init=2, alpha=0.05, restarts=2, seed=0))
    assert nmi(res.labels, y) == 1.0
    assert empirical_leakage(res)[1] <= 0.05 + 1e-6


def test_refine_from_partition(separated, separated_run):
    X, _ = separated
    cfg = OptimizerConfig(k_init=2, alpha=0.05, restarts=3, seed=0)
    res = refine(X, None, cfg, separated_run.labels)
    np.testing.assert_array_equal(res.labels, separated_run.labels)
    assert res.cost == pytest.approx(separated_run.cost, abs=1e-12)
    with pytest.raises(InputError):
        refine(X, None, cfg, separated_run.labels[:-1])


def test_input_errors(rng):
    X = rng.normal(size=(50, 2))
    X[3, 1] = np.inf
    with pytest.raises(InputError):
        run(X, None, OptimizerConfig(k_init=2))
    with pytest.raises(InputError):
        run(rng.normal(size=(50, 2)), Hyperplane([1.0, 0, 0], 0.0), OptimizerConfig(k_init=2))


def test_all_restarts_degenerate(rng):
    # constant first coordinate: no cluster can fit a 1-D density
    X = np.column_stack([np.ones(60), rng.normal(size=60)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(OptimizationError):
            run(X, None, OptimizerConfig(k_init=2, restarts=2))


def test_cec_h_priors_and_sides(separated):
    X, y = separated
    res = run_cec_h(X, None, OptimizerConfig(k_init=2, restarts=2, seed=0))
    assert sum(m.prior for m in res.models) == pytest.approx(1.0, abs=1e-12)
    # boundary-respecting data: every cluster stays on its own side
    side = np.where(X[:, 0] >= 0, 1, 0)
    for c in range(res.n_clusters):
        assert np.unique(side[res.labels == c]).size == 1
    assert nmi(res.labels, y) == 1.0
    assert [s["k"] for s in res.details["sides"]] == [1, 1]


def test_cec_h_side_matches_cec(separated):
    X, _ = separated
    cfg = OptimizerConfig(k_init=2, restarts=2, seed=0)
    res = run_cec_h(X, None, cfg)
    neg = X[X[:, 0] < 0]
    side = run_cec(neg, None, cfg.replace(k_init=1))
    m = res.models[0]
    assert m.g1.mean == pytest.approx(side.models[0].g1.mean, abs=1e-12)
    assert m.g1.std == pytest.approx(side.models[0].g1.std, abs=1e-12)
    assert m.prior == pytest.approx(neg.shape[0] / X.shape[0], abs=1e-12)


def test_cec_h_leaks_on_crossing_data():
    X, _ = datasets.two_crossing_blobs(seed=0)
    cfg = OptimizerConfig(k_init=4, alpha=0.05, restarts=3, seed=0)
    h = run_cec_h(X, None, cfg)
    c = run(X, None, cfg)
    assert empirical_leakage(h)[1] > empirical_leakage(c)[1]
    assert empirical_leakage(c)[1] <= 0.05 + 1e-6


def test_cec_h_empty_side(rng):
    X = np.abs(rng.normal(size=(60, 2))) + [0.1, 0]
    with pytest.raises(InputError):
        run_cec_h(X, None, OptimizerConfig(k_init=2))
