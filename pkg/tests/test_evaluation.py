import math

import numpy as np
import pytest
from scipy.stats import norm
from sklearn.metrics import normalized_mutual_info_score

from c3l import datasets
from c3l.evaluation import (bic, boundary_agreement, compare_leakage_levels, empirical_leakage,
                            evaluate, free_params, log_likelihood, margin, nmi, side_models)
from c3l.exceptions import InputError
from c3l.gauss1d import ConstrainedGaussian1D
from c3l.geometry import Hyperplane, canonicalize
from c3l.model import ClusterModel, ClusterStats, fit_cluster
from c3l.optimizer import ClusteringResult, OptimizerConfig, run
from oracles import pointwise_log_likelihood


def _single_cluster_result(X, alpha=0.5):
    hp = Hyperplane.first_axis(X.shape[1])
    T = canonicalize(hp)
    model = fit_cluster(ClusterStats.from_rows(T.transform(X)), alpha)
    return ClusteringResult("c3l", alpha, np.zeros(X.shape[0], dtype=np.intp), [model], 0.0, hp, T)


def test_free_params():
    assert free_params(1, 1) == 2
    assert free_params(2, 3) == 2 * (2 + 2 + 3) + 1


def test_bic_one_dimensional(rng):
    X = rng.normal(size=(40, 1))
    res = _single_cluster_result(X)
    m = res.models[0].g1
    ll = float(norm.logpdf(X[:, 0], m.mean, m.std).sum())
    assert bic(res, X) == pytest.approx(-2 * ll + 2 * math.log(40), abs=1e-9)


def test_bic_matches_pointwise_oracle():
    X, _ = datasets.two_crossing_blobs(seed=5, n_per_blob=25)
    res = run(X, None, OptimizerConfig(k_init=2, alpha=0.05, restarts=2, seed=0))
    ll = pointwise_log_likelihood(res, X)
    assert log_likelihood(res, X) == pytest.approx(ll, abs=1e-6)
    expected = -2 * ll + free_params(res.n_clusters, 2) * math.log(50)
    assert bic(res, X) == pytest.approx(expected, abs=1e-6)


def test_hard_likelihood_is_minus_n_cost():
    X, _ = datasets.two_crossing_blobs(seed=6, n_per_blob=40)
    res = run(X, None, OptimizerConfig(k_init=2, alpha=0.1, restarts=2, seed=0))
    assert log_likelihood(res, X) == pytest.approx(-X.shape[0] * res.cost, rel=1e-9)


def test_bic_penalty_grows_with_k(rng):
    # a duplicated cluster leaves the hard likelihood lower or equal
    X = rng.normal(size=(60, 2))
    one = _single_cluster_result(X)
    m = one.models[0]
    two = ClusteringResult("c3l", 0.5, one.labels, [m, m], 0.0,
                           one.hyperplane, one.transform)
    assert log_likelihood(two, X) <= log_likelihood(one, X)
    assert bic(two, X) > bic(one, X)


def test_bic_errors(rng):
    X = rng.normal(size=(10, 2))
    res = _single_cluster_result(X)
    empty = ClusteringResult("c3l", 0.5, res.labels, [], 0.0, res.hyperplane, res.transform)
    with pytest.raises(InputError):
        bic(empty, X)
    with pytest.raises(InputError):
        bic(res, X[:5])


def test_nmi_examples():
    a = np.array([0, 0, 1, 1, 2, 2])
    assert nmi(a, a) == 1.0
    assert nmi([0, 0, 1, 1, 2, 2, 2], [5, 5, 3, 3, 4, 4, 4]) == 1.0
    assert nmi(a, np.zeros(6)) == 0.0
    assert nmi(np.zeros(4), np.ones(4)) == 1.0
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(InputError):
        nmi([0, 1], [0, 1, 1])
    with pytest.raises(InputError):
        nmi([], [])


def test_nmi_symmetry_and_permutation(rng):
    for _ in range(50):
        a = rng.integers(0, 4, 80)
        b = rng.integers(0, 3, 80)
        assert nmi(a, b) == pytest.approx(nmi(b, a), abs=1e-12)
        perm = rng.permutation(4)
        assert nmi(perm[a], b) == pytest.approx(nmi(a, b), abs=1e-12)
        assert 0.0 <= nmi(a, b) <= 1.0


def test_nmi_matches_sklearn(rng):
    for _ in range(50):
        a = rng.integers(0, 5, 100)
        b = (a + (rng.random(100) < 0.3) * rng.integers(0, 5, 100)) % 5
        ref = normalized_mutual_info_score(a, b, average_method="geometric")
        assert nmi(a, b) == pytest.approx(ref, abs=1e-10)


def test_leakage_examples():
    hp = Hyperplane.first_axis(1)
    T = canonicalize(hp)
    centred = ClusterModel(ConstrainedGaussian1D(0.0, 1.0, None, False), np.zeros(0),
                           np.zeros((0, 0)))
    assert empirical_leakage(ClusteringResult("cec", None, np.zeros(1, dtype=np.intp), [centred],
                                              0.0, hp, T))[1] == 0.5
    st = ClusterStats.from_rows(np.array([[-0.5], [1.5]]))
    active = fit_cluster(st, 0.05)
    assert active.g1.constrained
    per, worst = empirical_leakage(ClusteringResult("c3l", 0.05, np.zeros(2, dtype=np.intp),
                                                    [active], 0.0, hp, T))
    assert per[0] == pytest.approx(0.05, abs=1e-6)


def test_evaluate_report():
    X, y = datasets.two_separated_blobs(seed=2, n_per_blob=60)
    res = run(X, None, OptimizerConfig(k_init=2, alpha=0.05, restarts=2, seed=0))
    rep = evaluate(res, X, y)
    assert rep.final_k == 2 and rep.nmi == 1.0
    assert rep.bic == pytest.approx(bic(res, X))
    assert all(v <= 0.05 + 1e-6 for v in rep.per_cluster_leakage)
    assert set(rep.to_dict()) >= {"bic", "log_likelihood", "free_params", "nmi", "max_leakage"}


def test_side_models_and_margin():
    X, _ = datasets.two_crossing_blobs(seed=0)
    models = side_models(X, 0.05)
    assert models[1].prior + models[-1].prior == pytest.approx(1.0)
    assert models[1].g1.mean > 0 > models[-1].g1.mean
    pos = X[X[:, 0] >= 0, 0]
    m, s = pos.mean(), pos.std()
    assert margin(X, 1) == pytest.approx(2 * (m + s * s / m))
    assert 0.0 <= boundary_agreement(X, 0.05) <= 1.0


def test_compare_leakage_levels_ordering():
    X, _ = datasets.two_crossing_blobs(seed=1, n_per_blob=100)
    cfg = OptimizerConfig(k_init=4, restarts=2, seed=0)
    out = compare_leakage_levels(X, None, cfg, 0.01, 0.5)
    assert out["high"]["cost"] <= out["low"]["cost"] + 1e-12
    assert out["high"]["bic"] <= out["low"]["bic"] + 1e-6
    assert out["high"]["warm"].n_clusters <= out["low"]["result"].n_clusters
