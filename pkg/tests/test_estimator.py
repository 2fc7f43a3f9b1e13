import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from c3l import C3L, CEC, CECH, datasets
from c3l.evaluation import nmi
from c3l.exceptions import InputError
from c3l.geometry import Hyperplane


@pytest.fixture(scope="module")
def blobs():
    return datasets.two_separated_blobs(seed=2, n_per_blob=80)


def test_params_and_clone():
    est = C3L(n_clusters=3, alpha=0.1, n_init=2)
    params = est.get_params()
    assert params["alpha"] == 0.1 and params["n_clusters"] == 3
    twin = clone(est)
    assert twin.get_params() == params
    assert "alpha" not in CEC().get_params()
    est.set_params(alpha=0.2)
    assert est.alpha == 0.2


def test_fit_predict(blobs):
    X, y = blobs
    est = C3L(n_clusters=2, alpha=0.05, n_init=2).fit(X)
    assert nmi(est.labels_, y) == 1.0
    np.testing.assert_array_equal(est.predict(X), est.labels_)
    assert est.n_clusters_ == 2
    assert max(est.leakage()) <= 0.05 + 1e-6
    assert np.isfinite(est.bic(X))
    assert est.score_samples(X).shape == (X.shape[0],)
    np.testing.assert_array_equal(C3L(n_clusters=2, n_init=2).fit_predict(X), est.labels_)


def test_hyperplane_forms(blobs):
    X, _ = blobs
    a = C3L(n_clusters=2, n_init=1, hyperplane=([2.0, 0.0], 0.0)).fit(X)
    b = C3L(n_clusters=2, n_init=1, hyperplane=Hyperplane([1.0, 0.0], 0.0)).fit(X)
    np.testing.assert_array_equal(a.labels_, b.labels_)


def test_baselines(blobs):
    X, y = blobs
    cec = CEC(n_clusters=2, n_init=2).fit(X)
    half = C3L(n_clusters=2, alpha=0.5, n_init=2).fit(X)
    np.testing.assert_array_equal(cec.labels_, half.labels_)
    h = CECH(n_clusters=2, n_init=2).fit(X)
    side = X[:, 0] >= 0
    for c in range(h.n_clusters_):
        assert np.unique(side[h.labels_ == c]).size == 1
    with pytest.raises(InputError):
        CECH(n_clusters=2).fit(X, init_labels=[y])


def test_errors(blobs):
    X, _ = blobs
    with pytest.raises(NotFittedError):
        C3L().predict(X)
    est = C3L(n_clusters=2, n_init=1).fit(X)
    with pytest.raises(InputError):
        est.predict(X[:, :1])
    with pytest.raises(InputError):
        C3L(random_state=None).fit(X)
