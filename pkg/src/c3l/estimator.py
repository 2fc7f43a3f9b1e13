"""scikit-learn compatible estimators wrapping the optimiser."""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_data
from .evaluation import bic, empirical_leakage
from .exceptions import InputError
from .geometry import Hyperplane
from .optimizer import OptimizerConfig, assign_by_density, run, run_cec_h


def _as_hyperplane(hyperplane, dim):
    if hyperplane is None:
        return Hyperplane.first_axis(dim)
    if isinstance(hyperplane, Hyperplane):
        return hyperplane
    normal, offset = hyperplane
    return Hyperplane(normal, offset)


class C3L(ClusterMixin, BaseEstimator):
    """Gaussian clustering whose clusters each stay on one side of a hyperplane.

    Every cluster density may put at most ``alpha`` of its mass on the far
    side of the boundary.  ``alpha=0.5`` recovers unconstrained
    cross-entropy clustering.

    Parameters
    ----------
    n_clusters : int, default=10
        Initial number of clusters; redundant clusters are removed while fitting.
    alpha : float, default=0.05
        Leakage level in ``(0, 0.5]``.
    hyperplane : Hyperplane or (normal, offset), optional
        Decision boundary ``normal . x = offset``.  Defaults to ``x_1 = 0``.
    n_init : int, default=10
        Number of seeded restarts; the lowest-cost one is kept.
    max_sweeps : int, default=200
    min_cluster_size : int, optional
        Defaults to ``n_features + 2``.
    min_cluster_fraction : float, default=0.05
    random_state : int, default=0
    n_jobs : int, optional
        Restarts run in parallel through joblib when set.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
    models_ : list of ClusterModel
        Cluster models in the canonical frame.
    n_clusters_ : int
    cost_ : float
    result_ : ClusteringResult
    """

    def __init__(self, n_clusters=10, alpha=0.05, hyperplane=None, n_init=10, max_sweeps=200,
                 min_cluster_size=None, min_cluster_fraction=0.05, random_state=0,
                 n_jobs=None):
        self.n_clusters = n_clusters
        self.alpha = alpha
        self.hyperplane = hyperplane
        self.n_init = n_init
        self.max_sweeps = max_sweeps
        self.min_cluster_size = min_cluster_size
        self.min_cluster_fraction = min_cluster_fraction
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self, alpha):
        seed = self.random_state
        if seed is None or isinstance(seed, np.random.RandomState):
            raise InputError("random_state must be an integer seed")
        return OptimizerConfig(k_init=self.n_clusters, alpha=alpha, restarts=self.n_init,
                               seed=int(seed), max_sweeps=self.max_sweeps,
                               min_cluster_size=self.min_cluster_size, n_jobs=self.n_jobs,
                               min_cluster_fraction=self.min_cluster_fraction)

    def _fit_result(self, X, hp, init_labels):
        return run(X, hp, self._config(self.alpha), init_labels)

    def fit(self, X, y=None, init_labels=()):
        """Cluster ``X``; ``init_labels`` are extra starting partitions."""
        X = check_data(X)
        hp = _as_hyperplane(self.hyperplane, X.shape[1])
        result = self._fit_result(X, hp, init_labels)
        self.result_ = result
        self.labels_ = result.labels
        self.models_ = result.models
        self.n_clusters_ = result.n_clusters
        self.cost_ = result.cost
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Index of the most probable cluster ``argmax p_i g_i(x)``."""
        check_is_fitted(self, "result_")
        X = check_data(X)
        if X.shape[1] != self.n_features_in_:
            raise InputError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return assign_by_density(self.result_.canonical(X), self.models_)

    def score_samples(self, X):
        """``max_i ln(p_i g_i(x))``, the log of the fitted subdensity."""
        check_is_fitted(self, "result_")
        Xc = self.result_.canonical(check_data(X))
        return np.max(np.column_stack([m.log_density_rows(Xc) for m in self.models_]), axis=1)

    def bic(self, X):
        """BIC of the fitted partition on the training data ``X``."""
        check_is_fitted(self, "result_")
        return bic(self.result_, X)

    def leakage(self):
        check_is_fitted(self, "result_")
        return empirical_leakage(self.result_)[0]


class CEC(C3L):
    """Unconstrained cross-entropy clustering in the same product family."""

    def __init__(self, n_clusters=10, hyperplane=None, n_init=10, max_sweeps=200,
                 min_cluster_size=None, min_cluster_fraction=0.05, random_state=0,
                 n_jobs=None):
        self.n_clusters = n_clusters
        self.hyperplane = hyperplane
        self.n_init = n_init
        self.max_sweeps = max_sweeps
        self.min_cluster_size = min_cluster_size
        self.min_cluster_fraction = min_cluster_fraction
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _fit_result(self, X, hp, init_labels):
        return run(X, hp, self._config(None), init_labels)


class CECH(CEC):
    """Cross-entropy clustering of each side separately, merged by posterior."""

    def _fit_result(self, X, hp, init_labels):
        if len(init_labels):
            raise InputError("CECH does not accept starting partitions")
        return run_cec_h(X, hp, self._config(None))
