"""Cluster models from the product family and the clustering cost.

Every cluster density factorises as ``g(x) = g1(x_1) * g_rest(x_2..x_N)``
in the canonical frame.  ``g1`` is a 1-D Gaussian fitted under the leakage
constraint, ``g_rest`` is the plain maximum likelihood Gaussian of the
remaining coordinates (with a tiny trace-scaled ridge).  The cost of a
partition is ``sum_i p_i * (-ln p_i + H_i)`` where ``H_i`` is the
cross-entropy of cluster ``i`` against its model and ``p_i = n_i / n``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateClusterError, InputError
from .gauss1d import (LN_2PI, ConstrainedGaussian1D, Moments1D, constrained_mle,
                      constrained_params, cross_entropy_1d, quantile_upper)

RIDGE = 1e-9


def ridge_for(cov):
    """Ridge added to a covariance: ``RIDGE * trace / dim``."""
    dim = cov.shape[-1]
    if dim == 0:
        return 0.0
    return RIDGE * np.trace(cov, axis1=-2, axis2=-1) / dim


def gaussian_cross_entropy(data_mean, data_cov, mean, cov):
    """Cross-entropy of data with given moments against ``N(mean, cov)``.

    ``dim/2 ln 2pi + 1/2 (m_X - m)' cov^-1 (m_X - m) + 1/2 tr(cov^-1 S_X)
    + 1/2 ln det cov``.
    """
    data_mean = np.atleast_1d(np.asarray(data_mean, dtype=np.float64))
    dim = data_mean.shape[0]
    if dim == 0:
        return 0.0
    data_cov = np.asarray(data_cov, dtype=np.float64).reshape(dim, dim)
    cov = np.asarray(cov, dtype=np.float64).reshape(dim, dim)
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DegenerateClusterError("model covariance is not positive definite") from exc
    diff = np.linalg.solve(L, data_mean - np.asarray(mean, dtype=np.float64))
    Linv = np.linalg.solve(L, np.eye(dim))
    trace = float(np.sum(Linv * (Linv @ data_cov)))
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return 0.5 * (dim * LN_2PI + float(diff @ diff) + trace + logdet)


def add_row(count, mean, scatter, x):
    """Statistics after adding ``x`` (scatter is the centred sum of squares)."""
    d = x - mean
    n1 = count + 1
    return n1, mean + d / n1, scatter + (count / n1) * np.outer(d, d)


def remove_row(count, mean, scatter, x):
    """Statistics after removing ``x``; inverse of :func:`add_row`."""
    if count <= 1:
        dim = mean.shape[0]
        return 0, np.zeros(dim), np.zeros((dim, dim))
    d = x - mean
    n1 = count - 1
    return n1, mean - d / n1, scatter - (count / n1) * np.outer(d, d)


@dataclass
class ClusterStats:
    """Size, mean and centred scatter ``n * cov`` of one cluster."""

    count: int
    mean: np.ndarray
    scatter: np.ndarray

    @classmethod
    def empty(cls, dim):
        return cls(0, np.zeros(dim), np.zeros((dim, dim)))

    @classmethod
    def from_rows(cls, rows):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            raise InputError("rows must be a 2-D array")
        if rows.shape[0] == 0:
            return cls.empty(rows.shape[1])
        mean = rows.mean(axis=0)
        centred = rows - mean
        return cls(rows.shape[0], mean, centred.T @ centred)

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def cov(self):
        """Biased (1/n) covariance."""
        if self.count == 0:
            return np.zeros_like(self.scatter)
        return self.scatter / self.count

    def add(self, x):
        self.count, self.mean, self.scatter = add_row(self.count, self.mean, self.scatter,
                                                      np.asarray(x, dtype=np.float64))

    def remove(self, x):
        if self.count == 0:
            raise InputError("cannot remove a row from an empty cluster")
        self.count, self.mean, self.scatter = remove_row(self.count, self.mean, self.scatter,
                                                         np.asarray(x, dtype=np.float64))

    def copy(self):
        return ClusterStats(self.count, self.mean.copy(), self.scatter.copy())

    def moments1d(self):
        return Moments1D(float(self.mean[0]), math.sqrt(max(self.cov[0, 0], 0.0)), self.count)


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """Product density ``g1(x_1) * N(rest_mean, rest_cov)(x_2..)`` with a prior."""

    g1: ConstrainedGaussian1D
    rest_mean: np.ndarray
    rest_cov: np.ndarray
    prior: float = 1.0
    ridge: float = 0.0
    _chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rest_mean = np.asarray(self.rest_mean, dtype=np.float64).reshape(-1)
        d = rest_mean.shape[0]
        rest_cov = np.asarray(self.rest_cov, dtype=np.float64).reshape(d, d)
        try:
            chol = np.linalg.cholesky(rest_cov) if d else np.zeros((0, 0))
        except np.linalg.LinAlgError as exc:
            raise DegenerateClusterError("rest covariance is not positive definite") from exc
        object.__setattr__(self, "rest_mean", rest_mean)
        object.__setattr__(self, "rest_cov", rest_cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self):
        return 1 + self.rest_mean.shape[0]

    def with_prior(self, prior):
        return ClusterModel(self.g1, self.rest_mean, self.rest_cov, float(prior), self.ridge)

    def log_density_rows(self, X):
        """``ln prior + ln g(x)`` for every row of ``X`` (canonical frame)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        z = (X[:, 0] - self.g1.mean) / self.g1.std
        out = -0.5 * (z * z + LN_2PI) - math.log(self.g1.std)
        d = self.rest_mean.shape[0]
        if d:
            y = np.linalg.solve(self._chol, (X[:, 1:] - self.rest_mean).T)
            logdet = 2.0 * np.sum(np.log(np.diag(self._chol)))
            out = out - 0.5 * (np.sum(y * y, axis=0) + d * LN_2PI + logdet)
        return out + math.log(self.prior)

    def to_dict(self):
        return {"g1": self.g1.to_dict(), "rest_mean": self.rest_mean.tolist(),
                "rest_cov": self.rest_cov.tolist(), "prior": self.prior, "ridge": self.ridge}

    @classmethod
    def from_dict(cls, d):
        return cls(ConstrainedGaussian1D(**d["g1"]), np.array(d["rest_mean"]),
                   np.array(d["rest_cov"]), d["prior"], d.get("ridge", 0.0))


def fit_cluster(stats, alpha, prior=1.0):
    """Fit the best constrained product model to one cluster.

    ``alpha=None`` fits the unconstrained model (plain cross-entropy
    clustering); ``alpha >= 0.5`` is equivalent since the constraint is vacuous.
    """
    dim = stats.dim
    if stats.count < dim + 1:
        raise DegenerateClusterError(
            f"cluster of {stats.count} rows is too small to fit in dimension {dim}")
    mom = stats.moments1d()
    if not mom.std > 0.0:
        raise DegenerateClusterError("cluster has zero variance across the boundary")
    if alpha is None:
        g1 = ConstrainedGaussian1D(mom.mean, mom.std, 0.0, False)
    else:
        g1 = constrained_mle(mom, alpha)
    rest_cov = stats.cov[1:, 1:]
    delta = float(ridge_for(rest_cov))
    if dim > 1 and not delta > 0.0:
        raise DegenerateClusterError("cluster has zero variance along the boundary")
    return ClusterModel(g1, stats.mean[1:].copy(), rest_cov + delta * np.eye(dim - 1),
                        float(prior), delta)


def cluster_cost(stats, model):
    """Cross-entropy of the cluster's rows against ``model`` (prior excluded)."""
    cost = cross_entropy_1d(stats.moments1d(), model.g1.mean, model.g1.std)
    cov = stats.cov
    return cost + gaussian_cross_entropy(stats.mean[1:], cov[1:, 1:],
                                         model.rest_mean, model.rest_cov)


def entropy_weighted(count, cost, n_total):
    """One cluster's contribution ``p (-ln p + cost)``; empty clusters give 0."""
    count = np.asarray(count, dtype=np.float64)
    p = count / n_total
    with np.errstate(divide="ignore", invalid="ignore"):
        term = p * (-np.log(p) + cost)
    return np.where(count > 0, term, 0.0)


def p_alpha_for(alpha):
    """Quantile used by the batched kernel; ``None`` means unconstrained."""
    if alpha is None or alpha >= 0.5:
        return None
    return quantile_upper(alpha)


def batch_cluster_cost(count, mean, scatter, p_alpha):
    """Optimal cross-entropy for a stack of clusters given their statistics.

    Equivalent to ``cluster_cost(stats, fit_cluster(stats, alpha))`` for each
    cluster, evaluated with one batched eigendecomposition.  Degenerate
    clusters get ``+inf``; empty clusters get 0.
    """
    count = np.asarray(count, dtype=np.float64)
    safe = np.where(count > 0, count, 1.0)
    var1 = scatter[:, 0, 0] / safe
    std1 = np.sqrt(np.maximum(var1, 0.0))
    ok = (std1 > 0.0) & (count >= mean.shape[1] + 1)
    m, s, _ = constrained_params(mean[:, 0], np.where(ok, std1, 1.0), p_alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = 0.5 * ((var1 + (m - mean[:, 0]) ** 2) / (s * s) + np.log(s * s) + LN_2PI)
    d = mean.shape[1] - 1
    if d:
        rest = scatter[:, 1:, 1:] / safe[:, None, None]
        lam = np.linalg.eigvalsh(rest)
        delta = RIDGE * np.trace(rest, axis1=1, axis2=2) / d
        ok &= delta > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            shifted = np.maximum(lam, 0.0) + delta[:, None]
            cost = cost + 0.5 * (d * LN_2PI + np.sum(lam / shifted, axis=1)
                                 + np.sum(np.log(shifted), axis=1))
    cost = np.where(ok, cost, np.inf)
    return np.where(count > 0, cost, 0.0)


class Partition:
    """Hard assignment of rows to clusters with running per-cluster statistics.

    Statistics are kept in stacked arrays so that candidate moves can be
    scored for all clusters at once.  They are updated by rank-one steps and
    rebuilt from scratch every ``10 * n`` moves to bound drift.
    """

    def __init__(self, X, labels, n_clusters=None):
        self.X = X
        labels = np.asarray(labels, dtype=np.intp)
        if labels.shape != (X.shape[0],):
            raise InputError("labels must have one entry per row")
        if labels.min(initial=0) < 0:
            raise InputError("labels must be non-negative")
        k = int(labels.max(initial=-1)) + 1 if n_clusters is None else int(n_clusters)
        if labels.max(initial=-1) >= k:
            raise InputError("label exceeds the number of clusters")
        self.labels = labels.copy()
        self.n_clusters = k
        self.rebuild_every = 10 * X.shape[0]
        self.rebuild()

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def k_active(self):
        return int(np.count_nonzero(self.counts))

    @property
    def active(self):
        return np.flatnonzero(self.counts > 0)

    def rebuild(self):
        """Recompute all statistics from the member rows."""
        k, dim = self.n_clusters, self.dim
        self.counts = np.bincount(self.labels, minlength=k).astype(np.int64)
        self.means = np.zeros((k, dim))
        self.scatters = np.zeros((k, dim, dim))
        for c in np.flatnonzero(self.counts):
            st = ClusterStats.from_rows(self.X[self.labels == c])
            self.means[c], self.scatters[c] = st.mean, st.scatter
        self._moves = 0

    def stats(self, c):
        return ClusterStats(int(self.counts[c]), self.means[c].copy(), self.scatters[c].copy())

    def move(self, i, to):
        """Reassign row ``i`` to cluster ``to`` and update both statistics."""
        src = self.labels[i]
        if src == to:
            return
        x = self.X[i]
        self.counts[src], self.means[src], self.scatters[src] = remove_row(
            self.counts[src], self.means[src], self.scatters[src], x)
        self.counts[to], self.means[to], self.scatters[to] = add_row(
            self.counts[to], self.means[to], self.scatters[to], x)
        self.labels[i] = to
        self._moves += 1
        if self._moves >= self.rebuild_every:
            self.rebuild()

    def copy(self):
        return Partition(self.X, self.labels, self.n_clusters)


def fit_models(partition, alpha):
    """Fit one model per active cluster; entries for empty clusters are ``None``."""
    models = []
    for c in range(partition.n_clusters):
        if partition.counts[c] == 0:
            models.append(None)
            continue
        models.append(fit_cluster(partition.stats(c), alpha,
                                  prior=partition.counts[c] / partition.n))
    return models


def total_cost(partition, models):
    """``sum_i p_i (-ln p_i + H(X_i || g_i))`` with ``p_i = n_i / n``."""
    total = 0.0
    for c in range(partition.n_clusters):
        count = int(partition.counts[c])
        if count == 0:
            continue
        p = count / partition.n
        total += p * (-math.log(p) + cluster_cost(partition.stats(c), models[c]))
    return total


def log_density(model, x):
    """``ln p_i + ln g1(x_1) + ln g_rest(x_2..)`` for a single canonical point."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise InputError(f"expected a point of dimension {model.dim}, got shape {x.shape}")
    return float(model.log_density_rows(x[None, :])[0])
