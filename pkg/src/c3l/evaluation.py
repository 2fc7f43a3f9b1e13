"""Quality and agreement metrics for clustering results."""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._validation import check_data
from .exceptions import InputError
from .gauss1d import leakage_of
from .model import ClusterStats, fit_cluster
from .optimizer import refine, run


@dataclass
class EvaluationReport:
    bic: float
    log_likelihood: float
    free_params: int
    final_k: int
    per_cluster_leakage: list = field(default_factory=list)
    max_leakage: float = 0.0
    nmi: float | None = None

    def to_dict(self):
        return asdict(self)


def free_params(k, dim):
    """Parameters of ``k`` product-family clusters in dimension ``dim`` plus ``k - 1`` priors."""
    rest = dim - 1
    return k * (2 + rest + rest * (rest + 1) // 2) + (k - 1)


def log_likelihood(result, X):
    """Hard-assignment log-likelihood ``sum_x ln(p_c g_c(x))`` of the result on ``X``."""
    X = check_data(X)
    if result.n_clusters == 0:
        raise InputError("result has no clusters")
    if X.shape[0] != result.labels.shape[0]:
        raise InputError("data and labels differ in length")
    Xc = result.canonical(X)
    total = 0.0
    for c, model in enumerate(result.models):
        rows = Xc[result.labels == c]
        if rows.shape[0]:
            total += float(model.log_density_rows(rows).sum())
    return total


def bic(result, X):
    """``-2 LL + P ln n``; lower is better."""
    X = check_data(X)
    ll = log_likelihood(result, X)
    return -2.0 * ll + free_params(result.n_clusters, X.shape[1]) * math.log(X.shape[0])


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(labels_a, labels_b):
    """Mutual information normalised by the geometric mean of the two entropies.

    Partitions equal up to relabelling (including two single-cluster
    partitions) score exactly 1; when exactly one partition has zero
    entropy the score is 0.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape != b.shape:
        raise InputError(f"label vectors differ in length: {a.shape[0]} vs {b.shape[0]}")
    if a.size == 0:
        raise InputError("label vectors are empty")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    n = a.size
    joint = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(joint, (ia, ib), 1.0)
    ha = _entropy(joint.sum(axis=1), n)
    hb = _entropy(joint.sum(axis=0), n)
    if ha == 0.0 or hb == 0.0:
        return 1.0 if ha == hb else 0.0
    nz = joint > 0
    if np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1):
        # same partition up to relabelling; skip the 1 - eps from rounding
        return 1.0
    pij = joint[nz] / n
    outer = np.outer(joint.sum(axis=1), joint.sum(axis=0))[nz] / (n * n)
    mi = float((pij * np.log(pij / outer)).sum())
    return float(min(max(mi / math.sqrt(ha * hb), 0.0), 1.0))


def empirical_leakage(result):
    """Per-cluster leakage of the fitted 1-D factors and their maximum."""
    per = [leakage_of(m.g1) for m in result.models]
    return per, max(per, default=0.0)


def evaluate(result, X, labels=None):
    X = check_data(X)
    ll = log_likelihood(result, X)
    P = free_params(result.n_clusters, X.shape[1])
    per, worst = empirical_leakage(result)
    return EvaluationReport(
        bic=-2.0 * ll + P * math.log(X.shape[0]), log_likelihood=ll, free_params=P,
        final_k=result.n_clusters, per_cluster_leakage=per, max_leakage=worst,
        nmi=None if labels is None else nmi(result.labels, labels))


def side_models(Xc, alpha):
    """Constrained models fitted separately to the two sides of ``x_1 = 0``.

    Returns ``{+1: model, -1: model}`` with priors equal to the side shares.
    """
    Xc = check_data(Xc)
    n = Xc.shape[0]
    out = {}
    for side in (1, -1):
        rows = Xc[(Xc[:, 0] >= 0.0) if side > 0 else (Xc[:, 0] < 0.0)]
        if rows.shape[0] == 0:
            raise InputError("both sides of the boundary must contain rows")
        out[side] = fit_cluster(ClusterStats.from_rows(rows), alpha, rows.shape[0] / n)
    return out


def class_alpha(models, Xc):
    """``sign(p+ g+(x) - p- g-(x))`` for the two-class side models; ties give +1."""
    diff = models[1].log_density_rows(Xc) - models[-1].log_density_rows(Xc)
    return np.where(diff >= 0.0, 1, -1)


def margin(Xc, side):
    """Width ``2 (|m| + s^2 / |m|)`` of the region where class agreement is expected."""
    x1 = Xc[(Xc[:, 0] >= 0.0) if side > 0 else (Xc[:, 0] < 0.0), 0]
    m, s = abs(float(x1.mean())), float(x1.std())
    return 2.0 * (m + s * s / m)


def boundary_agreement(Xc, alpha):
    """Fraction of rows inside the margin where the side-model classifier agrees with the boundary.

    ``Xc`` is in the canonical frame.  Each side uses its own margin; rows
    exactly on the boundary are skipped.
    """
    Xc = check_data(Xc)
    models = side_models(Xc, alpha)
    x1 = Xc[:, 0]
    inside = ((x1 > 0.0) & (x1 <= margin(Xc, 1))) | ((x1 < 0.0) & (-x1 <= margin(Xc, -1)))
    if not inside.any():
        raise InputError("no rows inside the margin")
    truth = np.where(x1[inside] >= 0.0, 1, -1)
    return float(np.mean(class_alpha(models, Xc[inside]) == truth))


def compare_leakage_levels(X, hp, cfg, alpha_low, alpha_high):
    """Optimise at two leakage levels, sharing the strict run's partition.

    The looser level is given the stricter level's final partition as an
    extra starting point.  Its reported cost is that of the best restart;
    its reported BIC is the lower of the best restart and the warm-started
    refinement (the refinement cannot add clusters).
    """
    X = check_data(X)
    low = run(X, hp, cfg.replace(alpha=alpha_low))
    high = run(X, hp, cfg.replace(alpha=alpha_high), init_labels=[low.labels])
    warm = refine(X, hp, cfg.replace(alpha=alpha_high), low.labels)
    return {
        "low": {"alpha": alpha_low, "cost": low.cost, "bic": bic(low, X), "result": low},
        "high": {"alpha": alpha_high, "cost": high.cost,
                 "bic": min(bic(high, X), bic(warm, X)), "result": high, "warm": warm},
    }
