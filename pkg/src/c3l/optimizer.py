"""On-line Hartigan optimisation of the constrained clustering cost.

Rows are visited in index order; each row is moved to the cluster whose
membership lowers the total cost the most, and the two affected models are
refitted immediately.  When a sweep makes no move, every cluster is tested
for dissolution (its rows greedily moved to the remaining clusters); a
dissolution is kept only if it lowers the cost.  The best of several
seeded restarts is returned.

Two baselines share the same machinery: plain cross-entropy clustering
(``alpha=None``) and the per-side variant :func:`run_cec_h`.
"""

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_data
from .exceptions import DegenerateClusterError, InputError, OptimizationError
from .geometry import CanonicalTransform, Hyperplane, canonicalize
from .model import (ClusterModel, ClusterStats, Partition, add_row, batch_cluster_cost,
                    cluster_cost, entropy_weighted, fit_models, p_alpha_for)

logger = logging.getLogger(__name__)

GAIN_TOL = 1e-12
INIT_ATTEMPTS = 100


@dataclass
class OptimizerConfig:
    """Settings of one optimisation.

    ``alpha=None`` runs unconstrained cross-entropy clustering.  A cluster
    may not shrink below ``max(min_cluster_size, ceil(min_cluster_fraction * n))``
    rows; ``min_cluster_size=None`` means ``dim + 2``.  The fraction keeps
    the optimiser away from tiny near-singular clusters, whose cost is
    unbounded below.
    """

    k_init: int = 10
    alpha: float | None = 0.05
    restarts: int = 10
    seed: int = 0
    max_sweeps: int = 200
    min_cluster_size: int | None = None
    n_jobs: int | None = None
    min_cluster_fraction: float = 0.05

    def __post_init__(self):
        if int(self.k_init) < 1:
            raise InputError("k_init must be at least 1")
        if int(self.restarts) < 1:
            raise InputError("restarts must be at least 1")
        if int(self.max_sweeps) < 1:
            raise InputError("max_sweeps must be at least 1")
        if self.alpha is not None:
            alpha = float(self.alpha)
            if not alpha > 0.0 or not math.isfinite(alpha):
                raise InputError(f"alpha must be positive, got {self.alpha!r}")
            if alpha > 0.5:
                warnings.warn(f"alpha={alpha} exceeds 0.5; the constraint is vacuous, "
                              "using 0.5", stacklevel=3)
                alpha = 0.5
            self.alpha = alpha

    def min_size(self, dim, n):
        floor = int(self.min_cluster_size) if self.min_cluster_size is not None else dim + 2
        return max(floor, math.ceil(self.min_cluster_fraction * n))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass
class RunTrace:
    """History of one restart."""

    sweep_costs: list = field(default_factory=list)
    sweep_moves: list = field(default_factory=list)
    removals: list = field(default_factory=list)
    move_costs: list = field(default_factory=list)
    initial_cost: float = math.nan
    final_k: int = 0
    converged: bool = False

    @property
    def n_sweeps(self):
        return len(self.sweep_costs)

    def to_dict(self):
        # move-level costs are kept in memory only
        return {"initial_cost": self.initial_cost, "sweep_costs": self.sweep_costs,
                "sweep_moves": self.sweep_moves, "removals": self.removals,
                "final_k": self.final_k, "converged": self.converged}

    @classmethod
    def from_dict(cls, d):
        return cls(list(d["sweep_costs"]), list(d["sweep_moves"]), list(d["removals"]),
                   [], d["initial_cost"], d["final_k"], d["converged"])


@dataclass(eq=False)
class ClusteringResult:
    """Final partition, its models (canonical frame) and bookkeeping."""

    method: str
    alpha: float | None
    labels: np.ndarray
    models: list
    cost: float
    hyperplane: Hyperplane
    transform: CanonicalTransform
    trace: RunTrace | None = None
    restart: int = 0
    seed: int = 0
    details: dict = field(default_factory=dict)

    @property
    def n_clusters(self):
        return len(self.models)

    def canonical(self, X):
        return self.transform.transform(X)

    def to_dict(self):
        return {
            "method": self.method,
            "alpha": self.alpha,
            "cost": self.cost,
            "n_clusters": self.n_clusters,
            "restart": self.restart,
            "seed": self.seed,
            "hyperplane": self.hyperplane.to_dict(),
            "transform": self.transform.to_dict(),
            "models": [m.to_dict() for m in self.models],
            "labels": self.labels.tolist(),
            "trace": None if self.trace is None else self.trace.to_dict(),
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, d):
        hp = Hyperplane(d["hyperplane"]["normal"], d["hyperplane"]["offset"])
        tr = CanonicalTransform(np.array(d["transform"]["rotation"]),
                                np.array(d["transform"]["shift"]))
        return cls(d["method"], d["alpha"], np.array(d["labels"], dtype=np.intp),
                   [ClusterModel.from_dict(m) for m in d["models"]], d["cost"], hp, tr,
                   None if d.get("trace") is None else RunTrace.from_dict(d["trace"]),
                   d.get("restart", 0), d.get("seed", 0), d.get("details", {}))


def restart_rng(seed, restart):
    """Independent stream per restart; adding restarts never changes earlier ones."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(restart),)))


def initialize(X, cfg, rng=None):
    """Random partition of the rows into ``cfg.k_init`` clusters of admissible size.

    Uniform labels are redrawn until every cluster has at least the minimum
    size; after ``INIT_ATTEMPTS`` failures a shuffled round-robin split is used.
    """
    n, dim = X.shape
    k = int(cfg.k_init)
    min_size = cfg.min_size(dim, n)
    if n < k * min_size:
        raise InputError(f"{n} rows cannot hold {k} clusters of at least {min_size} rows")
    if rng is None:
        rng = restart_rng(cfg.seed, 0)
    if k == 1:
        return Partition(X, np.zeros(n, dtype=np.intp), 1)
    for _ in range(INIT_ATTEMPTS):
        labels = rng.integers(0, k, size=n)
        if np.bincount(labels, minlength=k).min() >= min_size:
            return Partition(X, labels, k)
    labels = np.empty(n, dtype=np.intp)
    labels[rng.permutation(n)] = np.arange(n) % k
    return Partition(X, labels, k)


def _add_costs(part, clusters, x, p_alpha):
    """Counts and optimal costs of ``clusters`` after hypothetically adding ``x``."""
    counts = part.counts[clusters]
    d = x - part.means[clusters]
    n1 = counts + 1
    means = part.means[clusters] + d / n1[:, None]
    scatters = part.scatters[clusters] + (counts / n1)[:, None, None] * (d[:, :, None] * d[:, None, :])
    return n1, batch_cluster_cost(n1, means, scatters, p_alpha)


def _remove_cost(part, c, x, p_alpha):
    count = part.counts[c]
    d = x - part.means[c]
    n1 = count - 1
    mean = part.means[c] - d / n1
    scatter = part.scatters[c] - (count / n1) * np.outer(d, d)
    return batch_cluster_cost(np.array([n1]), mean[None], scatter[None], p_alpha)[0]


def reassign_gain(partition, i, to, alpha, min_size=None):
    """Decrease of the total cost if row ``i`` moved to cluster ``to``.

    Returns 0 for the row's own cluster and ``-inf`` when the move would take
    the source cluster below the minimum size.
    """
    src = partition.labels[i]
    if to == src:
        return 0.0
    if min_size is None:
        min_size = partition.dim + 2
    if partition.counts[src] <= min_size:
        return -math.inf
    p_alpha = p_alpha_for(alpha)
    n = partition.n
    x = partition.X[i]
    pair = np.array([src, to])
    before = batch_cluster_cost(partition.counts[pair], partition.means[pair],
                                partition.scatters[pair], p_alpha)
    src_after = _remove_cost(partition, src, x, p_alpha)
    n_to, to_after = _add_costs(partition, np.array([to]), x, p_alpha)
    old = entropy_weighted(partition.counts[pair], before, n).sum()
    new = (entropy_weighted(partition.counts[src] - 1, src_after, n)
           + entropy_weighted(n_to, to_after, n)[0])
    return float(old - new)


class _Hartigan:
    """Mutable state of one restart."""

    def __init__(self, part, alpha, min_size):
        self.part = part
        self.alpha = alpha
        self.p_alpha = p_alpha_for(alpha)
        self.min_size = min_size
        self.refresh()

    def refresh(self):
        p = self.part
        self.costs = batch_cluster_cost(p.counts, p.means, p.scatters, self.p_alpha)
        if not np.all(np.isfinite(self.costs)):
            raise DegenerateClusterError("a cluster in the partition cannot be fitted")
        self.terms = entropy_weighted(p.counts, self.costs, p.n)

    @property
    def total(self):
        return float(self.terms.sum())

    def sweep(self, trace):
        part, n = self.part, self.part.n
        moves = 0
        for i in range(n):
            src = part.labels[i]
            if part.counts[src] <= self.min_size:
                continue
            others = part.active
            others = others[others != src]
            if others.size == 0:
                continue
            x = part.X[i]
            src_cost = _remove_cost(part, src, x, self.p_alpha)
            src_term = entropy_weighted(part.counts[src] - 1, src_cost, n)
            n_to, to_cost = _add_costs(part, others, x, self.p_alpha)
            to_terms = entropy_weighted(n_to, to_cost, n)
            gains = (self.terms[src] + self.terms[others]) - (src_term + to_terms)
            best = int(np.argmax(gains))
            if not gains[best] > GAIN_TOL:
                continue
            dst = others[best]
            part.move(i, dst)
            if part._moves == 0:
                self.refresh()
            else:
                self.costs[src], self.terms[src] = src_cost, src_term
                self.costs[dst], self.terms[dst] = to_cost[best], to_terms[best]
            moves += 1
            trace.move_costs.append(self.total)
        return moves

    def try_dissolve(self):
        """Dissolve the first cluster (smallest first) whose removal lowers the cost."""
        part = self.part
        active = part.active
        if active.size < 2:
            return None
        before = self.total
        for c in sorted(active, key=lambda c: (part.counts[c], c)):
            trial = part.copy()
            members = np.flatnonzero(trial.labels == c)
            # empty the cluster first, then add its rows one by one
            trial.counts[c] = 0
            trial.means[c] = 0.0
            trial.scatters[c] = 0.0
            rest = active[active != c]
            costs = self.costs.copy()
            costs[c] = 0.0
            terms = self.terms.copy()
            terms[c] = 0.0
            for i in members:
                x = trial.X[i]
                n_to, to_cost = _add_costs(trial, rest, x, self.p_alpha)
                to_terms = entropy_weighted(n_to, to_cost, trial.n)
                best = int(np.argmin(to_terms - terms[rest]))
                dst = rest[best]
                trial.counts[dst], trial.means[dst], trial.scatters[dst] = add_row(
                    trial.counts[dst], trial.means[dst], trial.scatters[dst], x)
                trial.labels[i] = dst
                costs[dst], terms[dst] = to_cost[best], to_terms[best]
            after = float(terms.sum())
            if after < before - GAIN_TOL and np.all(np.isfinite(terms)):
                size = int(part.counts[c])
                trial.rebuild()
                self.part = trial
                self.refresh()
                return {"cluster": int(c), "size": size,
                        "cost_before": before, "cost_after": self.total}
        return None


def _optimize(X, cfg, alpha, restart, labels=None):
    """One restart in the canonical frame; returns ``(partition, trace)``."""
    n, dim = X.shape
    min_size = cfg.min_size(dim, n)
    if labels is None:
        part = initialize(X, cfg, restart_rng(cfg.seed, restart))
    else:
        part = Partition(X, labels)
    state = _Hartigan(part, alpha, min_size)
    trace = RunTrace(initial_cost=state.total)
    for sweep in range(int(cfg.max_sweeps)):
        moves = state.sweep(trace)
        removal = None
        if moves == 0:
            removal = state.try_dissolve()
            if removal is not None:
                removal["sweep"] = sweep
                trace.removals.append(removal)
                trace.move_costs.append(state.total)
        trace.sweep_costs.append(state.total)
        trace.sweep_moves.append(moves)
        if moves == 0 and removal is None:
            trace.converged = True
            break
    state.part.rebuild()
    state.refresh()
    trace.final_k = state.part.k_active
    return state.part, trace


def _safe_optimize(X, cfg, alpha, restart, labels=None):
    try:
        return _optimize(X, cfg, alpha, restart, labels)
    except DegenerateClusterError as exc:
        logger.warning("restart %d failed: %s", restart, exc)
        return None


def _finish(part, alpha):
    """Relabel active clusters ``0..k-1`` and fit their final models and cost."""
    active = part.active
    remap = np.full(part.n_clusters, -1, dtype=np.intp)
    remap[active] = np.arange(active.size)
    fitted = fit_models(part, alpha)
    models = [fitted[c] for c in active]
    cost = float(sum(m.prior * (-math.log(m.prior) + cluster_cost(part.stats(c), m))
                     for c, m in zip(active, models)))
    return remap[part.labels], models, cost


def optimize_canonical(X, cfg, alpha, init_labels=()):
    """Best-of-restarts optimisation of data already in the canonical frame.

    ``init_labels`` are extra starting partitions tried after the random ones.
    Returns ``(labels, models, cost, trace, restart_index)``.
    """
    starts = [(r, None) for r in range(int(cfg.restarts))]
    starts += [(int(cfg.restarts) + j, np.asarray(lab)) for j, lab in enumerate(init_labels)]
    if cfg.n_jobs in (None, 1):
        outcomes = [_safe_optimize(X, cfg, alpha, r, lab) for r, lab in starts]
    else:
        outcomes = Parallel(n_jobs=cfg.n_jobs)(
            delayed(_safe_optimize)(X, cfg, alpha, r, lab) for r, lab in starts)
    best = None
    for (r, _), out in zip(starts, outcomes):
        if out is None:
            continue
        part, trace = out
        cost = trace.sweep_costs[-1]
        if best is None or cost < best[2]:
            best = (part, trace, cost, r)
    if best is None:
        raise OptimizationError("every restart ended with a degenerate cluster")
    part, trace, _, r = best
    labels, models, cost = _finish(part, alpha)
    return labels, models, cost, trace, r


def _prepare(X, hp):
    X = check_data(X)
    if hp is None:
        hp = Hyperplane.first_axis(X.shape[1])
    if hp.dim != X.shape[1]:
        raise InputError(f"hyperplane has dimension {hp.dim} but data has {X.shape[1]} columns")
    T = canonicalize(hp)
    return T.transform(X), hp, T


def run(X, hp, cfg, init_labels=()):
    """Constrained clustering of ``X`` with boundary ``hp`` (``None`` = ``x_1 = 0``)."""
    Xc, hp, T = _prepare(X, hp)
    labels, models, cost, trace, r = optimize_canonical(Xc, cfg, cfg.alpha, init_labels)
    method = "cec" if cfg.alpha is None else "c3l"
    return ClusteringResult(method, cfg.alpha, labels, models, cost, hp, T, trace, r, cfg.seed)


def refine(X, hp, cfg, labels):
    """Run the optimiser from one given partition only (no random restarts)."""
    Xc, hp, T = _prepare(X, hp)
    labels = np.asarray(labels, dtype=np.intp)
    if labels.shape != (Xc.shape[0],):
        raise InputError("starting labels must have one entry per row")
    out = _safe_optimize(Xc, cfg, cfg.alpha, int(cfg.restarts), labels)
    if out is None:
        raise OptimizationError("the starting partition contains a degenerate cluster")
    part, trace = out
    labels, models, cost = _finish(part, cfg.alpha)
    method = "cec" if cfg.alpha is None else "c3l"
    return ClusteringResult(method, cfg.alpha, labels, models, cost, hp, T, trace,
                            int(cfg.restarts), cfg.seed)


def run_cec(X, hp, cfg, init_labels=()):
    """Unconstrained cross-entropy clustering in the same product family."""
    return run(X, hp, cfg.replace(alpha=None), init_labels)


def assign_by_density(Xc, models):
    """Index of the model maximising ``ln p_i + ln g_i(x)`` per row (ties: lowest)."""
    scores = np.column_stack([m.log_density_rows(Xc) for m in models])
    return np.argmax(scores, axis=1)


def partition_cost(Xc, labels, models):
    """Cost of a partition under fixed models, with priors ``n_i / n``."""
    n = Xc.shape[0]
    total = 0.0
    for c, m in enumerate(models):
        rows = Xc[labels == c]
        if rows.shape[0] == 0:
            continue
        p = rows.shape[0] / n
        total += p * (-math.log(p) + cluster_cost(ClusterStats.from_rows(rows), m))
    return total


def run_cec_h(X, hp, cfg):
    """Cluster each side of the boundary separately, merge, and reassign.

    Each side is clustered without constraint; side models get their priors
    rescaled by the side's share of the data and every row is then moved to
    its most probable model.  Models left without rows are dropped.
    """
    Xc, hp, T = _prepare(X, hp)
    n, dim = Xc.shape
    side_of = np.where(Xc[:, 0] >= 0.0, 1, -1)
    models, side_info = [], []
    for side in (-1, 1):
        rows = Xc[side_of == side]
        min_size = cfg.min_size(dim, rows.shape[0])
        k_side = min(int(cfg.k_init), rows.shape[0] // min_size)
        if k_side < 1:
            raise InputError(f"only {rows.shape[0]} rows on the {'+' if side > 0 else '-'} "
                             f"side; need at least {min_size}")
        side_cfg = cfg.replace(k_init=k_side, alpha=None)
        _, side_models, side_cost, trace, r = optimize_canonical(rows, side_cfg, None)
        share = rows.shape[0] / n
        models.extend(m.with_prior(m.prior * share) for m in side_models)
        side_info.append({"side": side, "rows": int(rows.shape[0]), "k": len(side_models),
                          "cost": side_cost, "restart": r, "trace": trace.to_dict()})
    labels = assign_by_density(Xc, models)
    used = np.unique(labels)
    remap = np.full(len(models), -1, dtype=np.intp)
    remap[used] = np.arange(used.size)
    labels = remap[labels]
    models = [models[c] for c in used]
    cost = partition_cost(Xc, labels, models)
    return ClusteringResult("cec_h", None, labels, models, cost, hp, T, None, 0, cfg.seed,
                            {"sides": side_info})
