"""Final clustering (k-means++, spectral segmentation) and evaluation metrics.

k-means++ is implemented here rather than borrowed so that seeding, Lloyd
updates, the empty-cluster rule and restart order are all driven by one
explicit generator: repeated runs with the same seed must be bit-identical.
The information-theoretic metrics delegate to scikit-learn; the test suite
checks them against exhaustive pair-counting and entropy oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import (
    adjusted_mutual_info_score,
    adjusted_rand_score,
    normalized_mutual_info_score,
)

from .exceptions import ContractViolationError, NumericalError
from .graphs import laplacian
from .numcore import as_matrix, sym_eig


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    c: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.intp).reshape(-1)
        if self.c < 1:
            raise ContractViolationError(f"cluster count {self.c} must be >= 1")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.c):
            raise ContractViolationError("labels outside [0, c)")

    @property
    def n(self) -> int:
        return self.labels.size


def _assign(x, centroids):
    d2 = np.sum((x[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1), d2


def _seed_centroids(x, c, rng):
    n = x.shape[0]
    centroids = np.empty((c, x.shape[1]))
    centroids[0] = x[int(rng.integers(n))]
    d2 = np.sum((x - centroids[0]) ** 2, axis=1)
    for k in range(1, c):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # every point already coincides with a centroid
            idx = int(rng.integers(n))
        centroids[k] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centroids[k]) ** 2, axis=1))
    return centroids


def _fix_empty(x, centroids, labels, d2, c):
    """Reseed each empty cluster at the point farthest from its centroid."""
    n = x.shape[0]
    for _ in range(2 * c):
        empty = np.flatnonzero(np.bincount(labels, minlength=c) == 0)
        if empty.size == 0:
            break
        k = int(empty[0])
        far = int(np.argmax(d2[np.arange(n), labels]))
        centroids[k] = x[far]
        labels, d2 = _assign(x, centroids)
        labels[far] = k  # claim it even on a zero-distance tie
    return labels, d2


def _lloyd(x, c, rng, max_iter):
    n = x.shape[0]
    centroids = _seed_centroids(x, c, rng)
    labels, d2 = _assign(x, centroids)
    prev_inertia = np.inf
    for _ in range(max_iter):
        labels, d2 = _fix_empty(x, centroids, labels, d2, c)
        for k in range(c):
            centroids[k] = x[labels == k].mean(axis=0)
        new_labels, d2 = _assign(x, centroids)
        inertia = float(d2[np.arange(n), new_labels].sum())
        if inertia > prev_inertia + 1e-9:
            raise NumericalError("k-means inertia increased between iterations")
        prev_inertia = inertia
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, prev_inertia


def kmeans_pp(points, c: int, rng=None, max_iter: int = 300,
              n_restarts: int = 20) -> ClusterAssignment:
    """k-means++ seeding plus Lloyd iterations; best of n_restarts by inertia."""
    x = as_matrix(points, "points")
    if not (1 <= c <= x.shape[0]):
        raise ContractViolationError(f"c={c} outside [1, {x.shape[0]}]")
    if max_iter < 1 or n_restarts < 1:
        raise ContractViolationError("max_iter and n_restarts must be >= 1")
    rng = np.random.default_rng(rng)
    best_labels, best_inertia = None, np.inf
    for _ in range(n_restarts):
        labels, inertia = _lloyd(x, c, rng, max_iter)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return ClusterAssignment(best_labels, c)


def spectral_cut(a, c: int, rng=None, n_restarts: int = 20) -> ClusterAssignment:
    """Ratio-cut style segmentation: k-means++ on the c bottom Laplacian eigenvectors."""
    lap = laplacian(a)
    _, vecs = sym_eig(lap, c)
    return kmeans_pp(vecs, c, rng=rng, n_restarts=n_restarts)


def normalized_cut(adj, labels) -> float:
    """Sum over clusters of cut(C, ~C) / vol(C); label-free partition quality."""
    adj = as_matrix(adj, "adjacency")
    labels = _labels(labels)
    deg = adj.sum(axis=1)
    total = 0.0
    for k in np.unique(labels):
        mask = labels == k
        vol = float(deg[mask].sum())
        if vol > 0:
            total += float(adj[mask][:, ~mask].sum()) / vol
    return total


def _labels(a) -> np.ndarray:
    return a.labels if isinstance(a, ClusterAssignment) else np.asarray(a, dtype=np.intp)


def contingency(pred, truth) -> np.ndarray:
    p, t = _labels(pred), _labels(truth)
    if p.size != t.size:
        raise ContractViolationError(f"length mismatch: {p.size} vs {t.size}")
    _, pi = np.unique(p, return_inverse=True)
    _, ti = np.unique(t, return_inverse=True)
    k = max(pi.max(), ti.max()) + 1
    table = np.zeros((k, k), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def hungarian_mapping(pred, truth) -> np.ndarray:
    """Best bijection predicted-cluster -> true-cluster on the padded contingency.

    Returns an array over compacted predicted labels giving the matched
    compacted true label. Rows are put in a canonical order before solving so
    that ties between equally good assignments resolve the same way under any
    relabeling of the predicted ids.
    """
    table = contingency(pred, truth)
    order = sorted(range(table.shape[0]), key=lambda i: tuple(table[i]), reverse=True)
    rows, cols = linear_sum_assignment(-table[order])
    mapping = np.empty(table.shape[0], dtype=np.intp)
    for r, c in zip(rows, cols):
        mapping[order[r]] = c
    return mapping


def accuracy_hungarian(pred, truth) -> float:
    """Clustering accuracy under the best label bijection."""
    p, t = _labels(pred), _labels(truth)
    table = contingency(p, t)
    rows, cols = linear_sum_assignment(-table)
    return float(table[rows, cols].sum() / p.size)


def info_metrics(pred, truth):
    """(NMI, AMI, ARI) with arithmetic-mean normalization for the MI scores."""
    p, t = _labels(pred), _labels(truth)
    if p.size != t.size:
        raise ContractViolationError(f"length mismatch: {p.size} vs {t.size}")
    nmi = float(normalized_mutual_info_score(t, p, average_method="arithmetic"))
    ami = float(adjusted_mutual_info_score(t, p, average_method="arithmetic"))
    ari = float(adjusted_rand_score(t, p))
    return nmi, ami, ari


def f1_macro(pred, truth) -> float:
    """Macro-averaged F1 after aligning predicted labels with the Hungarian map."""
    p, t = _labels(pred), _labels(truth)
    if p.size != t.size:
        raise ContractViolationError(f"length mismatch: {p.size} vs {t.size}")
    _, pi = np.unique(p, return_inverse=True)
    t_classes, ti = np.unique(t, return_inverse=True)
    mapped = hungarian_mapping(p, t)[pi]
    scores = []
    for k in range(len(t_classes)):
        tp = np.sum((mapped == k) & (ti == k))
        fp = np.sum((mapped == k) & (ti != k))
        fn = np.sum((mapped != k) & (ti == k))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def evaluate(pred, truth) -> dict:
    nmi, ami, ari = info_metrics(pred, truth)
    return {
        "acc": accuracy_hungarian(pred, truth),
        "nmi": nmi,
        "ari": ari,
        "ami": ami,
        "f1": f1_macro(pred, truth),
    }


METRIC_NAMES = ("acc", "nmi", "ari", "ami", "f1")


@dataclass
class MetricsReport:
    """Per-run metric values with their mean and (population) stddev."""

    per_run: list = field(default_factory=list)
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)

    @property
    def runs(self) -> int:
        return len(self.per_run)

    @classmethod
    def from_runs(cls, per_run) -> "MetricsReport":
        per_run = [dict(r) for r in per_run]
        if not per_run:
            return cls([], {}, {})
        mean = {k: float(np.mean([r[k] for r in per_run])) for k in METRIC_NAMES}
        std = {k: float(np.std([r[k] for r in per_run])) for k in METRIC_NAMES}
        return cls(per_run, mean, std)

    def to_dict(self) -> dict:
        return {"runs": self.runs, "per_run": self.per_run,
                "mean": self.mean, "std": self.std}
