"""Per-view graph construction and normalization.

Feature views get binary k-nearest-neighbor graphs (union-symmetrized);
attributed graphs keep their provided weights. Both feed the fusion network
and the graph-convolutional encoder through the same symmetric
renormalization, and the shared-neighbor similarity here drives positive
pair selection for the mutual-information module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError
from .numcore import SparseAdjacency, as_matrix, check_symmetric

#: per-node list of (neighbor id, similarity), sorted by descending similarity
NeighborList = list


@dataclass
class ViewGraph:
    """Symmetric adjacency over N nodes for one view."""

    adjacency: SparseAdjacency
    source: str = "provided"  # "knn_built" | "provided"

    def __post_init__(self):
        if self.source not in ("knn_built", "provided"):
            raise ContractViolationError(f"unknown graph source {self.source!r}")
        if any(i == j for i, j, _ in self.adjacency.entries):
            raise ContractViolationError("view graph must have a zero diagonal")

    @property
    def n(self) -> int:
        return self.adjacency.n

    def dense(self) -> np.ndarray:
        return self.adjacency.to_dense()


def pairwise_distances(features: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    x = as_matrix(features, "features")
    if metric == "euclidean":
        sq = np.sum(x * x, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
        return np.sqrt(np.maximum(d2, 0.0))
    if metric == "cosine":
        norms = np.linalg.norm(x, axis=1)
        norms = np.where(norms > 0, norms, 1.0)
        sim = (x / norms[:, None]) @ (x / norms[:, None]).T
        return 1.0 - sim
    raise ContractViolationError(f"unknown metric {metric!r}")


def build_knn_graph(features, k_g: int, metric: str = "euclidean") -> ViewGraph:
    """Binary k-NN graph, union-symmetrized (edge kept if either side picks it).

    Distance ties resolve to the lowest node index, which makes the result
    independent of any previous ordering of equal rows.
    """
    x = as_matrix(features, "features")
    n = x.shape[0]
    if k_g >= n:
        raise ContractViolationError(f"k_g={k_g} must be < number of samples {n}")
    if k_g < 1:
        raise ContractViolationError(f"k_g={k_g} must be >= 1")
    dist = pairwise_distances(x, metric)
    np.fill_diagonal(dist, np.inf)
    adj = np.zeros((n, n))
    for i in range(n):
        # stable sort keeps lowest index first among exact ties
        order = np.argsort(dist[i], kind="stable")[:k_g]
        adj[i, order] = 1.0
    adj = np.maximum(adj, adj.T)
    np.fill_diagonal(adj, 0.0)
    return ViewGraph(SparseAdjacency.from_dense(adj), source="knn_built")


def _neighbor_sets(adj: np.ndarray):
    return [set(np.nonzero(adj[i])[0].tolist()) for i in range(adj.shape[0])]


def snn_neighbors(g: ViewGraph, k_m: int) -> NeighborList:
    """Shared-nearest-neighbor selection on an attributed graph.

    Similarity between adjacent nodes is the count of common neighbors
    (excluding the two nodes themselves); non-adjacent pairs score 0 and are
    never selected. Keeps the k_m most similar adjacent nodes per node, ties
    broken by lower node id; nodes with fewer neighbors keep all of them.
    """
    if k_m < 1:
        raise ContractViolationError(f"k_m={k_m} must be >= 1")
    adj = g.dense()
    nbrs = _neighbor_sets(adj)
    out = []
    for i in range(g.n):
        scored = []
        for j in sorted(nbrs[i]):
            common = nbrs[i] & nbrs[j]
            common.discard(i)
            common.discard(j)
            scored.append((j, float(len(common))))
        scored.sort(key=lambda t: (-t[1], t[0]))
        out.append(scored[:k_m])
    return out


def knn_neighbors(features, k_m: int, metric: str = "euclidean") -> NeighborList:
    """k_m nearest neighbors per node from raw features (for feature views)."""
    x = as_matrix(features, "features")
    n = x.shape[0]
    if not (1 <= k_m < n):
        raise ContractViolationError(f"k_m={k_m} outside [1, {n - 1}]")
    dist = pairwise_distances(x, metric)
    np.fill_diagonal(dist, np.inf)
    out = []
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")[:k_m]
        # nonnegative similarity, monotone in closeness
        out.append([(int(j), float(1.0 / (1.0 + dist[i, j]))) for j in order])
    return out


def normalize_adjacency(g) -> np.ndarray:
    """Symmetric renormalization D^{-1/2} (A + I) D^{-1/2}.

    Accepts a ViewGraph or a dense symmetric nonnegative matrix. The added
    self-loop guarantees every augmented degree is >= 1.
    """
    adj = g.dense() if isinstance(g, ViewGraph) else check_symmetric(g, name="adjacency")
    if adj.size and adj.min() < 0:
        raise ContractViolationError("adjacency has negative weights")
    a_tilde = adj + np.eye(adj.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return d_inv_sqrt[:, None] * a_tilde * d_inv_sqrt[None, :]


def laplacian(a) -> np.ndarray:
    """Unnormalized graph Laplacian L = D - A."""
    a = check_symmetric(a, name="adjacency")
    if a.size and a.min() < 0:
        raise ContractViolationError("adjacency has negative weights")
    return np.diag(a.sum(axis=1)) - a
