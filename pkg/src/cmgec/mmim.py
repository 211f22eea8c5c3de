"""Mutual-information regularizer over the common embedding.

Each node forms positive pairs with its per-view nearest neighbors and an
equal number of negative pairs with random non-neighbors. A bilinear
discriminator scores both sets; the loss is the negated discriminator-based
divergence surrogate, so minimizing it pulls neighbor embeddings together
and pushes random pairs apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError
from .numcore import PROB_EPS, ParamTensor, sigmoid


@dataclass
class PairBatch:
    positives: np.ndarray       # (P, 2) node-id pairs (i, neighbor)
    negatives: np.ndarray       # (P, 2) node-id pairs (i, non-neighbor)
    view_of_origin: np.ndarray  # (P,) view index per pair

    def __post_init__(self):
        self.positives = np.asarray(self.positives, dtype=np.intp).reshape(-1, 2)
        self.negatives = np.asarray(self.negatives, dtype=np.intp).reshape(-1, 2)
        self.view_of_origin = np.asarray(self.view_of_origin, dtype=np.intp).reshape(-1)
        if len(self.positives) != len(self.negatives):
            raise ContractViolationError("positives and negatives must pair up 1:1")
        if len(self.view_of_origin) != len(self.positives):
            raise ContractViolationError("view_of_origin length mismatch")
        if np.any(self.positives[:, 0] == self.positives[:, 1]) or \
           np.any(self.negatives[:, 0] == self.negatives[:, 1]):
            raise ContractViolationError("self-pairs are not allowed")

    def __len__(self):
        return len(self.positives)


@dataclass
class DiscriminatorParams:
    bilinear: ParamTensor  # (m, m)

    @classmethod
    def init(cls, dim: int, rng: np.random.Generator) -> "DiscriminatorParams":
        bound = 1.0 / np.sqrt(dim)
        return cls(ParamTensor(rng.uniform(-bound, bound, size=(dim, dim))))


def sample_pairs(neighbor_lists, n_nodes: int, rng: np.random.Generator) -> PairBatch:
    """One positive per (node, neighbor, view); negatives drawn uniformly.

    The negative for a positive (i, j) from view v avoids i itself and every
    selected neighbor of i in view v. A positive whose exclusion set covers
    all nodes is dropped so the 1:1 pairing holds.
    """
    positives, negatives, origins = [], [], []
    all_nodes = np.arange(n_nodes)
    for v, per_node in enumerate(neighbor_lists):
        if len(per_node) != n_nodes:
            raise ContractViolationError(
                f"view {v} neighbor list covers {len(per_node)} of {n_nodes} nodes")
        for i, nbrs in enumerate(per_node):
            if not nbrs:
                continue
            excluded = {i} | {j for j, _ in nbrs}
            candidates = np.array([x for x in all_nodes if x not in excluded])
            for j, _ in nbrs:
                if candidates.size == 0:
                    continue
                positives.append((i, j))
                negatives.append((i, int(rng.choice(candidates))))
                origins.append(v)
    if not positives:
        raise ContractViolationError("no pairs could be sampled (empty neighbor lists)")
    return PairBatch(np.array(positives), np.array(negatives), np.array(origins))


def pair_scores(z: np.ndarray, pairs: np.ndarray, p: DiscriminatorParams) -> np.ndarray:
    """sigmoid(z_i B z_j) for each pair row (i, j)."""
    left = z[pairs[:, 0]] @ p.bilinear.value
    return sigmoid(np.sum(left * z[pairs[:, 1]], axis=1))


def discriminator_score(z: np.ndarray, pair, p: DiscriminatorParams) -> float:
    i, j = pair
    return float(pair_scores(z, np.array([[i, j]]), p)[0])


def mim_loss(z: np.ndarray, batch: PairBatch, p: DiscriminatorParams) -> float:
    """-mean log rho over positives - mean log(1-rho) over negatives."""
    if len(batch) == 0:
        raise ContractViolationError("empty pair batch")
    rho_pos = np.clip(pair_scores(z, batch.positives, p), PROB_EPS, 1 - PROB_EPS)
    rho_neg = np.clip(pair_scores(z, batch.negatives, p), PROB_EPS, 1 - PROB_EPS)
    return float(-np.mean(np.log(rho_pos)) - np.mean(np.log1p(-rho_neg)))


def mim_backward(z: np.ndarray, batch: PairBatch, p: DiscriminatorParams):
    """Loss plus hand-derived gradients w.r.t. the embedding and the bilinear form.

    Returns (loss, d_z, d_bilinear); nothing is accumulated into grad buffers.
    """
    if len(batch) == 0:
        raise ContractViolationError("empty pair batch")
    b = p.bilinear.value
    d_z = np.zeros_like(z)
    d_b = np.zeros_like(b)
    loss = 0.0
    for pairs, is_positive in ((batch.positives, True), (batch.negatives, False)):
        i_idx, j_idx = pairs[:, 0], pairs[:, 1]
        rho = pair_scores(z, pairs, p)
        in_range = (rho >= PROB_EPS) & (rho <= 1 - PROB_EPS)
        rho_c = np.clip(rho, PROB_EPS, 1 - PROB_EPS)
        n_pairs = len(pairs)
        if is_positive:
            loss += float(-np.mean(np.log(rho_c)))
            coef = -(1.0 - rho) * in_range / n_pairs
        else:
            loss += float(-np.mean(np.log1p(-rho_c)))
            coef = rho * in_range / n_pairs
        zi, zj = z[i_idx], z[j_idx]
        d_b += (coef[:, None] * zi).T @ zj
        np.add.at(d_z, i_idx, coef[:, None] * (zj @ b.T))
        np.add.at(d_z, j_idx, coef[:, None] * (zi @ b))
    return loss, d_z, d_b
