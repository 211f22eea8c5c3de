"""Graph fusion network: learns one consensus adjacency from V view graphs.

A softmax over per-view attention logits mixes view-specific affine maps of
the adjacency columns; a second affine layer plus sigmoid, symmetrization and
diagonal zeroing produces the consensus graph. Training minimizes per-view
reconstruction cross-entropy plus a trace penalty tr(Q^T L Q) that pushes the
consensus Laplacian toward n_clusters near-zero eigenvalues (the relaxed
ratio-cut term). Q holds the eigenvectors of the current Laplacian and is
refreshed periodically outside the gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError, NumericalError
from .graphs import laplacian
from .numcore import (
    Adam,
    ParamTensor,
    positive_class_weight,
    sigmoid,
    softmax,
    softmax_backward,
    sym_eig,
    weighted_bce,
    weighted_bce_grad,
)


@dataclass
class GfnParams:
    """Per-view attention logits plus two affine layers acting on adjacency columns."""

    fusion_attention: ParamTensor          # shape (V, 1)
    first_weights: list                    # per view: ParamTensor (N, N)
    first_biases: list                     # per view: ParamTensor (N, 1)
    second_weight: ParamTensor             # (N, N)
    second_bias: ParamTensor               # (N, 1)

    def tensors(self):
        return ([self.fusion_attention] + self.first_weights + self.first_biases
                + [self.second_weight, self.second_bias])

    @classmethod
    def init(cls, n_nodes: int, n_views: int, rng: np.random.Generator) -> "GfnParams":
        def glorot(rows, cols):
            bound = np.sqrt(6.0 / (rows + cols))
            return ParamTensor(rng.uniform(-bound, bound, size=(rows, cols)))

        return cls(
            fusion_attention=ParamTensor(np.zeros((n_views, 1))),
            first_weights=[glorot(n_nodes, n_nodes) for _ in range(n_views)],
            first_biases=[ParamTensor(np.zeros((n_nodes, 1))) for _ in range(n_views)],
            second_weight=glorot(n_nodes, n_nodes),
            second_bias=ParamTensor(np.zeros((n_nodes, 1))),
        )


@dataclass
class ConsensusGraph:
    """Fused adjacency with its Laplacian and relaxed cluster indicator."""

    a_star: np.ndarray
    laplacian: np.ndarray
    q: np.ndarray = None  # (N, c) orthonormal columns once computed
    c: int = 0


def _check_views(graphs):
    if not graphs:
        raise ContractViolationError("need at least one view graph")
    n = graphs[0].n
    for g in graphs:
        if g.n != n:
            raise ContractViolationError(f"view graphs disagree on size: {g.n} != {n}")
    return n


def _forward_cached(graphs, params: GfnParams):
    """Forward pass returning the consensus adjacency and all intermediates."""
    _check_views(graphs)
    dense = [g.dense() for g in graphs]
    alpha = softmax(params.fusion_attention.value.ravel())
    per_view = [w.value @ a + b.value for w, b, a in
                zip(params.first_weights, params.first_biases, dense)]
    mix = sum(a_v * h for a_v, h in zip(alpha, per_view))
    hidden = np.maximum(mix, 0.0)
    logits = params.second_weight.value @ hidden + params.second_bias.value
    m = sigmoid(logits)
    a_star = (m + m.T) / 2.0
    np.fill_diagonal(a_star, 0.0)
    cache = dict(dense=dense, alpha=alpha, per_view=per_view, mix=mix,
                 hidden=hidden, logits=logits, m=m)
    return a_star, cache


def gfn_forward(graphs, params: GfnParams) -> ConsensusGraph:
    """Fuse view graphs into a consensus adjacency (symmetric, [0,1], zero diag)."""
    a_star, _ = _forward_cached(graphs, params)
    return ConsensusGraph(a_star=a_star, laplacian=laplacian(a_star))


def recompute_indicator(cg: ConsensusGraph, c: int) -> ConsensusGraph:
    """Refresh Q with the eigenvectors of the c smallest Laplacian eigenvalues."""
    lap = laplacian(cg.a_star)
    _, q = sym_eig(lap, c)
    return ConsensusGraph(a_star=cg.a_star, laplacian=lap, q=q, c=c)


def reconstruction_term(a_star: np.ndarray, graphs) -> float:
    return sum(weighted_bce(g.dense(), a_star) for g in graphs)


def trace_term(cg: ConsensusGraph) -> float:
    if cg.q is None:
        raise ContractViolationError("indicator Q not computed; call recompute_indicator")
    return float(np.trace(cg.q.T @ cg.laplacian @ cg.q))


def gfn_loss(cg: ConsensusGraph, graphs, lambda1: float) -> float:
    """Reconstruction cross-entropy over views plus lambda1 * trace penalty."""
    return reconstruction_term(cg.a_star, graphs) + lambda1 * trace_term(cg)


def _loss_grad_wrt_a_star(a_star, graphs, q, lambda1):
    g = np.zeros_like(a_star)
    for vg in graphs:
        target = vg.dense()
        g += weighted_bce_grad(target, a_star, positive_class_weight(target))
    if lambda1 != 0.0 and q is not None:
        # d tr(Q^T (D - A) Q) / dA_ij = ||q_i||^2 - q_i . q_j
        row_sq = np.sum(q * q, axis=1)
        g += lambda1 * (row_sq[:, None] - q @ q.T)
    return g


def gfn_backward(graphs, params: GfnParams, q: np.ndarray, lambda1: float) -> float:
    """Accumulate dLoss/dparams into the grad buffers; returns the loss.

    Q is treated as a constant: no gradient flows through the eigensolve.
    """
    a_star, cache = _forward_cached(graphs, params)
    lap = laplacian(a_star)
    loss = reconstruction_term(a_star, graphs)
    if q is not None:
        loss += lambda1 * float(np.trace(q.T @ lap @ q))

    d_a = _loss_grad_wrt_a_star(a_star, graphs, q, lambda1)
    # symmetrization: A*_ij = (M_ij + M_ji)/2 off-diagonal, diagonal constant 0
    d_m = (d_a + d_a.T) / 2.0
    np.fill_diagonal(d_m, 0.0)
    m = cache["m"]
    d_logits = d_m * m * (1.0 - m)

    params.second_weight.grad += d_logits @ cache["hidden"].T
    params.second_bias.grad += d_logits.sum(axis=1, keepdims=True)
    d_hidden = params.second_weight.value.T @ d_logits
    d_mix = d_hidden * (cache["mix"] > 0)

    alpha = cache["alpha"]
    d_alpha = np.array([float(np.sum(d_mix * h)) for h in cache["per_view"]])
    params.fusion_attention.grad += softmax_backward(alpha, d_alpha)[:, None]
    for v, (w, b, a) in enumerate(zip(params.first_weights, params.first_biases,
                                      cache["dense"])):
        d_h = alpha[v] * d_mix
        w.grad += d_h @ a.T
        b.grad += d_h.sum(axis=1, keepdims=True)
    return loss


class GfnTrainer:
    """Steppable training loop, so callers can interleave it with other models."""

    def __init__(self, graphs, n_clusters: int, *, lambda1: float = 0.01,
                 q_refresh: int = 5, lr: float = 1e-3, rng=None,
                 params: GfnParams = None):
        n = _check_views(graphs)
        if not (1 <= n_clusters <= n):
            raise ContractViolationError(f"n_clusters={n_clusters} outside [1, {n}]")
        if q_refresh < 1:
            raise ContractViolationError(f"q_refresh={q_refresh} must be >= 1")
        rng = np.random.default_rng(rng)
        self.graphs = list(graphs)
        self.n_clusters = n_clusters
        self.lambda1 = lambda1
        self.q_refresh = q_refresh
        self.params = params if params is not None else GfnParams.init(n, len(graphs), rng)
        self.opt = Adam(self.params.tensors(), lr=lr)
        self.q = None
        self.epoch = 0
        self.history = []

    def step(self) -> float:
        if self.epoch % self.q_refresh == 0:
            self.q = recompute_indicator(gfn_forward(self.graphs, self.params),
                                         self.n_clusters).q
        loss = gfn_backward(self.graphs, self.params, self.q, self.lambda1)
        if not np.isfinite(loss):
            raise NumericalError(f"fusion loss diverged at epoch {self.epoch}")
        self.opt.step()
        self.opt.zero_grad()
        self.history.append(float(loss))
        self.epoch += 1
        return float(loss)

    def consensus(self) -> ConsensusGraph:
        return recompute_indicator(gfn_forward(self.graphs, self.params),
                                   self.n_clusters)


def train_gfn(graphs, n_clusters: int, *, lambda1: float = 0.01, epochs: int = 200,
              q_refresh: int = 5, lr: float = 1e-3, rng=None, params: GfnParams = None,
              loss_history: list = None) -> ConsensusGraph:
    """Gradient-descend the fusion loss; refresh the indicator every q_refresh epochs.

    Returns the final consensus graph with an up-to-date indicator. Appends
    the per-epoch loss to loss_history when given.
    """
    if epochs < 1:
        raise ContractViolationError(f"epochs={epochs} must be >= 1")
    trainer = GfnTrainer(graphs, n_clusters, lambda1=lambda1, q_refresh=q_refresh,
                         lr=lr, rng=rng, params=params)
    for _ in range(epochs):
        trainer.step()
    if loss_history is not None:
        loss_history.extend(trainer.history)
    return trainer.consensus()
