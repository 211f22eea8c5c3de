"""Multi-graph auto-encoder producing the common node embedding.

Encoder: one graph-convolution per view, an attention-weighted fusion layer
that convolves each view's hidden state again, and a final convolution over
the consensus graph (linear output, so the embedding is unconstrained going
into k-means). Decoders reconstruct each view's adjacency with a bilinear
inner product. All backward passes are hand-derived and checked against
finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError, NumericalError
from .mmim import DiscriminatorParams, mim_backward, sample_pairs
from .numcore import (
    Adam,
    ParamTensor,
    positive_class_weight,
    sigmoid,
    softmax,
    softmax_backward,
    weighted_bce,
    weighted_bce_grad,
)


def _glorot(rng, rows, cols):
    bound = np.sqrt(6.0 / (rows + cols))
    return ParamTensor(rng.uniform(-bound, bound, size=(rows, cols)))


@dataclass
class EncoderParams:
    first_weights: list            # per view: ParamTensor (d_v, h1)
    second_weights: list           # per view: ParamTensor (h1, h2)
    view_attention: ParamTensor    # (V, 1)
    final_weight: ParamTensor      # (h2, m)

    def tensors(self):
        return (self.first_weights + self.second_weights
                + [self.view_attention, self.final_weight])

    @classmethod
    def init(cls, dims, h1, h2, m, rng) -> "EncoderParams":
        return cls(
            first_weights=[_glorot(rng, d, h1) for d in dims],
            second_weights=[_glorot(rng, h1, h2) for _ in dims],
            view_attention=ParamTensor(np.zeros((len(dims), 1))),
            final_weight=_glorot(rng, h2, m),
        )


@dataclass
class DecoderParams:
    weights: list  # per view: ParamTensor (m, m)

    def tensors(self):
        return list(self.weights)

    @classmethod
    def init(cls, n_views, m, rng, noise=0.01) -> "DecoderParams":
        # identity plus noise: early reconstruction starts from raw inner products
        return cls([ParamTensor(np.eye(m) + rng.normal(0.0, noise, size=(m, m)))
                    for _ in range(n_views)])


def gcn_layer(norm_adj, h, w, act=None) -> np.ndarray:
    """One graph convolution act(norm_adj @ h @ w)."""
    norm_adj, h = np.asarray(norm_adj, float), np.asarray(h, float)
    w = w.value if isinstance(w, ParamTensor) else np.asarray(w, float)
    if norm_adj.shape[1] != h.shape[0] or h.shape[1] != w.shape[0]:
        raise ContractViolationError(
            f"shape chain broken: {norm_adj.shape} @ {h.shape} @ {w.shape}")
    out = norm_adj @ h @ w
    return act(out) if act is not None else out


def _encode_cached(views, norm_adjs, a_star_norm, p: EncoderParams):
    if len(views) != len(norm_adjs) or len(views) != len(p.first_weights):
        raise ContractViolationError("views, adjacencies and weights disagree on V")
    n = views[0].shape[0]
    for x in views:
        if x.shape[0] != n:
            raise ContractViolationError("views disagree on number of samples")
    alpha = softmax(p.view_attention.value.ravel())
    pre1, hid1, pre_fused, fused_terms = [], [], None, []
    for x, adj, w1 in zip(views, norm_adjs, p.first_weights):
        s = adj @ x @ w1.value
        pre1.append(s)
        hid1.append(np.maximum(s, 0.0))
    for adj, z1, w2 in zip(norm_adjs, hid1, p.second_weights):
        fused_terms.append(adj @ z1 @ w2.value)
    pre_fused = sum(a_v * t for a_v, t in zip(alpha, fused_terms))
    hid2 = np.maximum(pre_fused, 0.0)
    z = a_star_norm @ hid2 @ p.final_weight.value
    cache = dict(views=views, norm_adjs=norm_adjs, a_star_norm=a_star_norm,
                 alpha=alpha, pre1=pre1, hid1=hid1, fused_terms=fused_terms,
                 pre_fused=pre_fused, hid2=hid2)
    return z, cache


def encode(views, norm_adjs, a_star_norm, p: EncoderParams) -> np.ndarray:
    """Common representation Z (N x m) from all views plus the consensus graph."""
    z, _ = _encode_cached(views, norm_adjs, a_star_norm, p)
    return z


def encoder_backward(cache, d_z, p: EncoderParams):
    """Accumulate encoder gradients from dLoss/dZ into the grad buffers."""
    a_star_norm = cache["a_star_norm"]
    hid2 = cache["hid2"]
    p.final_weight.grad += (a_star_norm @ hid2).T @ d_z
    d_hid2 = a_star_norm.T @ d_z @ p.final_weight.value.T
    d_pre_fused = d_hid2 * (cache["pre_fused"] > 0)

    alpha = cache["alpha"]
    d_alpha = np.array([float(np.sum(d_pre_fused * t)) for t in cache["fused_terms"]])
    p.view_attention.grad += softmax_backward(alpha, d_alpha)[:, None]

    for v, (adj, z1, w2) in enumerate(zip(cache["norm_adjs"], cache["hid1"],
                                          p.second_weights)):
        d_term = alpha[v] * d_pre_fused
        w2.grad += (adj @ z1).T @ d_term
        d_z1 = adj.T @ d_term @ w2.value.T
        d_pre1 = d_z1 * (cache["pre1"][v] > 0)
        p.first_weights[v].grad += (adj @ cache["views"][v]).T @ d_pre1


def decode_view(z, w) -> np.ndarray:
    """Reconstructed link probabilities sigmoid(Z W Z^T) for one view."""
    w = w.value if isinstance(w, ParamTensor) else np.asarray(w, float)
    if w.shape != (z.shape[1], z.shape[1]):
        raise ContractViolationError(f"decoder weight {w.shape} vs embedding dim {z.shape[1]}")
    return sigmoid(z @ w @ z.T)


def reconstruction_loss(view_graphs, decoded, pos_weight=None) -> float:
    """Sum over views of reweighted per-entry cross-entropy."""
    if len(view_graphs) != len(decoded):
        raise ContractViolationError("graphs vs decoded count mismatch")
    total = 0.0
    for g, pred in zip(view_graphs, decoded):
        target = g.dense() if hasattr(g, "dense") else np.asarray(g, float)
        total += weighted_bce(target, pred, pos_weight)
    return total


def total_loss(l_rec: float, l_mim: float, lambda2: float) -> float:
    return l_rec + lambda2 * l_mim


def reconstruction_backward(z, targets, dec: DecoderParams):
    """Loss plus dLoss/dZ for all decoders; decoder grads are accumulated."""
    d_z = np.zeros_like(z)
    loss = 0.0
    for target, w in zip(targets, dec.weights):
        pred = sigmoid(z @ w.value @ z.T)
        loss += weighted_bce(target, pred, positive_class_weight(target))
        d_pred = weighted_bce_grad(target, pred, positive_class_weight(target))
        d_logits = d_pred * pred * (1.0 - pred)
        w.grad += z.T @ d_logits @ z
        d_z += d_logits @ z @ w.value.T + d_logits.T @ z @ w.value
    return loss, d_z


class MgaeTrainer:
    """Steppable trainer for the auto-encoder, optionally with the MI term.

    The consensus adjacency is passed per step (already renormalized) so a
    jointly-trained fusion network can refresh it between steps.
    """

    def __init__(self, views, norm_adjs, target_graphs, *, m=10, h1=256, h2=64,
                 lambda2=0.0, neighbor_lists=None, lr=1e-3, rng=None,
                 enc_params=None, dec_params=None, disc_params=None):
        rng = np.random.default_rng(rng)
        self.views = [np.asarray(x, float) for x in views]
        self.norm_adjs = [np.asarray(a, float) for a in norm_adjs]
        self.targets = [g.dense() if hasattr(g, "dense") else np.asarray(g, float)
                        for g in target_graphs]
        self.n = self.views[0].shape[0]
        self.lambda2 = lambda2
        self.neighbor_lists = neighbor_lists
        if lambda2 > 0 and neighbor_lists is None:
            raise ContractViolationError("lambda2 > 0 requires neighbor lists")
        init_rng, self.pair_rng = rng.spawn(2)
        dims = [x.shape[1] for x in self.views]
        self.enc = enc_params or EncoderParams.init(dims, h1, h2, m, init_rng)
        self.dec = dec_params or DecoderParams.init(len(dims), m, init_rng)
        self.disc = disc_params or (DiscriminatorParams.init(m, init_rng)
                                    if lambda2 > 0 else None)
        tensors = self.enc.tensors() + self.dec.tensors()
        if self.disc is not None:
            tensors.append(self.disc.bilinear)
        self.opt = Adam(tensors, lr=lr)
        self.epoch = 0
        self.history = []

    def step(self, a_star_norm) -> float:
        z, cache = _encode_cached(self.views, self.norm_adjs, a_star_norm, self.enc)
        l_rec, d_z = reconstruction_backward(z, self.targets, self.dec)
        l_mim = 0.0
        if self.lambda2 > 0:
            batch = sample_pairs(self.neighbor_lists, self.n, self.pair_rng)
            l_mim, d_z_mim, d_b = mim_backward(z, batch, self.disc)
            d_z = d_z + self.lambda2 * d_z_mim
            self.disc.bilinear.grad += self.lambda2 * d_b
        encoder_backward(cache, d_z, self.enc)
        loss = total_loss(l_rec, l_mim, self.lambda2)
        if not np.isfinite(loss):
            raise NumericalError(f"auto-encoder loss diverged at epoch {self.epoch}")
        self.opt.step()
        self.opt.zero_grad()
        self.history.append(float(loss))
        self.epoch += 1
        return float(loss)

    def embedding(self, a_star_norm) -> np.ndarray:
        return encode(self.views, self.norm_adjs, a_star_norm, self.enc)
