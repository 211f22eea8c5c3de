"""Scikit-learn style front door for the whole model.

CMGEC is a clustering estimator over multi-view data: ``fit`` takes a list of
per-view feature arrays (or a MultiViewDataset, which may also carry
attribute graphs) and exposes ``labels_`` plus the learned consensus graph
and common embedding. The ``ablation`` switch selects which components run,
so the reduced variants used in the evaluation harness share this one code
path."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .cluster import accuracy_hungarian, kmeans_pp, normalized_cut, spectral_cut
from .data import prepared_views
from .exceptions import ConfigError
from .gfn import GfnTrainer, gfn_forward, train_gfn
from .graphs import knn_neighbors, normalize_adjacency, snn_neighbors
from .mgae import MgaeTrainer
from .numcore import softmax
from .validation import check_labels, ensure_dataset

ABLATIONS = ("full", "m", "mg", "g", "cgg", "pgs")
_ABLATION_ALIASES = {"m_only": "m"}


def normalize_ablation(name: str) -> str:
    name = _ABLATION_ALIASES.get(name, name)
    if name not in ABLATIONS:
        raise ConfigError(f"unknown ablation {name!r}; expected one of {ABLATIONS}")
    return name


def informative_view_index(graphs, n_clusters: int, labels=None, rng=None) -> int:
    """Pick the view whose graph segments best.

    With reference labels: highest clustering accuracy. Without: lowest
    normalized-cut value of its own segmentation. Ties go to the lowest index.
    """
    if len(graphs) == 1:
        return 0
    rng = np.random.default_rng(rng)
    view_rngs = rng.spawn(len(graphs))
    scores = []
    for g, view_rng in zip(graphs, view_rngs):
        dense = g.dense()
        assign = spectral_cut(dense, n_clusters, rng=view_rng)
        if labels is not None:
            scores.append(accuracy_hungarian(assign, labels))
        else:
            scores.append(-normalized_cut(dense, assign))
    return int(np.argmax(scores))


class CMGEC(ClusterMixin, BaseEstimator):
    """Consensus-graph multi-view clustering.

    Parameters mirror the training configuration: ``m`` is the embedding
    width, ``h1``/``h2`` the encoder widths, ``lambda1`` weights the trace
    penalty of the fusion loss, ``lambda2`` the mutual-information term,
    ``k_g`` sizes the k-NN view graphs and ``k_m`` the positive-pair
    neighborhoods. ``ablation`` selects the component subset: ``full``,
    ``m`` (no MI term), ``mg`` (no MI, no fusion network), ``g`` (MI but no
    fusion network), ``cgg`` (segment the fused graph directly) or ``pgs``
    (segment the best predefined graph). ``joint_mode`` interleaves fusion
    and auto-encoder epochs instead of training them sequentially.

    Attributes after fit: ``labels_``, ``embedding_``, ``consensus_``,
    ``fusion_weights_``, ``view_weights_``, ``gfn_loss_``, ``mgae_loss_``,
    ``informative_view_``.
    """

    def __init__(self, n_clusters=2, m=10, h1=256, h2=64, lambda1=0.01,
                 lambda2=0.001, k_g=10, k_m=3, metric="euclidean",
                 epochs_gfn=200, epochs_mgae=400, q_refresh=5, lr=1e-3,
                 kmeans_restarts=20, ablation="full", joint_mode=False,
                 random_state=None):
        self.n_clusters = n_clusters
        self.m = m
        self.h1 = h1
        self.h2 = h2
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.k_g = k_g
        self.k_m = k_m
        self.metric = metric
        self.epochs_gfn = epochs_gfn
        self.epochs_mgae = epochs_mgae
        self.q_refresh = q_refresh
        self.lr = lr
        self.kmeans_restarts = kmeans_restarts
        self.ablation = ablation
        self.joint_mode = joint_mode
        self.random_state = random_state

    def _check_config(self):
        if self.n_clusters < 1:
            raise ConfigError(f"n_clusters={self.n_clusters} must be >= 1")
        for name in ("m", "h1", "h2", "k_g", "k_m", "epochs_gfn", "epochs_mgae",
                     "q_refresh", "kmeans_restarts"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name}={getattr(self, name)} must be >= 1")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError("lambda1 and lambda2 must be >= 0")
        if self.lr <= 0:
            raise ConfigError(f"lr={self.lr} must be positive")
        return normalize_ablation(self.ablation)

    def _neighbor_lists(self, feats, graphs):
        lists = []
        for x, g in zip(feats, graphs):
            if g.source == "knn_built":
                lists.append(knn_neighbors(x, self.k_m, self.metric))
            else:
                lists.append(snn_neighbors(g, self.k_m))
        return lists

    def fit(self, X, y=None):
        """Learn consensus graph, common embedding and cluster labels.

        y is optional reference labels: used only to pick the most
        informative view in the ablations that bypass the fusion network.
        """
        ablation = self._check_config()
        ds = ensure_dataset(X)
        if y is not None:
            y = check_labels(y, ds.n)
        elif ds.labels is not None:
            y = ds.labels
        c = int(self.n_clusters)
        if c > ds.n:
            raise ConfigError(f"n_clusters={c} exceeds n_samples={ds.n}")

        master = np.random.default_rng(self.random_state)
        rng_gfn, rng_mgae, rng_kmeans, rng_spectral, rng_select = master.spawn(5)
        feats, graphs = prepared_views(ds, k_g=self.k_g, metric=self.metric)

        self.labels_ = None
        self.embedding_ = None
        self.consensus_ = None
        self.fusion_weights_ = None
        self.view_weights_ = None
        self.gfn_loss_ = []
        self.mgae_loss_ = []
        self.informative_view_ = None

        if ablation == "pgs":
            idx = informative_view_index(graphs, c, labels=y, rng=rng_select)
            self.informative_view_ = idx
            self.labels_ = spectral_cut(graphs[idx].dense(), c, rng=rng_spectral,
                                        n_restarts=self.kmeans_restarts).labels
            return self

        if ablation == "cgg":
            cg = train_gfn(graphs, c, lambda1=self.lambda1, epochs=self.epochs_gfn,
                           q_refresh=self.q_refresh, lr=self.lr, rng=rng_gfn,
                           loss_history=self.gfn_loss_)
            self.consensus_ = cg.a_star
            self.labels_ = spectral_cut(cg.a_star, c, rng=rng_spectral,
                                        n_restarts=self.kmeans_restarts).labels
            return self

        use_fusion = ablation in ("full", "m")
        use_mim = ablation in ("full", "g")
        lambda2 = self.lambda2 if use_mim else 0.0
        neighbor_lists = self._neighbor_lists(feats, graphs) if use_mim else None
        norm_adjs = [normalize_adjacency(g) for g in graphs]
        trainer = MgaeTrainer(feats, norm_adjs, graphs, m=self.m, h1=self.h1,
                              h2=self.h2, lambda2=lambda2,
                              neighbor_lists=neighbor_lists, lr=self.lr,
                              rng=rng_mgae)

        if use_fusion:
            gfn_trainer = GfnTrainer(graphs, c, lambda1=self.lambda1,
                                     q_refresh=self.q_refresh, lr=self.lr,
                                     rng=rng_gfn)
            if self.joint_mode:
                a_norm = normalize_adjacency(
                    gfn_forward(graphs, gfn_trainer.params).a_star)
                for epoch in range(max(self.epochs_gfn, self.epochs_mgae)):
                    if epoch < self.epochs_gfn:
                        gfn_trainer.step()
                        a_norm = normalize_adjacency(
                            gfn_forward(graphs, gfn_trainer.params).a_star)
                    if epoch < self.epochs_mgae:
                        trainer.step(a_norm)
                consensus = gfn_forward(graphs, gfn_trainer.params).a_star
            else:
                for _ in range(self.epochs_gfn):
                    gfn_trainer.step()
                consensus = gfn_trainer.consensus().a_star
                a_norm = normalize_adjacency(consensus)
                for _ in range(self.epochs_mgae):
                    trainer.step(a_norm)
            self.gfn_loss_ = gfn_trainer.history
            self.fusion_weights_ = softmax(
                gfn_trainer.params.fusion_attention.value.ravel())
        else:
            idx = informative_view_index(graphs, c, labels=y, rng=rng_select)
            self.informative_view_ = idx
            consensus = graphs[idx].dense()
            a_norm = normalize_adjacency(consensus)
            for _ in range(self.epochs_mgae):
                trainer.step(a_norm)

        self.mgae_loss_ = trainer.history
        self.consensus_ = consensus
        self.view_weights_ = softmax(trainer.enc.view_attention.value.ravel())
        self.embedding_ = trainer.embedding(a_norm)
        self.labels_ = kmeans_pp(self.embedding_, c, rng=rng_kmeans,
                                 n_restarts=self.kmeans_restarts).labels
        return self
