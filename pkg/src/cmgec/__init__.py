"""Consensus-graph multi-view clustering.

Fuses per-view graphs into a consensus adjacency, embeds all views with a
multi-graph attention auto-encoder regularized by neighbor mutual
information, and clusters the common representation with k-means++.
"""

from .cluster import (
    ClusterAssignment,
    MetricsReport,
    accuracy_hungarian,
    evaluate,
    f1_macro,
    info_metrics,
    kmeans_pp,
    spectral_cut,
)
from .data import MultiViewDataset, View, load_dataset, make_blobs_multiview, save_dataset
from .estimator import CMGEC
from .gfn import ConsensusGraph, train_gfn
from .graphs import ViewGraph, build_knn_graph, laplacian, normalize_adjacency, snn_neighbors
from .pipeline import TrainConfig, emit_report, read_report, run

__all__ = [
    "CMGEC",
    "ClusterAssignment",
    "ConsensusGraph",
    "MetricsReport",
    "MultiViewDataset",
    "TrainConfig",
    "View",
    "ViewGraph",
    "accuracy_hungarian",
    "build_knn_graph",
    "emit_report",
    "evaluate",
    "f1_macro",
    "info_metrics",
    "kmeans_pp",
    "laplacian",
    "load_dataset",
    "make_blobs_multiview",
    "normalize_adjacency",
    "read_report",
    "run",
    "save_dataset",
    "snn_neighbors",
    "spectral_cut",
    "train_gfn",
]

__version__ = "0.1.0"
