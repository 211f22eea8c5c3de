"""Multi-seed evaluation harness around the estimator, plus report I/O.

``run`` executes the configured ablation once per seed (seed, seed+1, ...),
scores each run against the dataset labels, and aggregates mean/std per
metric. ``emit_report`` writes the whole thing, config echo and loss curves
included, as JSON.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cluster import MetricsReport, evaluate
from .data import MultiViewDataset, prepared_views
from .estimator import CMGEC, informative_view_index, normalize_ablation
from .exceptions import ConfigError


@dataclass
class TrainConfig:
    m: int = 10
    lambda1: float = 0.01
    lambda2: float = 0.001
    k_g: int = 10
    k_m: int = 3
    h1: int = 256
    h2: int = 64
    epochs_gfn: int = 200
    epochs_mgae: int = 400
    q_refresh: int = 5
    lr: float = 1e-3
    seed: int = 0
    runs: int = 10
    ablation: str = "full"
    joint_mode: bool = False
    metric: str = "euclidean"
    kmeans_restarts: int = 20
    cluster_count: int = None

    def validate(self) -> "TrainConfig":
        normalize_ablation(self.ablation)
        for name in ("m", "k_g", "k_m", "h1", "h2", "epochs_gfn", "epochs_mgae",
                     "q_refresh", "runs", "kmeans_restarts"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name}={getattr(self, name)} must be >= 1")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError("lambda1 and lambda2 must be >= 0")
        if self.lr <= 0:
            raise ConfigError(f"lr={self.lr} must be positive")
        if self.metric not in ("euclidean", "cosine"):
            raise ConfigError(f"metric={self.metric!r} must be euclidean or cosine")
        return self

    def estimator(self, n_clusters: int, seed: int) -> CMGEC:
        return CMGEC(n_clusters=n_clusters, m=self.m, h1=self.h1, h2=self.h2,
                     lambda1=self.lambda1, lambda2=self.lambda2, k_g=self.k_g,
                     k_m=self.k_m, metric=self.metric, epochs_gfn=self.epochs_gfn,
                     epochs_mgae=self.epochs_mgae, q_refresh=self.q_refresh,
                     lr=self.lr, kmeans_restarts=self.kmeans_restarts,
                     ablation=self.ablation, joint_mode=self.joint_mode,
                     random_state=seed)


@dataclass
class RunReport:
    config: dict
    dataset: dict
    metrics: MetricsReport
    seeds: list
    loss_curves: dict          # per-seed {"gfn": [...], "mgae": [...]}
    wall_clock_sec: float
    embedding: np.ndarray = None
    consensus: np.ndarray = None
    per_run_labels: list = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "dataset": self.dataset,
            "seeds": self.seeds,
            "metrics": self.metrics.to_dict(),
            "loss_curves": self.loss_curves,
            "wall_clock_sec": self.wall_clock_sec,
        }


def resolve_cluster_count(cfg: TrainConfig, ds: MultiViewDataset) -> int:
    if ds.labels is not None:
        return int(len(np.unique(ds.labels)))
    if cfg.cluster_count:
        return int(cfg.cluster_count)
    if ds.cluster_count:
        return int(ds.cluster_count)
    raise ConfigError("cluster count required: dataset has no labels and no "
                      "cluster_count was configured")


def select_informative_view(ds: MultiViewDataset, cfg: TrainConfig) -> int:
    """Deterministic index of the view whose graph segments best (see estimator)."""
    cfg.validate()
    c = resolve_cluster_count(cfg, ds)
    _, graphs = prepared_views(ds, k_g=cfg.k_g, metric=cfg.metric)
    rng = np.random.default_rng(cfg.seed)
    return informative_view_index(graphs, c, labels=ds.labels, rng=rng)


def run(cfg: TrainConfig, ds: MultiViewDataset) -> RunReport:
    """Execute cfg.runs seeded runs and aggregate the metric suite."""
    cfg.validate()
    c = resolve_cluster_count(cfg, ds)
    start = time.perf_counter()
    seeds = [cfg.seed + i for i in range(cfg.runs)]
    per_run, labels_per_run, curves = [], [], {"gfn": [], "mgae": []}
    embedding = consensus = None
    for seed in seeds:
        model = cfg.estimator(c, seed).fit(ds)
        labels_per_run.append(model.labels_.copy())
        curves["gfn"].append(list(model.gfn_loss_))
        curves["mgae"].append(list(model.mgae_loss_))
        if seed == seeds[0]:
            embedding = model.embedding_
            consensus = model.consensus_
        if ds.labels is not None:
            per_run.append(evaluate(model.labels_, ds.labels))
    metrics = MetricsReport.from_runs(per_run)
    wall = time.perf_counter() - start
    return RunReport(
        config=dataclasses.asdict(cfg),
        dataset={"n": ds.n, "v": ds.v, "kind": ds.kind, "n_clusters": c,
                 "has_labels": ds.labels is not None},
        metrics=metrics,
        seeds=seeds,
        loss_curves=curves,
        wall_clock_sec=wall,
        embedding=embedding,
        consensus=consensus,
        per_run_labels=labels_per_run,
    )


def emit_report(report: RunReport, path) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2))
    return path


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())


def export_matrix_csv(matrix: np.ndarray, path) -> Path:
    """Dense CSV with 17 significant digits (lossless float64 round-trip)."""
    path = Path(path)
    np.savetxt(path, np.asarray(matrix, dtype=np.float64), delimiter=",",
               fmt="%.17g")
    return path
