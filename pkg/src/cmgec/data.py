"""Dataset container, directory format, and synthetic data generation.

A dataset directory holds ``manifest.json`` plus CSV files::

    manifest.json   {"n": ..., "v": ..., "kind": ..., "cluster_count": ...,
                     "views": [{"features_csv": ..., "graph_csv": ...}, ...],
                     "labels_csv": ...}
    features CSV    N rows x d_v decimal columns
    graph CSV       one edge per line as "i,j,weight" (0-based node ids)
    labels CSV      N integers, one per line

Three dataset kinds map onto the model's inputs: feature-only views get
k-NN graphs built on demand; a shared attribute graph is copied to every
feature view; a single feature matrix is copied to every attribute graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ContractViolationError, DataError
from .graphs import ViewGraph, build_knn_graph
from .numcore import SparseAdjacency

KINDS = ("features_only", "features_plus_shared_graph", "single_features_multi_graph")


@dataclass
class View:
    features: np.ndarray = None
    graph: ViewGraph = None


@dataclass
class MultiViewDataset:
    views: list              # of View
    kind: str
    labels: np.ndarray = None
    cluster_count: int = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown dataset kind {self.kind!r}")
        if not self.views:
            raise DataError("dataset has no views")
        sizes = {v.features.shape[0] for v in self.views if v.features is not None}
        sizes |= {v.graph.n for v in self.views if v.graph is not None}
        if len(sizes) != 1:
            raise DataError(f"views disagree on sample count: {sorted(sizes)}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.intp).reshape(-1)
            if self.labels.size != self.n:
                raise DataError(f"labels length {self.labels.size} != n {self.n}")

    @property
    def n(self) -> int:
        v = self.views[0]
        return v.features.shape[0] if v.features is not None else v.graph.n

    @property
    def v(self) -> int:
        return len(self.views)

    def n_clusters(self) -> int:
        if self.labels is not None:
            return int(len(np.unique(self.labels)))
        if self.cluster_count:
            return int(self.cluster_count)
        raise ContractViolationError("cluster count unknown: no labels and no cluster_count")


def minmax_scale(x: np.ndarray) -> np.ndarray:
    """Per-feature scaling to [0, 1]; constant features map to 0."""
    x = np.asarray(x, dtype=np.float64)
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    return (x - lo) / np.where(span > 0, span, 1.0)


def prepared_views(ds: MultiViewDataset, k_g: int = 10, metric: str = "euclidean",
                   scale: bool = True):
    """Resolve every view to a (features, graph) pair per the dataset kind."""
    feats = [v.features for v in ds.views]
    graphs = [v.graph for v in ds.views]
    if ds.kind == "features_only":
        feats = [minmax_scale(x) if scale else x for x in feats]
        graphs = [g if g is not None else build_knn_graph(x, k_g, metric)
                  for x, g in zip(feats, graphs)]
    else:
        feats = [minmax_scale(x) if scale else x for x in feats]
    if any(x is None for x in feats) or any(g is None for g in graphs):
        raise DataError(f"kind {ds.kind!r} has unresolved views")
    return feats, graphs


def _read_csv_matrix(path: Path) -> np.ndarray:
    try:
        m = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except Exception as e:
        raise DataError(f"cannot parse features file {path}: {e}") from e
    if not np.all(np.isfinite(m)):
        raise DataError(f"non-finite values in {path}")
    return m


def _read_edge_list(path: Path, n: int) -> ViewGraph:
    adj = np.zeros((n, n))
    try:
        raw = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except Exception as e:
        raise DataError(f"cannot parse graph file {path}: {e}") from e
    if raw.size == 0:
        return ViewGraph(SparseAdjacency(n, []), source="provided")
    if raw.shape[1] != 3:
        raise DataError(f"graph file {path} must have rows 'i,j,weight'")
    for i, j, w in raw:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise DataError(f"node id out of range in {path}: ({i},{j})")
        if w < 0:
            raise DataError(f"negative edge weight in {path}: ({i},{j},{w})")
        if i == j:
            continue  # self-loops are dropped; normalization re-adds them
        adj[i, j] = w
        adj[j, i] = w
    return ViewGraph(SparseAdjacency.from_dense(adj), source="provided")


def _read_labels(path: Path, n: int) -> np.ndarray:
    try:
        labels = np.loadtxt(path, dtype=np.int64, ndmin=1)
    except Exception as e:
        raise DataError(f"cannot parse labels file {path}: {e}") from e
    if labels.size != n:
        raise DataError(f"labels file {path} has {labels.size} entries, expected {n}")
    # compact to [0, c)
    _, inv = np.unique(labels, return_inverse=True)
    return inv


def load_dataset(path) -> MultiViewDataset:
    """Read and validate a dataset directory."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise DataError(f"missing manifest file {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"manifest {manifest_path} is not valid JSON: {e}") from e
    for key in ("n", "v", "kind", "views"):
        if key not in manifest:
            raise DataError(f"manifest {manifest_path} lacks required key {key!r}")
    n, v, kind = manifest["n"], manifest["v"], manifest["kind"]
    if kind not in KINDS:
        raise DataError(f"manifest {manifest_path} has unknown kind {kind!r}")
    if len(manifest["views"]) != v:
        raise DataError(f"manifest declares v={v} but lists {len(manifest['views'])} views")

    views = []
    for entry in manifest["views"]:
        feats = graph = None
        if entry.get("features_csv"):
            feats = _read_csv_matrix(root / entry["features_csv"])
            if feats.shape[0] != n:
                raise DataError(
                    f"{root / entry['features_csv']} has {feats.shape[0]} rows, expected {n}")
        if entry.get("graph_csv"):
            graph = _read_edge_list(root / entry["graph_csv"], n)
        views.append(View(features=feats, graph=graph))

    if kind == "features_only":
        if any(view.features is None for view in views):
            raise DataError("features_only dataset: every view needs features_csv")
    elif kind == "features_plus_shared_graph":
        provided = [view.graph for view in views if view.graph is not None]
        if not provided:
            raise DataError("shared-graph dataset: no graph_csv found in any view")
        dense0 = provided[0].dense()
        if any(not np.array_equal(g.dense(), dense0) for g in provided[1:]):
            raise DataError("shared-graph dataset: provided graphs differ across views")
        if any(view.features is None for view in views):
            raise DataError("shared-graph dataset: every view needs features_csv")
        for view in views:  # copy the common graph V times
            view.graph = ViewGraph(SparseAdjacency.from_dense(dense0), source="provided")
    else:  # single_features_multi_graph
        provided = [view.features for view in views if view.features is not None]
        if not provided:
            raise DataError("multi-graph dataset: no features_csv found in any view")
        if any(not np.array_equal(x, provided[0]) for x in provided[1:]):
            raise DataError("multi-graph dataset: provided feature matrices differ")
        if any(view.graph is None for view in views):
            raise DataError("multi-graph dataset: every view needs graph_csv")
        for view in views:  # copy the single feature matrix V times
            view.features = provided[0].copy()

    labels = None
    if manifest.get("labels_csv"):
        labels = _read_labels(root / manifest["labels_csv"], n)
    ds = MultiViewDataset(views=views, kind=kind, labels=labels,
                          cluster_count=manifest.get("cluster_count"))
    if ds.n != n:
        raise DataError(f"manifest declares n={n} but files contain {ds.n} samples")
    return ds


def save_dataset(ds: MultiViewDataset, path) -> Path:
    """Write a dataset directory in the manifest format. Returns the directory."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    views_meta = []
    for i, view in enumerate(ds.views):
        meta = {}
        if view.features is not None:
            name = f"view{i}_features.csv"
            np.savetxt(root / name, view.features, delimiter=",", fmt="%.17g")
            meta["features_csv"] = name
        if view.graph is not None:
            name = f"view{i}_graph.csv"
            with open(root / name, "w") as fh:
                for a, b, w in view.graph.adjacency.entries:
                    if a < b:
                        fh.write(f"{a},{b},{w:.17g}\n")
            meta["graph_csv"] = name
        views_meta.append(meta)
    manifest = {"n": ds.n, "v": ds.v, "kind": ds.kind, "views": views_meta}
    if ds.cluster_count:
        manifest["cluster_count"] = int(ds.cluster_count)
    if ds.labels is not None:
        np.savetxt(root / "labels.csv", ds.labels, fmt="%d")
        manifest["labels_csv"] = "labels.csv"
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return root


def make_blobs_multiview(n: int, n_clusters: int, n_views: int, *, dim: int = 5,
                         separation: float = 10.0, noise=0.0,
                         rng=None) -> MultiViewDataset:
    """Gaussian blobs observed through several views.

    Cluster centers in each view are placed with minimum pairwise distance
    ``separation`` (unit within-cluster sigma). ``noise`` adds extra isotropic
    feature noise, either one float for all views or one per view.
    """
    if n_clusters < 1 or n_views < 1 or n < n_clusters:
        raise ContractViolationError("need n >= n_clusters >= 1 and n_views >= 1")
    rng = np.random.default_rng(rng)
    noise = np.broadcast_to(np.asarray(noise, dtype=np.float64), (n_views,))
    sizes = np.full(n_clusters, n // n_clusters)
    sizes[: n % n_clusters] += 1
    labels = np.repeat(np.arange(n_clusters), sizes)
    views = []
    for v in range(n_views):
        centers = rng.normal(size=(n_clusters, dim))
        if n_clusters > 1:
            diffs = centers[:, None, :] - centers[None, :, :]
            d = np.sqrt((diffs ** 2).sum(-1))
            min_d = d[~np.eye(n_clusters, dtype=bool)].min()
            centers *= separation / min_d
        x = centers[labels] + rng.normal(size=(n, dim))
        if noise[v] > 0:
            x = x + rng.normal(scale=noise[v], size=x.shape)
        views.append(View(features=x))
    return MultiViewDataset(views=views, kind="features_only", labels=labels,
                            cluster_count=n_clusters)
