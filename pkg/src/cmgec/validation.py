"""Input validation helpers for the estimator front door."""

from __future__ import annotations

import numpy as np

from .data import MultiViewDataset, View
from .exceptions import ContractViolationError


def check_views(X) -> list:
    """Validate a multi-view input: a nonempty list of 2-D arrays sharing N."""
    if isinstance(X, np.ndarray) and X.ndim == 2:
        X = [X]
    if not isinstance(X, (list, tuple)) or len(X) == 0:
        raise ContractViolationError(
            "expected a list of per-view feature arrays or a MultiViewDataset")
    views = []
    for i, x in enumerate(X):
        a = np.asarray(x, dtype=np.float64)
        if a.ndim != 2:
            raise ContractViolationError(f"view {i} must be 2-D, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ContractViolationError(f"view {i} contains NaN or Inf")
        views.append(a)
    n = views[0].shape[0]
    for i, a in enumerate(views):
        if a.shape[0] != n:
            raise ContractViolationError(
                f"view {i} has {a.shape[0]} samples, view 0 has {n}")
    return views


def ensure_dataset(X) -> MultiViewDataset:
    """Accept a MultiViewDataset as-is; wrap feature arrays as a feature-only one."""
    if isinstance(X, MultiViewDataset):
        return X
    views = check_views(X)
    return MultiViewDataset(views=[View(features=x) for x in views],
                            kind="features_only")


def check_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y).reshape(-1)
    if y.size != n:
        raise ContractViolationError(f"labels length {y.size} != n_samples {n}")
    _, inv = np.unique(y, return_inverse=True)
    return inv
