"""Numeric kernel: dense/sparse carriers, eigensolver, Adam, gradient checking.

Everything runs in float64. All public operations guarantee finite outputs;
training code relies on that to detect divergence early instead of chasing
NaNs through the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError, NumericalError

SYM_TOL = 1e-8
PROB_EPS = 1e-7  # clip for probabilities entering log()


def as_matrix(x, name="matrix") -> np.ndarray:
    """Coerce to a finite float64 2-D array."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ContractViolationError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError(f"{name} contains NaN or Inf")
    return a


def check_symmetric(a: np.ndarray, tol: float = SYM_TOL, name="matrix") -> np.ndarray:
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ContractViolationError(f"{name} must be square, got {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) > tol:
        raise ContractViolationError(f"{name} is not symmetric within {tol}")
    return a


@dataclass
class SparseAdjacency:
    """Symmetric nonnegative adjacency stored as coordinate entries.

    Entries are kept in canonical (row-major, deduplicated) order and always
    appear in both (i, j) and (j, i) orientations.
    """

    n: int
    entries: list  # list of (row, col, weight)

    def __post_init__(self):
        seen = {}
        for i, j, w in self.entries:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ContractViolationError(f"entry ({i},{j}) out of range for n={self.n}")
            if w < 0:
                raise ContractViolationError(f"negative weight at ({i},{j}): {w}")
            if (i, j) in seen:
                raise ContractViolationError(f"duplicate coordinate ({i},{j})")
            seen[(i, j)] = float(w)
        for (i, j), w in list(seen.items()):
            if seen.get((j, i)) != w:
                raise ContractViolationError(f"entry ({i},{j}) has no symmetric partner")
        self.entries = [(i, j, seen[(i, j)]) for (i, j) in sorted(seen)]

    @classmethod
    def from_dense(cls, a) -> "SparseAdjacency":
        a = check_symmetric(a, name="adjacency")
        if a.size and a.min() < 0:
            raise ContractViolationError("adjacency has negative weights")
        rows, cols = np.nonzero(a)
        entries = [(int(i), int(j), float(a[i, j])) for i, j in zip(rows, cols)]
        return cls(n=a.shape[0], entries=entries)

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j, w in self.entries:
            a[i, j] = w
        return a

    @property
    def nnz(self) -> int:
        return len(self.entries)


def sym_eig(m, k: int):
    """Eigendecomposition of a symmetric matrix, k smallest pairs.

    Returns (eigenvalues ascending, eigenvectors as n-by-k columns). The
    columns are orthonormal and satisfy m @ v_i == lam_i * v_i.
    """
    m = check_symmetric(m, name="sym_eig input")
    n = m.shape[0]
    if not (1 <= k <= n):
        raise ContractViolationError(f"k={k} outside [1, {n}]")
    try:
        # exact symmetrization keeps LAPACK happy on inputs at the tolerance edge
        w, v = np.linalg.eigh((m + m.T) / 2.0)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"symmetric eigensolver failed to converge: {e}") from e
    return w[:k], v[:, :k]


@dataclass
class ParamTensor:
    """A learnable tensor with its gradient and Adam moment buffers."""

    value: np.ndarray
    grad: np.ndarray = None
    moment1: np.ndarray = None
    moment2: np.ndarray = None
    step_count: int = 0

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.moment1 is None:
            self.moment1 = np.zeros_like(self.value)
        if self.moment2 is None:
            self.moment2 = np.zeros_like(self.value)
        for name in ("grad", "moment1", "moment2"):
            if getattr(self, name).shape != self.value.shape:
                raise ContractViolationError(f"{name} shape {getattr(self, name).shape} != value shape {self.value.shape}")

    def zero_grad(self):
        self.grad.fill(0.0)


def adam_update(p: ParamTensor, lr: float = 1e-3, beta1: float = 0.9,
                beta2: float = 0.999, eps: float = 1e-8) -> ParamTensor:
    """One bias-corrected Adam step, in place. Caller zeroes the grad after."""
    if lr <= 0:
        raise ContractViolationError(f"lr must be positive, got {lr}")
    if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
        raise ContractViolationError(f"betas must lie in [0,1): {beta1}, {beta2}")
    if eps <= 0:
        raise ContractViolationError(f"eps must be positive, got {eps}")
    if p.grad.shape != p.value.shape:
        raise ContractViolationError("grad/value shape mismatch")
    p.step_count += 1
    p.moment1 = beta1 * p.moment1 + (1 - beta1) * p.grad
    p.moment2 = beta2 * p.moment2 + (1 - beta2) * p.grad ** 2
    m_hat = p.moment1 / (1 - beta1 ** p.step_count)
    v_hat = p.moment2 / (1 - beta2 ** p.step_count)
    p.value -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return p


class Adam:
    """Convenience wrapper stepping a collection of ParamTensors together."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self):
        for p in self.params:
            adam_update(p, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


def finite_diff_grad(f, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of an array.

    Used as the independent oracle for every analytic backward pass in the
    package; it must never share code with those passes.
    """
    if h <= 0:
        raise ContractViolationError(f"h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for idx in range(flat.size):
        orig = flat[idx]
        flat[idx] = orig + h
        fp = float(f(x))
        flat[idx] = orig - h
        fm = float(f(x))
        flat[idx] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericalError(f"non-finite function value at probe index {idx}")
        gflat[idx] = (fp - fm) / (2 * h)
    return grad


def sigmoid(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - np.max(x))
    return e / e.sum()


def softmax_backward(alpha: np.ndarray, d_alpha: np.ndarray) -> np.ndarray:
    """Gradient through softmax: d_logits from d_alpha at weights alpha."""
    return alpha * (d_alpha - float(alpha @ d_alpha))


def positive_class_weight(target: np.ndarray) -> float:
    """#zeros / #ones of a binary target; 1.0 when a class is absent."""
    ones = float(np.count_nonzero(target))
    zeros = target.size - ones
    if ones == 0 or zeros == 0:
        return 1.0
    return zeros / ones


def weighted_bce(target: np.ndarray, pred: np.ndarray, pos_weight=None) -> float:
    """Per-entry mean binary cross-entropy with positive-class reweighting.

    pos_weight=None derives the weight from the target; pass 1.0 to disable
    reweighting. pred is clipped to [PROB_EPS, 1-PROB_EPS] before the logs.
    """
    if target.shape != pred.shape:
        raise ContractViolationError(f"target {target.shape} vs pred {pred.shape}")
    if pos_weight is None:
        pos_weight = positive_class_weight(target)
    p = np.clip(pred, PROB_EPS, 1 - PROB_EPS)
    loss = -(pos_weight * target * np.log(p) + (1 - target) * np.log1p(-p))
    return float(loss.mean())


def weighted_bce_grad(target: np.ndarray, pred: np.ndarray, pos_weight=None) -> np.ndarray:
    """d(weighted_bce)/d(pred); zero where the clip is active."""
    if pos_weight is None:
        pos_weight = positive_class_weight(target)
    p = np.clip(pred, PROB_EPS, 1 - PROB_EPS)
    g = (-pos_weight * target / p + (1 - target) / (1 - p)) / pred.size
    g[(pred < PROB_EPS) | (pred > 1 - PROB_EPS)] = 0.0
    return g
