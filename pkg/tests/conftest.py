import numpy as np
import pytest

from cmgec.graphs import ViewGraph
from cmgec.numcore import SparseAdjacency, finite_diff_grad


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def graph_from_dense(a) -> ViewGraph:
    a = np.asarray(a, dtype=float)
    np.fill_diagonal(a, 0.0)
    return ViewGraph(SparseAdjacency.from_dense(a), source="provided")


def random_binary_graph(n, rng, p=0.4) -> ViewGraph:
    a = (rng.random((n, n)) < p).astype(float)
    a = np.maximum(a, a.T)
    np.fill_diagonal(a, 0.0)
    return graph_from_dense(a)


def relative_error(analytic, numeric) -> float:
    denom = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric)) / denom)


def check_grad(loss_fn, tensor, tol=1e-4, h=1e-6):
    """Compare a ParamTensor's accumulated grad with central differences."""
    def probe(values):
        old = tensor.value.copy()
        tensor.value[...] = values
        out = loss_fn()
        tensor.value[...] = old
        return out

    numeric = finite_diff_grad(probe, tensor.value.copy(), h=h)
    err = relative_error(tensor.grad, numeric)
    assert err <= tol, f"gradient mismatch: relative error {err:.3e}"
    return err
