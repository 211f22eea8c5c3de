import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmgec.exceptions import ContractViolationError
from cmgec.graphs import (
    build_knn_graph,
    knn_neighbors,
    laplacian,
    normalize_adjacency,
    snn_neighbors,
)

from conftest import graph_from_dense, random_binary_graph


class TestBuildKnn:
    def test_collinear_equidistant_points_form_path(self):
        # nodes at 0, 1, 2 on a line; ties resolve to the lower index
        feats = np.array([[0.0], [1.0], [2.0]])
        g = build_knn_graph(feats, 1)
        expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
        np.testing.assert_array_equal(g.dense(), expected)
        assert g.source == "knn_built"

    def test_two_points_single_edge(self):
        g = build_knn_graph(np.array([[0.0], [5.0]]), 1)
        np.testing.assert_array_equal(g.dense(), [[0, 1], [1, 0]])

    def test_identical_views_identical_graphs(self, rng):
        feats = rng.normal(size=(12, 3))
        g1 = build_knn_graph(feats, 3)
        g2 = build_knn_graph(feats.copy(), 3)
        np.testing.assert_array_equal(g1.dense(), g2.dense())

    def test_rejects_large_k(self):
        with pytest.raises(ContractViolationError):
            build_knn_graph(np.zeros((3, 2)), 3)

    def test_binary_symmetric_zero_diagonal(self, rng):
        g = build_knn_graph(rng.normal(size=(15, 4)), 4).dense()
        assert set(np.unique(g)) <= {0.0, 1.0}
        np.testing.assert_array_equal(g, g.T)
        assert np.all(np.diag(g) == 0)

    def test_each_node_keeps_at_least_k_edges(self, rng):
        k = 5
        g = build_knn_graph(rng.normal(size=(20, 3)), k).dense()
        assert np.all(g.sum(axis=1) >= k)

    def test_permutation_equivariance(self, rng):
        feats = rng.normal(size=(14, 3))  # continuous features: no distance ties
        perm = rng.permutation(14)
        g = build_knn_graph(feats, 3).dense()
        g_perm = build_knn_graph(feats[perm], 3).dense()
        np.testing.assert_array_equal(g_perm, g[np.ix_(perm, perm)])

    def test_cosine_metric(self):
        # direction matters, magnitude does not
        feats = np.array([[1.0, 0.0], [10.0, 0.1], [0.0, 1.0], [0.05, 8.0]])
        g = build_knn_graph(feats, 1, metric="cosine").dense()
        assert g[0, 1] == 1 and g[2, 3] == 1
        assert g[0, 2] == 0 and g[0, 3] == 0


def brute_force_snn(adj):
    """Similarity by definition: common-neighbor count for adjacent pairs."""
    n = adj.shape[0]
    nbrs = [set(np.nonzero(adj[i])[0]) for i in range(n)]
    sim = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j and adj[i, j] > 0:
                sim[i, j] = len((nbrs[i] - {i, j}) & (nbrs[j] - {i, j}))
    return sim


class TestSnnNeighbors:
    def test_path_non_adjacent_pair_excluded(self):
        g = graph_from_dense([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        lists = snn_neighbors(g, 2)
        assert [j for j, _ in lists[0]] == [1]       # c is not adjacent to a
        assert lists[0][0][1] == 0.0                 # N(a) & N(b) = {} after self-exclusion

    def test_triangle_similarity_one(self):
        g = graph_from_dense(np.ones((3, 3)) - np.eye(3))
        lists = snn_neighbors(g, 3)
        for i in range(3):
            assert {j for j, _ in lists[i]} == {0, 1, 2} - {i}
            assert all(s == 1.0 for _, s in lists[i])

    def test_star_center_leaf_zero(self):
        star = np.zeros((5, 5))
        star[0, 1:] = 1.0
        star[1:, 0] = 1.0
        lists = snn_neighbors(graph_from_dense(star), 2)
        assert all(s == 0.0 for _, s in lists[0])
        # leaves share no neighbors with the center besides themselves
        for i in range(1, 5):
            assert lists[i] == [(0, 0.0)]

    def test_matches_brute_force_and_symmetry(self, rng):
        g = random_binary_graph(10, rng)
        sim = brute_force_snn(g.dense())
        np.testing.assert_array_equal(sim, sim.T)
        lists = snn_neighbors(g, 3)
        for i, entries in enumerate(lists):
            for j, s in entries:
                assert s == sim[i, j]
            # top-k_m by similarity, ties by lower id
            adj_js = sorted(np.nonzero(g.dense()[i])[0], key=lambda j: (-sim[i, j], j))
            assert [j for j, _ in entries] == [int(j) for j in adj_js[:3]]

    def test_knn_neighbor_lists_sorted_and_self_free(self, rng):
        feats = rng.normal(size=(9, 4))
        lists = knn_neighbors(feats, 3)
        for i, entries in enumerate(lists):
            assert len(entries) == 3
            assert all(j != i for j, _ in entries)
            sims = [s for _, s in entries]
            assert sims == sorted(sims, reverse=True)
            assert all(s >= 0 for s in sims)


class TestNormalizeAdjacency:
    def test_empty_graph_gives_identity(self):
        g = graph_from_dense(np.zeros((4, 4)))
        np.testing.assert_allclose(normalize_adjacency(g), np.eye(4), atol=1e-15)

    def test_single_edge_two_nodes(self):
        # augmented degrees are (2, 2), so every entry becomes 1/2
        g = graph_from_dense([[0, 1], [1, 0]])
        np.testing.assert_allclose(normalize_adjacency(g), np.full((2, 2), 0.5), atol=1e-15)

    def test_permutation_equivariance(self, rng):
        g = random_binary_graph(8, rng)
        perm = rng.permutation(8)
        base = normalize_adjacency(g)
        permuted = normalize_adjacency(graph_from_dense(g.dense()[np.ix_(perm, perm)]))
        np.testing.assert_allclose(permuted, base[np.ix_(perm, perm)], atol=1e-12)

    def test_symmetric_nonnegative(self, rng):
        out = normalize_adjacency(random_binary_graph(9, rng))
        np.testing.assert_allclose(out, out.T, atol=1e-15)
        assert out.min() >= 0


def connected_components_union_find(adj):
    n = adj.shape[0]
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in zip(*np.nonzero(adj)):
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[ri] = rj
    return len({find(i) for i in range(n)})


class TestLaplacian:
    def test_zero_matrix(self):
        np.testing.assert_array_equal(laplacian(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_triangle_spectrum(self):
        # complete graph on 3 nodes: eigenvalues {0, 3, 3} by hand
        lap = laplacian(np.ones((3, 3)) - np.eye(3))
        np.testing.assert_allclose(np.linalg.eigvalsh(lap), [0.0, 3.0, 3.0], atol=1e-12)

    def test_row_sums_zero_and_psd(self, rng):
        a = random_binary_graph(10, rng).dense() * rng.random((10, 10))
        a = (a + a.T) / 2
        lap = laplacian(a)
        np.testing.assert_allclose(lap.sum(axis=1), 0.0, atol=1e-10)
        assert np.linalg.eigvalsh(lap).min() >= -1e-10

    def test_rejects_asymmetric(self):
        with pytest.raises(ContractViolationError):
            laplacian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    @given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_zero_eigenvalue_multiplicity_counts_components(self, n, seed):
        rng = np.random.default_rng(seed)
        a = (rng.random((n, n)) < 0.3).astype(float)
        a = np.maximum(a, a.T)
        np.fill_diagonal(a, 0.0)
        eigs = np.linalg.eigvalsh(laplacian(a))
        n_zero = int(np.sum(np.abs(eigs) < 1e-8))
        assert n_zero == connected_components_union_find(a)
