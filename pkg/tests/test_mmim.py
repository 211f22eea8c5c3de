import numpy as np
import pytest

from cmgec.exceptions import ContractViolationError
from cmgec.mmim import (
    DiscriminatorParams,
    PairBatch,
    discriminator_score,
    mim_backward,
    mim_loss,
    pair_scores,
    sample_pairs,
)
from cmgec.numcore import Adam, ParamTensor, finite_diff_grad, sigmoid

from conftest import check_grad, relative_error


def ring_neighbor_lists(n, k):
    """Each node's neighbors are the next k nodes around a ring."""
    return [[[(int((i + d) % n), 1.0) for d in range(1, k + 1)] for i in range(n)]]


class TestSamplePairs:
    def test_counts(self):
        lists = ring_neighbor_lists(5, 2)
        batch = sample_pairs(lists, 5, np.random.default_rng(0))
        assert len(batch.positives) == 10
        assert len(batch.negatives) == 10

    def test_deterministic_given_seed(self):
        lists = ring_neighbor_lists(7, 2)
        b1 = sample_pairs(lists, 7, np.random.default_rng(9))
        b2 = sample_pairs(lists, 7, np.random.default_rng(9))
        np.testing.assert_array_equal(b1.positives, b2.positives)
        np.testing.assert_array_equal(b1.negatives, b2.negatives)
        np.testing.assert_array_equal(b1.view_of_origin, b2.view_of_origin)

    def test_negatives_are_non_neighbors(self, rng):
        # brute-force membership validation against the originating view
        lists = [
            [[(int(j), 1.0) for j in rng.choice(10, size=3, replace=False) if j != i][:2]
             for i in range(10)],
            ring_neighbor_lists(10, 3)[0],
        ]
        batch = sample_pairs(lists, 10, rng)
        for (i, j), (i2, jn), v in zip(batch.positives, batch.negatives,
                                       batch.view_of_origin):
            assert i == i2
            neighbors = {node for node, _ in lists[v][i]}
            assert j in neighbors
            assert jn != i and jn not in neighbors

    def test_isolated_node_contributes_nothing(self):
        lists = [[[] , [(0, 1.0)], [(1, 1.0)]]]
        batch = sample_pairs(lists, 3, np.random.default_rng(0))
        assert all(i != 0 for i, _ in batch.positives)

    def test_rejects_self_pairs(self):
        with pytest.raises(ContractViolationError):
            PairBatch(np.array([[1, 1]]), np.array([[1, 2]]), np.array([0]))


class TestDiscriminator:
    def test_zero_embedding_scores_half(self, rng):
        z = np.zeros((4, 3))
        p = DiscriminatorParams.init(3, rng)
        assert discriminator_score(z, (0, 1), p) == 0.5

    def test_identity_bilinear_norm_five(self):
        z = np.zeros((2, 5))
        z[0] = z[1] = np.sqrt(np.array([1.0, 1.0, 1.0, 1.0, 1.0]))
        p = DiscriminatorParams(ParamTensor(np.eye(5)))
        score = discriminator_score(z, (0, 1), p)
        assert abs(score - sigmoid(5.0)) < 1e-12
        assert abs(score - 0.9933) < 1e-4

    def test_symmetric_bilinear_symmetric_score(self, rng):
        z = rng.normal(size=(5, 4))
        w = rng.normal(size=(4, 4))
        p = DiscriminatorParams(ParamTensor((w + w.T) / 2))
        assert abs(discriminator_score(z, (1, 3), p)
                   - discriminator_score(z, (3, 1), p)) < 1e-12


class TestMimLoss:
    def test_uniform_scores_give_two_ln_two(self):
        z = np.zeros((6, 3))
        p = DiscriminatorParams.init(3, np.random.default_rng(0))
        batch = PairBatch(np.array([[0, 1], [2, 3]]), np.array([[0, 4], [2, 5]]),
                          np.array([0, 0]))
        assert abs(mim_loss(z, batch, p) - 2 * np.log(2)) < 1e-12

    def test_saturated_discriminator_near_zero(self):
        z = np.zeros((4, 2))
        z[0] = z[1] = [30.0, 0.0]
        z[2] = [30.0, 0.0]
        z[3] = [-30.0, 0.0]
        p = DiscriminatorParams(ParamTensor(np.eye(2)))
        batch = PairBatch(np.array([[0, 1]]), np.array([[2, 3]]), np.array([0]))
        assert mim_loss(z, batch, p) < 1e-5

    def test_matches_naive_per_pair_oracle(self, rng):
        z = rng.normal(size=(8, 4))
        p = DiscriminatorParams.init(4, rng)
        pos = np.array([[0, 1], [2, 3], [4, 5]])
        neg = np.array([[0, 6], [2, 7], [4, 1]])
        batch = PairBatch(pos, neg, np.zeros(3, dtype=int))
        naive = 0.0
        for i, j in pos:
            rho = 1.0 / (1.0 + np.exp(-float(z[i] @ p.bilinear.value @ z[j])))
            naive -= np.log(min(max(rho, 1e-7), 1 - 1e-7)) / len(pos)
        for i, j in neg:
            rho = 1.0 / (1.0 + np.exp(-float(z[i] @ p.bilinear.value @ z[j])))
            naive -= np.log(1 - min(max(rho, 1e-7), 1 - 1e-7)) / len(neg)
        assert abs(mim_loss(z, batch, p) - naive) < 1e-12

    def test_rejects_empty_batch(self, rng):
        z = rng.normal(size=(4, 2))
        p = DiscriminatorParams.init(2, rng)
        empty = PairBatch(np.empty((0, 2)), np.empty((0, 2)), np.empty(0))
        with pytest.raises(ContractViolationError):
            mim_loss(z, empty, p)


class TestGradients:
    def test_embedding_and_bilinear_grads(self, rng):
        z = rng.normal(size=(7, 3))
        p = DiscriminatorParams.init(3, rng)
        batch = sample_pairs(ring_neighbor_lists(7, 2), 7, rng)
        _, d_z, d_b = mim_backward(z, batch, p)

        numeric_z = finite_diff_grad(lambda zz: mim_loss(zz, batch, p), z.copy())
        assert relative_error(d_z, numeric_z) <= 1e-4

        p.bilinear.grad += d_b
        check_grad(lambda: mim_loss(z, batch, p), p.bilinear, tol=1e-4)


class TestOptimizationDynamics:
    def _toy(self):
        # duplicated embeddings: positives are exact copies, so separation is learnable
        rng = np.random.default_rng(2)
        base = rng.normal(size=(5, 3))
        z = np.vstack([base, base])
        pos = np.array([[i, i + 5] for i in range(5)])
        neg = np.array([[i, (i + 2) % 5] for i in range(5)])
        batch = PairBatch(pos, neg, np.zeros(5, dtype=int))
        return z, batch, rng

    def test_loss_decreases_over_200_steps(self):
        z, batch, rng = self._toy()
        z_param = ParamTensor(z)
        disc = DiscriminatorParams.init(3, rng)
        opt = Adam([z_param, disc.bilinear], lr=1e-2)
        first = None
        for step in range(200):
            loss, d_z, d_b = mim_backward(z_param.value, batch, disc)
            if first is None:
                first = loss
            assert np.isfinite(loss)
            z_param.grad += d_z
            disc.bilinear.grad += d_b
            opt.step()
            opt.zero_grad()
        final = mim_loss(z_param.value, batch, disc)
        assert final < first

    def test_scores_separate_monotonically_at_checkpoints(self):
        z, batch, rng = self._toy()
        z_param = ParamTensor(z)
        disc = DiscriminatorParams.init(3, rng)
        opt = Adam([z_param, disc.bilinear], lr=1e-2)
        pos_means, neg_means = [], []
        for step in range(200):
            if step % 10 == 0:
                pos_means.append(pair_scores(z_param.value, batch.positives, disc).mean())
                neg_means.append(pair_scores(z_param.value, batch.negatives, disc).mean())
            _, d_z, d_b = mim_backward(z_param.value, batch, disc)
            z_param.grad += d_z
            disc.bilinear.grad += d_b
            opt.step()
            opt.zero_grad()
        assert all(b >= a - 1e-9 for a, b in zip(pos_means, pos_means[1:]))
        assert all(b <= a + 1e-9 for a, b in zip(neg_means, neg_means[1:]))