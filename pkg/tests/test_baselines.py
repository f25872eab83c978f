import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from random_cloud import rng as rngs
from random_cloud.baselines import (
    PruneSpec,
    align_target,
    apply_keep,
    full_training,
    magnitude_prune,
    neuron_scores,
    prune_pipeline,
    random_prune,
    split_budget,
)
from random_cloud.nn import GRADIENT_CALLS, Network, Topology, TrainConfig, random_network


def net_with_scores(scores, n_in=2, n_out=2):
    """One hidden layer whose neuron i has incoming (weights, bias) norm ``scores[i]``."""
    k = len(scores)
    w1 = np.zeros((k, n_in))
    w1[:, 0] = scores
    g = np.random.default_rng(0)
    return Network([n_in, k, n_out], [w1, g.uniform(-1, 1, (n_out, k))], [np.zeros(k), g.uniform(-1, 1, n_out)])


class TestSpec:
    def test_align(self):
        assert list(align_target([30, 10, 5, 2], [30, 7, 2])) == [30, 7, 0, 2]
        assert list(align_target([30, 10, 5, 2], [30, 2])) == [30, 0, 0, 2]
        assert list(align_target([30, 10, 2], [30, 4, 2])) == [30, 4, 2]

    @pytest.mark.parametrize(
        "src, tgt", [([4, 3, 2], [4, 5, 2]), ([4, 3, 2], [5, 3, 2]), ([4, 3, 2], [4, 3, 3]), ([4, 2], [4, 1, 2])]
    )
    def test_invalid(self, src, tgt):
        with pytest.raises(ValueError):
            PruneSpec(src, tgt)

    def test_effective_target(self):
        assert list(PruneSpec([30, 10, 5, 2], [30, 7, 2]).effective_target) == [30, 7, 2]

    def test_budget(self):
        cfg = TrainConfig(epochs=7)
        assert [c.epochs for c in split_budget(cfg, False)] == [7, 7]
        assert [c.epochs for c in split_budget(cfg, True)] == [3, 4]


class TestMagnitude:
    def test_scores_include_bias(self):
        net = net_with_scores([3.0, 0.1, 2.0])
        net.biases[0][:] = [4.0, 0.0, 0.0]
        np.testing.assert_allclose(neuron_scores(net, 1), [5.0, 0.1, 2.0])
        np.testing.assert_allclose(neuron_scores(net, 1, include_bias=False), [3.0, 0.1, 2.0])

    def test_keeps_largest(self):
        net = net_with_scores([3.0, 0.1, 2.0])
        out = magnitude_prune(net, PruneSpec([2, 3, 2], [2, 2, 2]))
        np.testing.assert_array_equal(out.weights[0], net.weights[0][[0, 2]])
        np.testing.assert_array_equal(out.weights[1], net.weights[1][:, [0, 2]])
        np.testing.assert_array_equal(out.biases[1], net.biases[1])

    def test_ties_keep_lower_index(self):
        net = net_with_scores([1.0, 1.0, 1.0])
        out = magnitude_prune(net, PruneSpec([2, 3, 2], [2, 2, 2]))
        np.testing.assert_array_equal(out.weights[1], net.weights[1][:, [0, 1]])

    def test_identity(self, rng):
        net = random_network([5, 4, 3, 2], rng)
        assert magnitude_prune(net, PruneSpec(net.topology, net.topology)).same_as(net)

    def test_layer_removal(self, rng):
        net = random_network([5, 4, 3, 2], rng)
        out = magnitude_prune(net, PruneSpec(net.topology, [5, 2, 2]), np.random.default_rng(1))
        assert list(out.topology) == [5, 2, 2]
        assert out.weights[1].shape == (2, 2)
        np.testing.assert_array_equal(out.weights[1], np.random.default_rng(1).uniform(-1, 1, (2, 2)))
        np.testing.assert_array_equal(out.biases[1], net.biases[2])
        with pytest.raises(ValueError):
            magnitude_prune(net, PruneSpec(net.topology, [5, 2, 2]))

    def test_spec_mismatch(self, rng):
        with pytest.raises(ValueError):
            magnitude_prune(random_network([5, 4, 2], rng), PruneSpec([5, 6, 2], [5, 2, 2]))

    @given(st.integers(0, 10**6), st.integers(1, 5), st.integers(1, 5))
    def test_permutation_consistent(self, seed, k1, k2):
        g = np.random.default_rng(seed)
        t = [3, 5, 5, 2]
        net = random_network(t, g)
        spec = PruneSpec(t, [3, min(k1, 5), min(k2, 5), 2])
        perm = g.permutation(5)
        # permute hidden layer 1 (rows of W1, b1; columns of W2)
        pnet = Network(t, [net.weights[0][perm], net.weights[1][:, perm], net.weights[2]],
                       [net.biases[0][perm], net.biases[1], net.biases[2]])
        a, b = magnitude_prune(net, spec), magnitude_prune(pnet, spec)
        # same surviving neurons, up to ordering; compare as sets of rows
        rows = lambda m: sorted(map(tuple, np.column_stack([m.weights[0], m.biases[0]])))
        scores = neuron_scores(net, 1)
        if len(np.unique(scores)) == scores.size:
            assert rows(a) == rows(b)
            np.testing.assert_array_equal(a.weights[2], b.weights[2])

    @given(st.integers(0, 10**6))
    def test_surviving_weights_exact(self, seed):
        g = np.random.default_rng(seed)
        net = random_network([4, 6, 5, 3], g)
        out = magnitude_prune(net, PruneSpec(net.topology, [4, 3, 2, 3]))
        k1 = np.sort(np.argsort(-neuron_scores(net, 1), kind="stable")[:3])
        k2 = np.sort(np.argsort(-neuron_scores(net, 2), kind="stable")[:2])
        np.testing.assert_array_equal(out.weights[0], net.weights[0][k1])
        np.testing.assert_array_equal(out.weights[1], net.weights[1][np.ix_(k2, k1)])
        np.testing.assert_array_equal(out.weights[2], net.weights[2][:, k2])


class TestRandom:
    def test_identity(self, rng):
        net = random_network([5, 4, 2], rng)
        assert random_prune(net, PruneSpec(net.topology, net.topology), rng).same_as(net)

    def test_width_zero_removes_layer(self, rng):
        net = random_network([5, 4, 3, 2], rng)
        out = random_prune(net, PruneSpec(net.topology, [5, 3, 0, 2]), rng)
        assert list(out.topology) == [5, 3, 2]

    def test_uniform_subsets(self):
        g = np.random.default_rng(2024)
        net = random_network([2, 4, 2], g)
        spec = PruneSpec([2, 4, 2], [2, 2, 2])
        hits = np.zeros(4)
        for _ in range(10000):
            out = random_prune(net, spec, g)
            for row in out.weights[0]:
                hits[np.flatnonzero((net.weights[0] == row).all(axis=1))[0]] += 1
        np.testing.assert_allclose(hits / 10000, 0.5, atol=0.02)

    def test_deterministic(self, rng):
        net = random_network([5, 8, 2], rng)
        spec = PruneSpec(net.topology, [5, 3, 2])
        a = random_prune(net, spec, np.random.default_rng(4))
        b = random_prune(net, spec, np.random.default_rng(4))
        assert a.same_as(b)


class TestKeep:
    def test_gap_filling(self, rng):
        net = random_network([3, 4, 4, 4, 2], rng)
        out = apply_keep(net, {1: np.array([0, 2]), 2: np.array([], dtype=int), 3: np.array([], dtype=int)}, rng)
        assert list(out.topology) == [3, 2, 2]
        np.testing.assert_array_equal(out.biases[1], net.biases[3])


class TestPipeline:
    X = np.random.default_rng(0).normal(size=(40, 3))
    Y = np.tile([0, 1], 20)

    def test_epoch_budget(self):
        cfg = TrainConfig(epochs=3, batch_size=None)
        spec = PruneSpec([3, 6, 2], [3, 2, 2])
        for split, expected in ((False, 6), (True, 3)):
            before = GRADIENT_CALLS.value
            prune_pipeline("magnitude", [3, 6, 2], spec, self.X, self.Y, cfg, seed=0, budget_split=split)
            assert GRADIENT_CALLS.value - before == expected

    def test_random_returns_repeats(self):
        cfg = TrainConfig(epochs=2)
        spec = PruneSpec([3, 6, 2], [3, 2, 2])
        nets = prune_pipeline("random", [3, 6, 2], spec, self.X, self.Y, cfg, seed=1)
        assert len(nets) == 5 and all(list(n.topology) == [3, 2, 2] for n in nets)
        assert not nets[0].same_as(nets[1])

    def test_reusing_trained_network(self):
        cfg = TrainConfig(epochs=2)
        spec = PruneSpec([3, 6, 2], [3, 2, 2])
        trained = full_training([3, 6, 2], self.X, self.Y, cfg, rngs.substream(3, rngs.FULL_TRAIN))
        a = prune_pipeline("magnitude", [3, 6, 2], spec, self.X, self.Y, cfg, seed=3)
        b = prune_pipeline("magnitude", [3, 6, 2], spec, self.X, self.Y, cfg, seed=3, trained=trained)
        assert a[0].same_as(b[0])

    def test_full_training_keeps_topology(self, rng):
        net = full_training([3, 6, 2], self.X, self.Y, TrainConfig(epochs=1), rng)
        assert list(net.topology) == [3, 6, 2]

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            prune_pipeline("lottery", [3, 6, 2], PruneSpec([3, 6, 2], [3, 2, 2]), self.X, self.Y, TrainConfig(), 0)
