import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from random_cloud.nn import Network, Topology, forward, random_network
from random_cloud.topology import (
    ReductionStep,
    effective_topology,
    parameter_count,
    reconstruct,
    reduce_topology,
    reduction_percent,
)

reducible = st.lists(st.integers(0, 8), min_size=1, max_size=4).flatmap(
    lambda hidden: st.tuples(st.integers(1, 6), st.just(hidden), st.integers(1, 5))
).map(lambda p: Topology([p[0], *p[1], p[2]]))


class TestReduce:
    @pytest.mark.parametrize(
        "t, k, after",
        [
            ([30, 10, 5, 2], 1, [30, 10, 4, 2]),
            ([30, 10, 0, 2], 3, [30, 7, 0, 2]),
            ([30, 2, 2], 5, [30, 0, 2]),
        ],
    )
    def test_examples(self, t, k, after):
        step = reduce_topology(t, k)
        assert list(step.after) == after
        assert list(step.before) == t

    def test_exhausted(self):
        assert reduce_topology([30, 0, 0, 2], 1) is None

    def test_errors(self):
        with pytest.raises(ValueError):
            reduce_topology([4, 2], 1)
        with pytest.raises(ValueError):
            reduce_topology([4, 3, 2], 0)

    @given(reducible, st.integers(1, 4))
    def test_terminates_with_expected_step_count(self, t, k):
        steps, cur = 0, t
        while (step := reduce_topology(cur, k)) is not None:
            assert step.after[0] == step.before[0] and step.after[-1] == step.before[-1]
            diff = [i for i in range(len(t)) if step.after[i] != step.before[i]]
            assert diff == [step.layer_index]
            cur = step.after
            steps += 1
        assert steps == sum(math.ceil(w / k) for w in t.hidden)
        if all(w % k == 0 for w in t.hidden):
            assert steps == math.ceil(sum(t.hidden) / k)

    def test_step_validation(self):
        with pytest.raises(ValueError):
            ReductionStep(1, 1, [4, 3, 2], [4, 1, 2])
        with pytest.raises(ValueError):
            ReductionStep(0, 1, [4, 3, 2], [3, 3, 2])
        with pytest.raises(ValueError):
            ReductionStep(1, -1, [4, 3, 2], [4, 4, 2])
        assert ReductionStep(1, 0, [4, 3, 2], [4, 3, 2]).is_identity


class TestEffective:
    @pytest.mark.parametrize(
        "t, e", [([30, 10, 0, 2], [30, 10, 2]), ([30, 0, 0, 2], [30, 2]), ([30, 10, 5, 2], [30, 10, 5, 2])]
    )
    def test_examples(self, t, e):
        assert list(effective_topology(t)) == e

    @given(reducible)
    def test_idempotent(self, t):
        e = effective_topology(t)
        assert effective_topology(e) == e
        assert e.is_runnable()


class TestCounts:
    @pytest.mark.parametrize("t, n", [([60, 30, 2], 1892), ([60, 3, 2], 191), ([4, 2], 10), ([4, 0, 2], 10)])
    def test_parameter_count(self, t, n):
        assert parameter_count(t) == n

    def test_reduction(self):
        assert reduction_percent([60, 30, 2], [60, 3, 2]) == pytest.approx(100 * (1 - 191 / 1892))
        assert round(reduction_percent([60, 30, 2], [60, 3, 2]), 1) == 89.9
        assert reduction_percent([60, 30, 2], [60, 30, 2]) == 0
        assert reduction_percent([4, 2], [4, 2]) == 0

    @given(reducible, st.integers(1, 3))
    def test_truncation_strictly_decreases_parameters(self, t, k):
        step = reduce_topology(t, k)
        assume(step is not None and not step.removes_layer)
        assert parameter_count(step.after) < parameter_count(step.before)

    @given(st.integers(1, 9), st.integers(1, 9))
    def test_layer_removal_parameter_change(self, p, q):
        # [p, 1, q] has p + 1 + 2q parameters, the joined [p, q] has pq + q
        step = reduce_topology([p, 1, q], 1)
        assert parameter_count(step.before) == p + 1 + 2 * q
        assert parameter_count(step.after) == p * q + q
        assert (parameter_count(step.after) < parameter_count(step.before)) == ((p - 1) * (q - 1) < 2)

    def test_matches_network(self, rng):
        net = random_network([5, 4, 3, 2], rng)
        assert net.n_params == parameter_count([5, 4, 3, 2])


class TestReconstruct:
    def test_truncation_example(self, rng):
        net = random_network([4, 3, 2], rng)
        new = reconstruct(net, reduce_topology([4, 3, 2], 1))
        assert list(new.topology) == [4, 2, 2]
        np.testing.assert_array_equal(new.weights[0], net.weights[0][:2])
        np.testing.assert_array_equal(new.biases[0], net.biases[0][:2])
        np.testing.assert_array_equal(new.weights[1], net.weights[1][:, :2])
        np.testing.assert_array_equal(new.biases[1], net.biases[1])

    def test_identity_step(self, rng):
        net = random_network([4, 3, 2], rng)
        new = reconstruct(net, ReductionStep(1, 0, [4, 3, 2], [4, 3, 2]))
        assert new.same_as(net) and new is not net

    def test_layer_removal_draws_from_stream(self):
        net = random_network([4, 1, 2], np.random.default_rng(0))
        new = reconstruct(net, reduce_topology([4, 1, 2], 1), np.random.default_rng(11))
        assert list(new.topology) == [4, 2]
        np.testing.assert_array_equal(new.weights[0], np.random.default_rng(11).uniform(-1, 1, (2, 4)))
        np.testing.assert_array_equal(new.biases[0], net.biases[1])

    def test_layer_removal_needs_rng(self, rng):
        net = random_network([4, 1, 2], rng)
        with pytest.raises(ValueError):
            reconstruct(net, reduce_topology([4, 1, 2], 1))

    def test_removal_of_middle_layer(self, rng):
        # [5, 3, 0, 2] -> [5, 0, 0, 2] drops the only remaining hidden layer
        net = random_network([5, 1, 2], rng)
        step = reduce_topology([5, 1, 0, 2], 4)
        new = reconstruct(net, step, rng)
        assert list(new.topology) == [5, 2]

    def test_topology_mismatch(self, rng):
        net = random_network([4, 3, 2], rng)
        with pytest.raises(ValueError):
            reconstruct(net, reduce_topology([4, 5, 2], 1))

    def test_source_untouched(self, rng):
        net = random_network([4, 3, 3, 2], rng)
        keep = net.copy()
        out = reconstruct(net, reduce_topology([4, 3, 3, 2], 1))
        out.weights[1][0, 0] = 99.0
        assert net.same_as(keep)

    def test_truncation_keeps_leading_activations(self, rng):
        net = random_network([3, 6, 4, 2], rng)
        x = rng.normal(size=(5, 3))
        new = reconstruct(net, reduce_topology([3, 6, 4, 2], 1))
        h_old = 1 / (1 + np.exp(-(x @ net.weights[0].T + net.biases[0])))
        h_new = 1 / (1 + np.exp(-(x @ new.weights[0].T + new.biases[0])))
        np.testing.assert_array_equal(h_new, h_old)
        assert forward(new, x).shape == (5, 2)
