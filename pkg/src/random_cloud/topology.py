"""Topology reduction policy and structure-preserving reconstruction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .nn import Network, Topology


@dataclass(frozen=True)
class ReductionStep:
    layer_index: int
    removed: int
    before: Topology
    after: Topology

    def __post_init__(self):
        before, after = Topology(self.before), Topology(self.after)
        object.__setattr__(self, "before", before)
        object.__setattr__(self, "after", after)
        l = self.layer_index
        if self.removed < 0:
            raise ValueError("removed must be non-negative")
        if not 1 <= l < len(before) - 1:
            raise ValueError(f"layer_index {l} is not a hidden layer of {list(before)}")
        if len(after) != len(before):
            raise ValueError("before/after differ in depth")
        expected = list(before)
        expected[l] = max(0, before[l] - self.removed)
        if list(after) != expected:
            raise ValueError(f"after {list(after)} inconsistent with removing {self.removed} at layer {l}")

    @property
    def is_identity(self) -> bool:
        return self.before == self.after

    @property
    def removes_layer(self) -> bool:
        return self.before[self.layer_index] > 0 and self.after[self.layer_index] == 0


def reduce_topology(t: Sequence[int], n_elim: int) -> ReductionStep | None:
    """Take ``n_elim`` neurons from the last non-empty hidden layer.

    Returns ``None`` once every hidden layer is empty.
    """
    t = Topology(t)
    if len(t) < 3:
        raise ValueError(f"topology {list(t)} has no hidden layer to reduce")
    if n_elim < 1:
        raise ValueError("n_elim must be >= 1")
    for l in range(len(t) - 2, 0, -1):
        if t[l] > 0:
            after = list(t)
            after[l] = max(0, t[l] - n_elim)
            return ReductionStep(l, n_elim, t, Topology._trusted(after))
    return None


def effective_topology(t: Sequence[int]) -> Topology:
    """Drop empty hidden layers."""
    t = Topology(t)
    if all(t[1:-1]):
        return t
    return Topology._trusted([t[0], *(w for w in t[1:-1] if w > 0), t[-1]])


def parameter_count(t: Sequence[int]) -> int:
    """Weights plus biases of the runnable network for ``t``."""
    e = effective_topology(t)
    return sum(e[l - 1] * e[l] + e[l] for l in range(1, len(e)))


def reduction_percent(t0: Sequence[int], t: Sequence[int]) -> float:
    return 100.0 * (1.0 - parameter_count(t) / parameter_count(t0))


def _effective_position(t: Topology, layer_index: int) -> int:
    """Position of raw layer ``layer_index`` in ``effective_topology(t)``."""
    return sum(1 for w in t[1:layer_index + 1] if w > 0)


def reconstruct(
    net: Network, step: ReductionStep, rng: np.random.Generator | None = None
) -> Network:
    """Rebuild ``net`` for ``step.after``.

    The reduced layer keeps its first rows (incoming weights and biases) and
    the next layer keeps its first columns. When the layer becomes empty it is
    removed, and its neighbours are joined by a fresh U(-1, 1) matrix drawn
    row-major from ``rng``; the downstream bias vector is kept.

    Arrays of untouched layers are shared with ``net``; networks are never
    modified in place (``train`` works on a copy).
    """
    source = effective_topology(step.before)
    if net.topology != source:
        raise ValueError(
            f"network topology {list(net.topology)} does not match step source {list(source)}"
        )
    if step.is_identity:
        return net.copy()
    e = _effective_position(step.before, step.layer_index)
    weights = list(net.weights)
    biases = list(net.biases)
    if not step.removes_layer:
        k = step.after[step.layer_index]
        weights[e - 1] = weights[e - 1][:k, :].copy()
        biases[e - 1] = biases[e - 1][:k].copy()
        weights[e] = weights[e][:, :k].copy()
    else:
        if rng is None:
            raise ValueError("removing a whole layer needs an rng for the connecting weights")
        n_prev = net.topology[e - 1]
        n_next = net.topology[e + 1]
        fresh = rng.uniform(-1.0, 1.0, size=(n_next, n_prev))
        weights = weights[:e - 1] + [fresh] + weights[e + 1:]
        biases = biases[:e - 1] + biases[e:]
    return Network(effective_topology(step.after), weights, biases)
