"""Comparison methods: full training, magnitude pruning and random pruning."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import rng as rngs
from .nn import Network, Topology, TrainConfig, random_network, train
from .topology import effective_topology

RANDOM_PRUNE_REPEATS = 5


def align_target(source: Sequence[int], target: Sequence[int]) -> Topology:
    """Express an effective target topology with the source's depth.

    The reduction policy empties hidden layers from the back, so the surviving
    hidden layers of a discovered topology are a prefix of the source's; the
    missing tail is filled with zero widths.
    """
    source, target = Topology(source), Topology(target)
    if len(target) == len(source):
        return target
    if len(target) > len(source):
        raise ValueError(f"target {list(target)} is deeper than source {list(source)}")
    pad = len(source) - len(target)
    return Topology([*target[:-1], *([0] * pad), target[-1]])


@dataclass(frozen=True)
class PruneSpec:
    source_topology: Topology
    target_topology: Topology

    def __post_init__(self):
        src = Topology(self.source_topology)
        tgt = align_target(src, self.target_topology)
        object.__setattr__(self, "source_topology", src)
        object.__setattr__(self, "target_topology", tgt)
        if not src.is_runnable():
            raise ValueError("source topology has an empty hidden layer")
        if src[0] != tgt[0] or src[-1] != tgt[-1]:
            raise ValueError("input/output widths of source and target differ")
        if any(t > s for s, t in zip(src.hidden, tgt.hidden)):
            raise ValueError(f"target {list(tgt)} is wider than source {list(src)}")

    @property
    def effective_target(self) -> Topology:
        return effective_topology(self.target_topology)


def full_training(
    topology_0: Sequence[int], x: np.ndarray, y: np.ndarray, cfg: TrainConfig, rng: np.random.Generator
) -> Network:
    return train(random_network(topology_0, rng), x, y, cfg, rng)


def neuron_scores(net: Network, layer: int, include_bias: bool = True) -> np.ndarray:
    """L2 norm of each neuron's incoming weights (and bias) in hidden layer ``layer``."""
    w, b = net.weights[layer - 1], net.biases[layer - 1]
    if include_bias:
        w = np.column_stack([w, b])
    return np.linalg.norm(w, axis=1)


def _top_k(scores: np.ndarray, k: int) -> np.ndarray:
    # largest first, lower index wins ties
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:k])


def apply_keep(
    net: Network, keep: dict[int, np.ndarray], rng: np.random.Generator | None = None
) -> Network:
    """Keep the listed neurons of each hidden layer and drop the rest.

    Surviving weights are copied unchanged. Where a hidden layer loses all its
    neurons, its neighbours are joined by a fresh U(-1, 1) matrix from ``rng``;
    gaps are filled from the output side backwards.
    """
    t = net.topology
    keep = {0: np.arange(t[0]), len(t) - 1: np.arange(t[-1]), **keep}
    alive = [l for l in range(len(t)) if keep[l].size > 0]
    pairs = list(zip(alive[:-1], alive[1:]))
    weights, biases = [None] * len(pairs), [None] * len(pairs)
    for j in range(len(pairs) - 1, -1, -1):
        p, q = pairs[j]
        kp, kq = keep[p], keep[q]
        if q == p + 1:
            weights[j] = net.weights[q - 1][np.ix_(kq, kp)].copy()
        else:
            if rng is None:
                raise ValueError("removing a whole layer needs an rng for the connecting weights")
            weights[j] = rng.uniform(-1.0, 1.0, size=(kq.size, kp.size))
        biases[j] = net.biases[q - 1][kq].copy()
    return Network([t[l] if l in (0, len(t) - 1) else keep[l].size for l in alive], weights, biases)


def _check(trained: Network, spec: PruneSpec) -> None:
    if trained.topology != spec.source_topology:
        raise ValueError(
            f"network topology {list(trained.topology)} does not match spec source {list(spec.source_topology)}"
        )


def magnitude_prune(
    trained: Network,
    spec: PruneSpec,
    rng: np.random.Generator | None = None,
    include_bias: bool = True,
) -> Network:
    """Keep the neurons with the largest incoming-weight norms.

    Scores come from the trained network as given (no recomputation between
    layers). ``rng`` is only used when a hidden layer is removed entirely.
    """
    _check(trained, spec)
    keep = {}
    for l in range(len(spec.source_topology) - 2, 0, -1):
        keep[l] = _top_k(neuron_scores(trained, l, include_bias), spec.target_topology[l])
    return apply_keep(trained, keep, rng)


def random_prune(trained: Network, spec: PruneSpec, rng: np.random.Generator) -> Network:
    """Keep a uniformly random subset of each hidden layer (layers drawn last to first)."""
    _check(trained, spec)
    keep = {}
    for l in range(len(spec.source_topology) - 2, 0, -1):
        n, k = spec.source_topology[l], spec.target_topology[l]
        keep[l] = np.arange(n) if k == n else np.sort(rng.choice(n, size=k, replace=False))
    return apply_keep(trained, keep, rng)


def split_budget(cfg: TrainConfig, budget_split: bool) -> tuple[TrainConfig, TrainConfig]:
    """Epochs for (full training, fine-tuning): E + E, or E/2 + E/2 when split."""
    if not budget_split:
        return cfg, cfg
    first = max(1, cfg.epochs // 2)
    return replace(cfg, epochs=first), replace(cfg, epochs=max(1, cfg.epochs - first))


def prune_pipeline(
    method: str,
    topology_0: Sequence[int],
    spec: PruneSpec,
    x: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    seed: int,
    budget_split: bool = False,
    trained: Network | None = None,
    repeats: int = RANDOM_PRUNE_REPEATS,
) -> list[Network]:
    """Train the full network, prune it to the target, fine-tune.

    Returns one network for ``magnitude`` and ``repeats`` networks for
    ``random``. ``trained`` may carry an already trained full network (it
    must come from :func:`full_training` with the same seed and epochs).
    """
    if method not in ("magnitude", "random"):
        raise ValueError(f"unknown pruning method {method!r}")
    first, second = split_budget(cfg, budget_split)
    if trained is None:
        trained = full_training(topology_0, x, y, first, rngs.substream(seed, rngs.FULL_TRAIN))
    if method == "magnitude":
        stream = rngs.substream(seed, rngs.MAGNITUDE)
        return [train(magnitude_prune(trained, spec, stream), x, y, second, stream)]
    out = []
    for r in range(repeats):
        stream = rngs.substream(seed, rngs.RANDOM_PRUNE, r)
        out.append(train(random_prune(trained, spec, stream), x, y, second, stream))
    return out
