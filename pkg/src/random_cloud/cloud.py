"""The Random Cloud search: training-free exploration, selection, refinement."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import rng as rngs
from .nn import Network, Topology, TrainConfig, decode, dumps, predict_class, random_network, sigmoid, train
from .topology import ReductionStep, effective_topology, parameter_count, reconstruct, reduce_topology


@dataclass
class CloudConfig:
    cloud_size: int = 50
    threshold: float = 0.5
    n_elim: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def __post_init__(self):
        if self.cloud_size < 1:
            raise ValueError("cloud_size must be >= 1")
        if not 0.0 <= self.threshold < 1.0:
            raise ValueError("threshold must lie in [0, 1)")
        if self.n_elim < 1:
            raise ValueError("n_elim must be >= 1")


@dataclass(frozen=True)
class ExplorationRecord:
    network_index: int
    step_number: int
    topology: Topology
    train_accuracy: float
    layer_removed_event: bool = False

    @property
    def n_params(self) -> int:
        return parameter_count(self.topology)

    def to_dict(self) -> dict:
        return {
            "network_index": self.network_index,
            "step_number": self.step_number,
            "topology": list(self.topology),
            "train_accuracy": self.train_accuracy,
            "layer_removed_event": self.layer_removed_event,
        }


@dataclass
class Candidate:
    record: ExplorationRecord
    network: Network | None = None


@dataclass
class Exploration:
    records: list[ExplorationRecord]
    candidates: list[Candidate]


@dataclass
class CloudResult:
    best_network: Network | None
    best_accuracy_untrained: float | None
    best_topology: Topology | None
    refined_network: Network | None
    records: list[ExplorationRecord]
    best_record: ExplorationRecord | None = None
    timings: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.best_network is not None

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {
            "best_topology": None if self.best_topology is None else list(self.best_topology),
            "best_accuracy_untrained": self.best_accuracy_untrained,
            "best_record": None if self.best_record is None else self.best_record.to_dict(),
            "best_network": None if self.best_network is None else dumps(self.best_network),
            "refined_network": None if self.refined_network is None else dumps(self.refined_network),
            "records": [r.to_dict() for r in self.records],
        }
        if include_timings:
            out["timings"] = dict(self.timings)
        return out


def training_accuracy(net: Network, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.count_nonzero(predict_class(net, x) == y)) / len(y)


def _stacked_sigmoid(a: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # a: (B, m, n_in) or (m, n_in); w: (B, n_out, n_in); b: (B, n_out)
    return sigmoid(np.matmul(a, w.transpose(0, 2, 1)) + b[:, None, :])


class _Cohort:
    """Several cloud members explored in lock step.

    All members follow the same topology trajectory, so their weights are kept
    as stacked arrays and every step is one batched forward pass. Each member
    draws from its own stream exactly as a lone exploration would.

    After a truncation only the layers at and after the reduced one are
    recomputed; the truncated layer's activations are the leading columns of
    the old ones, since its surviving neurons keep their incoming weights.
    """

    def __init__(self, topology: Topology, seed: int, indices: Sequence[int], x: np.ndarray):
        self.indices = [int(i) for i in indices]
        self.streams = [rngs.network_stream(seed, i) for i in self.indices]
        nets = [random_network(topology, s) for s in self.streams]
        self.topology = topology
        self.weights = [np.stack([n.weights[l] for n in nets]) for l in range(len(topology) - 1)]
        self.biases = [np.stack([n.biases[l] for n in nets]) for l in range(len(topology) - 1)]
        self.acts = [np.asarray(x, dtype=np.float64)]
        self._run(0)

    def _run(self, start: int) -> None:
        del self.acts[start + 1:]
        for w, b in zip(self.weights[start:], self.biases[start:]):
            self.acts.append(_stacked_sigmoid(self.acts[-1], w, b))

    def apply(self, step: ReductionStep) -> None:
        e = sum(1 for w in step.before[1:step.layer_index + 1] if w > 0)
        if step.removes_layer:
            n_prev, n_next = self.topology[e - 1], self.topology[e + 1]
            fresh = np.stack([s.uniform(-1.0, 1.0, size=(n_next, n_prev)) for s in self.streams])
            self.weights = self.weights[:e - 1] + [fresh] + self.weights[e + 1:]
            self.biases = self.biases[:e - 1] + self.biases[e:]
            del self.acts[e]
            self.topology = effective_topology(step.after)
            self._run(e - 1)
        else:
            k = step.after[step.layer_index]
            self.weights[e - 1] = self.weights[e - 1][:, :k, :]
            self.biases[e - 1] = self.biases[e - 1][:, :k]
            self.weights[e] = self.weights[e][:, :, :k]
            self.acts[e] = self.acts[e][:, :, :k]
            self.topology = effective_topology(step.after)
            self._run(e)

    def accuracies(self, y: np.ndarray) -> np.ndarray:
        return np.count_nonzero(decode(self.acts[-1]) == y, axis=1) / len(y)

    def snapshot(self, j: int) -> Network:
        return Network(
            self.topology, [w[j].copy() for w in self.weights], [b[j].copy() for b in self.biases]
        )


def _explore_cohort(
    topology_0: Sequence[int],
    config: CloudConfig,
    indices: Sequence[int],
    x: np.ndarray,
    y: np.ndarray,
    keep_snapshots: bool = True,
) -> dict[int, Exploration]:
    t = Topology(topology_0)
    cohort = _Cohort(effective_topology(t), config.seed, indices, x)
    out = {i: Exploration([], []) for i in cohort.indices}
    step_number, removed_layer = 0, False
    while True:
        accs = cohort.accuracies(y)
        for j, i in enumerate(cohort.indices):
            rec = ExplorationRecord(i, step_number, cohort.topology, float(accs[j]), removed_layer)
            out[i].records.append(rec)
            if rec.train_accuracy > config.threshold:
                out[i].candidates.append(Candidate(rec, cohort.snapshot(j) if keep_snapshots else None))
        step = reduce_topology(t, config.n_elim) if len(t) > 2 else None
        if step is None:
            break
        cohort.apply(step)
        removed_layer = step.removes_layer
        t = step.after
        step_number += 1
    return out


def explore_one(
    topology_0: Sequence[int],
    config: CloudConfig,
    network_index: int,
    x: np.ndarray,
    y: np.ndarray,
) -> Exploration:
    """Walk one cloud member down the reduction policy, forward passes only.

    Every visited topology is recorded, including the final one where all
    hidden layers are gone; a snapshot is kept for records above threshold.
    """
    if not 0 <= network_index < config.cloud_size:
        raise ValueError(f"network_index {network_index} outside cloud of {config.cloud_size}")
    return _explore_cohort(topology_0, config, [network_index], x, y)[network_index]


def replay(topology_0: Sequence[int], config: CloudConfig, network_index: int, step_number: int) -> Network:
    """Rebuild the snapshot of one member at one step with :func:`reconstruct`."""
    t = Topology(topology_0)
    stream = rngs.network_stream(config.seed, network_index)
    net = random_network(effective_topology(t), stream)
    for _ in range(step_number):
        step = reduce_topology(t, config.n_elim) if len(t) > 2 else None
        if step is None:
            raise ValueError(f"member {network_index} has no step {step_number}")
        net = reconstruct(net, step, stream)
        t = step.after
    return net


# bytes of activations a single cohort may hold
COHORT_BYTES = 64 * 2**20


def _chunks(indices: list[int], per_member: int, workers: int) -> list[list[int]]:
    size = max(1, min(len(indices), COHORT_BYTES // max(1, per_member)))
    if workers > 1:
        size = min(size, -(-len(indices) // workers))
    return [indices[k:k + size] for k in range(0, len(indices), size)]


def _selection_key(c: Candidate):
    r = c.record
    return (-r.train_accuracy, r.n_params, r.network_index, r.step_number)


def selection_rule(candidates: Iterable[Candidate]) -> Candidate | None:
    """Highest accuracy, then fewest parameters, then lowest (network_index, step_number)."""
    return min(candidates, key=_selection_key, default=None)


def explore_cloud(
    topology_0: Sequence[int],
    config: CloudConfig,
    x: np.ndarray,
    y: np.ndarray,
    workers: int = 1,
    order: Sequence[int] | None = None,
    keep_snapshots: bool = False,
) -> dict[int, Exploration]:
    """Explore every cloud member; returns explorations keyed by member index.

    Members are grouped into lock-step cohorts, split across ``workers``
    threads. Grouping and ``order`` affect scheduling only.
    """
    indices = list(range(config.cloud_size)) if order is None else [int(i) for i in order]
    if sorted(indices) != list(range(config.cloud_size)):
        raise ValueError("order must be a permutation of the cloud indices")
    t = Topology(topology_0)
    groups = _chunks(indices, 8 * len(x) * sum(t[1:]), workers)

    def work(group):
        return _explore_cohort(t, config, group, x, y, keep_snapshots)

    if workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(work, groups))
    else:
        done = [work(g) for g in groups]
    return {i: ex for d in done for i, ex in d.items()}


def run_cloud(
    topology_0: Sequence[int],
    config: CloudConfig,
    x: np.ndarray,
    y: np.ndarray,
    workers: int = 1,
    order: Sequence[int] | None = None,
) -> CloudResult:
    """Explore all ``cloud_size`` members, select, and refine the winner.

    ``order`` only changes the scheduling of the explorations; the result is
    the same for every order and worker count.
    """
    t0 = time.perf_counter()
    by_index = explore_cloud(topology_0, config, x, y, workers, order)
    records = [r for i in range(config.cloud_size) for r in by_index[i].records]
    best = selection_rule(c for i in range(config.cloud_size) for c in by_index[i].candidates)
    if best is not None:
        best = Candidate(best.record, replay(topology_0, config, best.record.network_index, best.record.step_number))
    t1 = time.perf_counter()

    refined = None
    if best is not None:
        refined = train(best.network, x, y, config.train, rngs.substream(config.seed, rngs.REFINE))
    t2 = time.perf_counter()

    return CloudResult(
        best_network=None if best is None else best.network,
        best_accuracy_untrained=None if best is None else best.record.train_accuracy,
        best_topology=None if best is None else best.record.topology,
        refined_network=refined,
        records=records,
        best_record=None if best is None else best.record,
        timings={"exploration": t1 - t0, "refinement": t2 - t1},
    )
