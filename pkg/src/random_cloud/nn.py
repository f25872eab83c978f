"""Feedforward sigmoid networks: construction, inference and SGD training."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Pre-activations are clipped to this range so sigmoid outputs stay strictly
# inside (0, 1) in float64.
Z_CLIP = 30.0

LOSSES = ("squared_error", "cross_entropy")

FORMAT_MAGIC = "random-cloud-network"
FORMAT_VERSION = 1


class Topology(tuple):
    """Layer widths ``[n_0, n_1, ..., n_L]``.

    Hidden widths may be zero while a topology is being reduced; such a
    topology has to go through :func:`random_cloud.topology.effective_topology`
    before a network can be built from it.
    """

    def __new__(cls, widths: Sequence[int]):
        if type(widths) is cls:
            return widths
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2:
            raise ValueError(f"topology needs at least 2 layers, got {widths}")
        if widths[0] < 1 or widths[-1] < 1:
            raise ValueError(f"input and output widths must be >= 1, got {widths}")
        if any(w < 0 for w in widths):
            raise ValueError(f"negative layer width in {widths}")
        return super().__new__(cls, widths)

    @classmethod
    def _trusted(cls, widths) -> "Topology":
        # skips validation; for widths derived from an already valid topology
        return tuple.__new__(cls, widths)

    @property
    def hidden(self) -> tuple[int, ...]:
        return tuple(self[1:-1])

    @property
    def n_layers(self) -> int:
        """Number of weight layers (L)."""
        return len(self) - 1

    def is_runnable(self) -> bool:
        return all(w >= 1 for w in self.hidden)

    def __repr__(self) -> str:
        return f"Topology({list(self)})"


@dataclass
class TrainConfig:
    epochs: int = 1000
    learning_rate: float = 0.1
    # None trains full-batch
    batch_size: int | None = 32
    loss: str = "squared_error"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")

    def resolve_batch_size(self, n_rows: int) -> int:
        return n_rows if self.batch_size is None else min(self.batch_size, n_rows)


@dataclass
class Network:
    """Weights ``W_l`` of shape ``(n_l, n_{l-1})`` and biases ``b_l`` of length ``n_l``."""

    topology: Topology
    weights: list[np.ndarray]
    biases: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        self.topology = Topology(self.topology)
        if not self.topology.is_runnable():
            raise ValueError(f"network topology has an empty hidden layer: {list(self.topology)}")
        if len(self.weights) != self.topology.n_layers or len(self.biases) != self.topology.n_layers:
            raise ValueError("number of weight/bias arrays does not match topology")
        for l, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            want = (self.topology[l], self.topology[l - 1])
            if w.shape != want or b.shape != (self.topology[l],):
                raise ValueError(
                    f"layer {l}: weight {w.shape} / bias {b.shape} do not match {want}"
                )

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "Network":
        return Network(
            self.topology,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def same_as(self, other: "Network") -> bool:
        """Bit-exact equality of topology and parameters."""
        return (
            self.topology == other.topology
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )

    def forward(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return predict_class(self, x)


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.minimum(np.maximum(z, -Z_CLIP), Z_CLIP)
    np.negative(z, out=z)
    np.exp(z, out=z)
    z += 1.0
    return np.reciprocal(z, out=z)


def random_network(topology: Sequence[int], rng: np.random.Generator) -> Network:
    """Draw every parameter from U(-1, 1).

    Draw order: layer by layer; within a layer the weight matrix in row-major
    order, then the bias vector.
    """
    topology = Topology(topology)
    if not topology.is_runnable():
        raise ValueError(f"cannot build a network with an empty hidden layer: {list(topology)}")
    weights, biases = [], []
    for l in range(1, len(topology)):
        weights.append(rng.uniform(-1.0, 1.0, size=(topology[l], topology[l - 1])))
        biases.append(rng.uniform(-1.0, 1.0, size=topology[l]))
    return Network(topology, weights, biases)


def _as_batch(net: Network, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.topology[0]:
        raise ValueError(f"input has {x.shape[-1]} features, network expects {net.topology[0]}")
    return x, single


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Sigmoid outputs for one sample (1-d) or a batch (rows = samples)."""
    a, single = _as_batch(net, x)
    for w, b in zip(net.weights, net.biases):
        a = sigmoid(a @ w.T + b)
    return a[0] if single else a


def decode(outputs: np.ndarray) -> np.ndarray:
    """Argmax over output units; ``np.argmax`` already returns the lowest index on ties."""
    return np.argmax(outputs, axis=-1)


def predict_class(net: Network, x: np.ndarray):
    pred = decode(forward(net, x))
    return int(pred) if np.ndim(pred) == 0 else pred


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


class _Counter:
    """Thread-safe count of backpropagation passes (used for audits)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._n = 0

    def increment(self) -> None:
        with self._lock:
            self._n += 1

    @property
    def value(self) -> int:
        return self._n


GRADIENT_CALLS = _Counter()


def loss_value(outputs: np.ndarray, targets: np.ndarray, loss: str) -> float:
    """Batch loss, summed over samples and output units.

    ``squared_error`` is the classic ``0.5 * sum((y - t)**2)``; ``cross_entropy``
    treats every output unit as an independent Bernoulli.
    """
    if loss == "squared_error":
        return float(0.5 * np.sum((outputs - targets) ** 2))
    if loss == "cross_entropy":
        return float(-np.sum(targets * np.log(outputs) + (1 - targets) * np.log1p(-outputs)))
    raise ValueError(f"unknown loss {loss!r}")


def _backprop(net: Network, x: np.ndarray, targets: np.ndarray, loss: str):
    GRADIENT_CALLS.increment()
    acts = [x]
    for w, b in zip(net.weights, net.biases):
        acts.append(sigmoid(acts[-1] @ w.T + b))
    out = acts[-1]
    if loss == "squared_error":
        delta = (out - targets) * out * (1.0 - out)
    elif loss == "cross_entropy":
        delta = out - targets
    else:
        raise ValueError(f"unknown loss {loss!r}")
    n = len(net.weights)
    grad_w: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    grad_b: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for l in range(n - 1, -1, -1):
        grad_w[l] = delta.T @ acts[l]
        grad_b[l] = delta.sum(axis=0)
        if l:
            a = acts[l]
            delta = (delta @ net.weights[l]) * a * (1.0 - a)
    return out, grad_w, grad_b


def gradients(
    net: Network, x: np.ndarray, targets: np.ndarray, loss: str = "squared_error"
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss and its gradient w.r.t. every weight and bias (backpropagation)."""
    x, _ = _as_batch(net, x)
    out, grad_w, grad_b = _backprop(net, x, np.asarray(targets, dtype=np.float64), loss)
    return loss_value(out, targets, loss), grad_w, grad_b


def train(
    net: Network,
    x: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> Network:
    """Mini-batch gradient descent on one-hot targets; returns a trained copy.

    Samples are reshuffled every epoch with ``rng`` (one permutation draw per
    epoch, also when training full-batch, so the stream position does not
    depend on the batch size).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    if x.shape[0] != y.shape[0]:
        raise ValueError("features and labels differ in length")
    n_out = net.topology[-1]
    if y.min() < 0 or y.max() >= n_out:
        raise ValueError(f"label out of range for {n_out} output units")
    net = net.copy()
    targets = one_hot(y, n_out)
    n = x.shape[0]
    bs = cfg.resolve_batch_size(n)
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        xs, ts = x[order], targets[order]
        for start in range(0, n, bs):
            _, gw, gb = _backprop(net, xs[start:start + bs], ts[start:start + bs], cfg.loss)
            for w, b, dw, db in zip(net.weights, net.biases, gw, gb):
                w -= lr * dw
                b -= lr * db
    return net


def dumps(net: Network) -> str:
    """Text dump: header, topology line, then per layer one line per weight row and one bias line.

    Values are written with ``float.hex`` so a load reproduces them bit-exactly.
    """
    lines = [f"{FORMAT_MAGIC} {FORMAT_VERSION}", " ".join(str(w) for w in net.topology)]
    for w, b in zip(net.weights, net.biases):
        lines.extend(" ".join(float(v).hex() for v in row) for row in w)
        lines.append(" ".join(float(v).hex() for v in b))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Network:
    lines = text.splitlines()
    header = lines[0].split()
    if len(header) != 2 or header[0] != FORMAT_MAGIC:
        raise ValueError("not a serialized network")
    if int(header[1]) != FORMAT_VERSION:
        raise ValueError(f"unsupported network format version {header[1]}")
    topology = Topology(int(t) for t in lines[1].split())
    pos = 2
    weights, biases = [], []
    for l in range(1, len(topology)):
        rows = lines[pos:pos + topology[l]]
        pos += topology[l]
        weights.append(
            np.array([[float.fromhex(v) for v in r.split()] for r in rows]).reshape(
                topology[l], topology[l - 1]
            )
        )
        biases.append(np.array([float.fromhex(v) for v in lines[pos].split()]))
        pos += 1
    return Network(topology, weights, biases)
