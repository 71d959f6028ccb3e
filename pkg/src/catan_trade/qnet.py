"""Fully-connected Q-network trained with plain minibatch SGD.

Hidden layers are ReLU, the output layer is linear. The loss is the mean
squared TD error over a minibatch, where only the taken action's output
carries error and the bootstrap max only ranges over actions legal in the
next state.
"""

from __future__ import annotations

from pathlib import Path
from typing import NamedTuple

import numpy as np

DEFAULT_SIZES = (160, 50, 50, 73)
FORMAT_VERSION = 1


class DimensionMismatch(ValueError):
    pass


class EmptyBatch(ValueError):
    pass


class Batch(NamedTuple):
    states: np.ndarray  # (B, n_in)
    actions: np.ndarray  # (B,) int
    rewards: np.ndarray  # (B,)
    next_states: np.ndarray  # (B, n_in)
    terminals: np.ndarray  # (B,) bool
    next_masks: np.ndarray  # (B, n_out) bool


class QNetwork:
    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases):
            raise ValueError("one bias vector per weight matrix")
        for w, b in zip(weights, biases):
            if w.shape[0] != b.shape[0]:
                raise DimensionMismatch(f"bias {b.shape} does not match weights {w.shape}")
        for w0, w1 in zip(weights, weights[1:]):
            if w1.shape[1] != w0.shape[0]:
                raise DimensionMismatch("consecutive layer sizes disagree")
        self.weights = [np.array(w, dtype=float) for w in weights]
        self.biases = [np.array(b, dtype=float) for b in biases]

    @classmethod
    def zeros(cls, sizes=DEFAULT_SIZES) -> QNetwork:
        return cls(
            [np.zeros((o, i)) for i, o in zip(sizes, sizes[1:])],
            [np.zeros(o) for o in sizes[1:]],
        )

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def copy(self) -> QNetwork:
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.params())

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise DimensionMismatch(f"expected {self.sizes[0]} inputs, got {x.shape[-1]}")
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if k < last:
                h = np.maximum(h, 0.0)
        return h

    def _activations(self, x: np.ndarray) -> list[np.ndarray]:
        acts = [x]
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w.T + b
            acts.append(np.maximum(z, 0.0) if k < last else z)
        return acts

    def backward(self, acts: list[np.ndarray], grad_out: np.ndarray):
        """Gradients of a scalar loss given dLoss/dOutput, one pair per layer."""
        grads_w, grads_b = [], []
        delta = grad_out
        for k in range(len(self.weights) - 1, -1, -1):
            grads_w.append(delta.T @ acts[k])
            grads_b.append(delta.sum(axis=0))
            if k:
                delta = (delta @ self.weights[k]) * (acts[k] > 0)
        return grads_w[::-1], grads_b[::-1]


def init_weights(rng: np.random.Generator, sizes=DEFAULT_SIZES) -> QNetwork:
    """Xavier-uniform weights, zero biases."""
    weights = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
    return QNetwork(weights, [np.zeros(o) for o in sizes[1:]])


class TargetNetwork:
    """Frozen copy of the online weights, refreshed only by :func:`sync_target`."""

    def __init__(self, net: QNetwork):
        self.net = net.copy()
        self.steps_since_sync = 0

    def forward(self, x) -> np.ndarray:
        return self.net.forward(x)


def sync_target(net: QNetwork, target: TargetNetwork) -> TargetNetwork:
    target.net = net.copy()
    target.steps_since_sync = 0
    return target


def td_targets(target: TargetNetwork | QNetwork, batch: Batch, gamma: float) -> np.ndarray:
    q_next = target.forward(batch.next_states)
    legal = np.asarray(batch.next_masks, dtype=bool)
    best = np.where(legal, q_next, -np.inf).max(axis=1)
    bootstrap = ~np.asarray(batch.terminals, dtype=bool) & legal.any(axis=1)
    return batch.rewards + gamma * np.where(bootstrap, best, 0.0)


def td_loss(net: QNetwork, batch: Batch, targets: np.ndarray) -> float:
    q = net.forward(batch.states)[np.arange(len(targets)), batch.actions]
    return float(np.mean((targets - q) ** 2))


def td_gradients(net: QNetwork, batch: Batch, targets: np.ndarray, clip: float | None = None):
    """Loss and its gradients w.r.t. every weight and bias."""
    acts = net._activations(np.asarray(batch.states, dtype=float))
    n = len(targets)
    rows = np.arange(n)
    q = acts[-1][rows, batch.actions]
    err = q - targets
    loss = float(np.mean(err**2))
    if clip is not None:
        err = np.clip(err, -clip, clip)
    grad_out = np.zeros_like(acts[-1])
    grad_out[rows, batch.actions] = 2.0 * err / n
    gw, gb = net.backward(acts, grad_out)
    return loss, gw, gb


def stack(experiences) -> Batch:
    return Batch(
        np.array([e.state for e in experiences], dtype=float),
        np.array([e.action for e in experiences], dtype=int),
        np.array([e.reward for e in experiences], dtype=float),
        np.array([e.next_state for e in experiences], dtype=float),
        np.array([e.terminal for e in experiences], dtype=bool),
        np.array([e.next_mask for e in experiences], dtype=bool),
    )


class SGD:
    """Plain SGD; momentum is off unless asked for."""

    def __init__(self, lr: float, momentum: float = 0.0):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.lr = lr
        self.momentum = momentum
        self._velocity: list[np.ndarray] | None = None

    def step(self, net: QNetwork, gw, gb) -> None:
        grads = [g for pair in zip(gw, gb) for g in pair]
        params = net.params()
        if self.momentum:
            if self._velocity is None:
                self._velocity = [np.zeros_like(p) for p in params]
            for p, g, v in zip(params, grads, self._velocity):
                v *= self.momentum
                v -= self.lr * g
                p += v
        else:
            for p, g in zip(params, grads):
                p -= self.lr * g


def train_minibatch(
    net: QNetwork,
    target: TargetNetwork,
    batch,
    gamma: float,
    lr: float | SGD,
    clip: float | None = None,
) -> float:
    """One SGD step on the TD loss; returns the loss before the step."""
    if not isinstance(batch, Batch):
        batch = list(batch)
        if not batch:
            raise EmptyBatch("minibatch is empty")
        batch = stack(batch)
    if len(batch.actions) == 0:
        raise EmptyBatch("minibatch is empty")
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    opt = lr if isinstance(lr, SGD) else SGD(lr)
    targets = td_targets(target, batch, gamma)
    loss, gw, gb = td_gradients(net, batch, targets, clip)
    opt.step(net, gw, gb)
    target.steps_since_sync += 1
    return loss


# ---------------------------------------------------------------------------
# checkpoint text format
# ---------------------------------------------------------------------------


def dumps(net: QNetwork) -> str:
    lines = [f"qnet {FORMAT_VERSION}", "layers " + " ".join(map(str, net.sizes))]
    for k, (w, b) in enumerate(zip(net.weights, net.biases), start=1):
        lines.append(f"W{k} {w.shape[0]} {w.shape[1]}")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in w)
        lines.append(f"b{k} {b.shape[0]}")
        lines.append(" ".join(repr(float(v)) for v in b))
    return "\n".join(lines) + "\n"


def loads(text: str) -> QNetwork:
    lines = iter(text.splitlines())
    head = next(lines).split()
    if head[0] != "qnet" or int(head[1]) != FORMAT_VERSION:
        raise ValueError(f"unsupported weight file header {head}")
    sizes = [int(v) for v in next(lines).split()[1:]]
    weights, biases = [], []
    for k in range(1, len(sizes)):
        tag, rows, cols = next(lines).split()
        if tag != f"W{k}" or (int(rows), int(cols)) != (sizes[k], sizes[k - 1]):
            raise ValueError(f"unexpected block {tag}")
        weights.append(np.array([[float(v) for v in next(lines).split()] for _ in range(int(rows))]))
        tag, n = next(lines).split()
        if tag != f"b{k}" or int(n) != sizes[k]:
            raise ValueError(f"unexpected block {tag}")
        biases.append(np.array([float(v) for v in next(lines).split()]))
    return QNetwork(weights, biases)


def save(net: QNetwork, path) -> None:
    Path(path).write_text(dumps(net))


def load(path) -> QNetwork:
    return loads(Path(path).read_text())
