"""Dense feed-forward layers with hand-rolled backpropagation and
momentum SGD.

Everything here runs in float64 and is deterministic for a fixed seed:
weight initialization, per-epoch shuffling and batch order are all driven
by explicitly seeded generators, so two runs with identical inputs produce
bit-identical parameters and loss histories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import as_float_matrix, check_finite, check_same_length

TANH = "tanh"
IDENTITY = "identity"
_ACTIVATIONS = (TANH, IDENTITY)


@dataclass
class DenseLayer:
    """One fully connected layer: f(W x + b).

    ``weights`` is (out_dim, in_dim); ``biases`` is (out_dim,). The
    activation is tanh for every hidden/encoding layer and identity for
    the reconstruction output layer.
    """

    weights: np.ndarray
    biases: np.ndarray
    activation: str = TANH

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.biases.ndim != 1:
            raise ValueError(f"biases must be 1-D, got shape {self.biases.shape}")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ValueError(
                f"weights have {self.weights.shape[0]} rows but biases length is "
                f"{self.biases.shape[0]}"
            )
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation '{self.activation}'")
        check_finite(self.weights, "weights")
        check_finite(self.biases, "biases")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.biases.copy(), self.activation)


@dataclass
class TrainConfig:
    """Optimizer settings; every field is overridable from the CLI."""

    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 200
    batch_size: int = 32
    rng_seed: int = 0
    early_stop_tol: float = 1e-7
    early_stop_patience: int = 10

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class TrainState:
    """Per-parameter velocity accumulators plus the epoch loss history."""

    velocities: list[tuple[np.ndarray, np.ndarray]]
    epoch_losses: list[float] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, layers: list[DenseLayer]) -> "TrainState":
        return cls([(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in layers])


def init_layer(n_in: int, n_out: int, activation: str, rng: np.random.Generator) -> DenseLayer:
    """Symmetric fan-based uniform init, zero biases.

    The half-width sqrt(6 / (fan_in + fan_out)) keeps tanh units out of
    saturation at the start of training.
    """
    r = np.sqrt(6.0 / (n_in + n_out))
    weights = rng.uniform(-r, r, size=(n_out, n_in))
    return DenseLayer(weights, np.zeros(n_out), activation)


def _apply_activation(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == TANH:
        return np.tanh(z)
    return z


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """f(W x + b) for a single vector or a (batch, in_dim) matrix."""
    x = np.asarray(x, dtype=float)
    expected = layer.in_dim
    actual = x.shape[-1] if x.ndim else -1
    if x.ndim not in (1, 2) or actual != expected:
        raise ValueError(
            f"dimension mismatch: layer expects input of size {expected}, got {actual}"
        )
    if x.ndim == 1:
        z = layer.weights @ x + layer.biases
    else:
        z = x @ layer.weights.T + layer.biases
    return _apply_activation(z, layer.activation)


def forward_stack(layers: list[DenseLayer], x: np.ndarray) -> np.ndarray:
    """Chain :func:`dense_forward` through a list of layers."""
    out = x
    for layer in layers:
        out = dense_forward(layer, out)
    return out


def mse(predicted, target) -> float:
    """Mean of squared differences over all elements."""
    predicted = np.asarray(predicted, dtype=float)
    target = np.asarray(target, dtype=float)
    check_same_length(predicted.reshape(-1), target.reshape(-1), "predicted", "target")
    if predicted.size == 0:
        raise ValueError("mse of empty vectors is undefined")
    return float(np.mean((predicted - target) ** 2))


def squared_distance(a, b) -> float:
    """Mean squared distance between two vectors.

    Numerically identical to :func:`mse`; kept as a named operation because
    it is the loss the expansion decoder trains against and the anomaly
    score the detector thresholds.
    """
    return mse(a, b)


def _forward_trace(layers: list[DenseLayer], x2d: np.ndarray) -> list[np.ndarray]:
    """Activations [a0, a1, ..., am] with a0 = input."""
    acts = [x2d]
    for layer in layers:
        acts.append(dense_forward(layer, acts[-1]))
    return acts


def loss_and_gradients(
    layers: list[DenseLayer], x, y
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean-squared-error loss and its exact analytic gradients.

    Accepts a single sample or a mini-batch; batch gradients are the mean
    over the batch, so the learning rate keeps its meaning regardless of
    batch size.
    """
    x2d = as_float_matrix(x, "input")
    y2d = as_float_matrix(y, "target")
    if x2d.shape[0] != y2d.shape[0]:
        raise ValueError(
            f"dimension mismatch: {x2d.shape[0]} inputs vs {y2d.shape[0]} targets"
        )
    out_dim = layers[-1].out_dim
    if y2d.shape[1] != out_dim:
        raise ValueError(
            f"dimension mismatch: network outputs size {out_dim}, targets are "
            f"size {y2d.shape[1]}"
        )
    acts = _forward_trace(layers, x2d)
    batch, _ = y2d.shape
    loss = float(np.mean((acts[-1] - y2d) ** 2))

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(layers)
    # dL/da for the output layer; the 1/(batch*out_dim) folds the mean in.
    delta = 2.0 * (acts[-1] - y2d) / (batch * out_dim)
    for k in range(len(layers) - 1, -1, -1):
        layer = layers[k]
        if layer.activation == TANH:
            delta = delta * (1.0 - acts[k + 1] ** 2)
        grads[k] = (delta.T @ acts[k], delta.sum(axis=0))
        if k > 0:
            delta = delta @ layer.weights
    return loss, grads


def backward(layers: list[DenseLayer], x, y) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradients of mse(forward(x), y) w.r.t. every weight and bias."""
    return loss_and_gradients(layers, x, y)[1]


def sgd_step(
    layers: list[DenseLayer],
    grads: list[tuple[np.ndarray, np.ndarray]],
    state: TrainState,
    config: TrainConfig,
) -> None:
    """Momentum update, in place.

    velocity <- -lr * grad + momentum * velocity; parameter <- parameter +
    velocity. With momentum 0 this is plain gradient descent.
    """
    if len(grads) != len(layers) or len(state.velocities) != len(layers):
        raise ValueError("gradients/state do not match the layer list")
    lr, mu = config.learning_rate, config.momentum
    for layer, (gw, gb), (vw, vb) in zip(layers, grads, state.velocities):
        if gw.shape != layer.weights.shape or gb.shape != layer.biases.shape:
            raise ValueError("gradient shape does not match parameters")
        vw *= mu
        vw -= lr * gw
        vb *= mu
        vb -= lr * gb
        layer.weights += vw
        layer.biases += vb


def train_epochs(
    layers: list[DenseLayer],
    inputs: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
    shuffle_rng: np.random.Generator | None = None,
) -> list[float]:
    """Mini-batch SGD over the given (input, target) pairs, in place.

    Each epoch reshuffles the sample order with a generator seeded from the
    config, walks batches of ``batch_size`` (the trailing short batch
    included) and records the mean per-sample loss. Stops early once the
    epoch loss improves by less than ``early_stop_tol`` for
    ``early_stop_patience`` consecutive epochs.

    Returns the epoch loss history; ``layers`` are updated in place.
    """
    X = as_float_matrix(inputs, "inputs")
    Y = as_float_matrix(targets, "targets")
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    if Y.shape[0] != n:
        raise ValueError(f"dimension mismatch: {n} inputs vs {Y.shape[0]} targets")
    rng = shuffle_rng if shuffle_rng is not None else np.random.default_rng(config.rng_seed)
    state = TrainState.zeros_like(layers)
    stale = 0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            loss, grads = loss_and_gradients(layers, X[idx], Y[idx])
            sgd_step(layers, grads, state, config)
            total += loss * idx.shape[0]
        epoch_loss = total / n
        prev = state.epoch_losses[-1] if state.epoch_losses else None
        state.epoch_losses.append(epoch_loss)
        if prev is not None and (prev - epoch_loss) < config.early_stop_tol:
            stale += 1
            if config.early_stop_patience > 0 and stale >= config.early_stop_patience:
                break
        else:
            stale = 0
    return state.epoch_losses
