"""Greedy layer-wise construction of the stacked autoencoder.

Each compression stage is a plain autoencoder trained to reconstruct its
own input; its encoder half is frozen and its hidden codes become the next
stage's training data. No backpropagation ever crosses stage boundaries.
A final two-layer expansion decoder is then trained to rebuild the full
window from the bottleneck code, scored against the original window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .signals import NormStats, fit_norm_stats, scale_to_unit
from .validation import as_float_matrix, as_float_vector

# Canonical encoder geometries for the windows studied on the steel-plant
# drive data; other window sizes fall back to the same reduction ladder
# (roughly 40% narrower per stage, bottleneck near 14% of the window).
_CANONICAL_DIMS = {
    500: (300, 200, 120, 70),
    250: (150, 100, 75),
    1000: (600, 400, 240, 140),
}
_CANONICAL_FINAL_HIDDEN = {500: 50, 250: 50, 1000: 100}
_LADDER_FRACTIONS = (0.6, 0.4, 0.24, 0.14)
MIN_WINDOW_SIZE = 50


@dataclass(frozen=True)
class StackSpec:
    """Architecture of one stacked model: window -> encoder dims -> decoder."""

    window_size: int
    encoder_dims: tuple[int, ...]
    final_hidden: int

    def __post_init__(self):
        object.__setattr__(self, "encoder_dims", tuple(int(d) for d in self.encoder_dims))
        if self.window_size < 1:
            raise ValueError(f"window_size must be positive, got {self.window_size}")
        if not self.encoder_dims:
            raise ValueError("encoder_dims must be non-empty")
        if any(d < 1 for d in self.encoder_dims) or self.final_hidden < 1:
            raise ValueError("all layer dims must be >= 1")
        chain = (self.window_size,) + self.encoder_dims
        if any(b >= a for a, b in zip(chain, chain[1:])):
            raise ValueError(
                f"encoder dims must strictly decrease from the window size, got {chain}"
            )

    @property
    def bottleneck(self) -> int:
        return self.encoder_dims[-1]


@dataclass
class StackedModel:
    """Trained artifact: frozen encoder chain plus the expansion decoder."""

    spec: StackSpec
    encoders: list[nn.DenseLayer]
    decoder: list[nn.DenseLayer]
    norm_stats: NormStats

    def __post_init__(self):
        dims = (self.spec.window_size,) + self.spec.encoder_dims
        if len(self.encoders) != len(self.spec.encoder_dims):
            raise ValueError("encoder count does not match the spec")
        for layer, (n_in, n_out) in zip(self.encoders, zip(dims, dims[1:])):
            if (layer.in_dim, layer.out_dim) != (n_in, n_out):
                raise ValueError(
                    f"encoder shape {(layer.in_dim, layer.out_dim)} does not match "
                    f"spec {(n_in, n_out)}"
                )
        if len(self.decoder) != 2:
            raise ValueError("final decoder must be exactly two layers")
        hid, out = self.decoder
        expected = (self.spec.bottleneck, self.spec.final_hidden, self.spec.window_size)
        if (hid.in_dim, hid.out_dim, out.out_dim) != expected or out.in_dim != hid.out_dim:
            raise ValueError("final decoder shape does not match the spec")


def default_spec(window_size: int) -> StackSpec:
    """Stock geometry for a window size.

    The 250/500/1000 cases use the fixed ladders above; any other size of
    at least 50 samples gets the 500-case fractions applied to its own
    width, with the decoder hidden width at 10% of the window.
    """
    if window_size < MIN_WINDOW_SIZE:
        raise ValueError(f"window too small to stack: {window_size} < {MIN_WINDOW_SIZE}")
    if window_size in _CANONICAL_DIMS:
        return StackSpec(
            window_size,
            _CANONICAL_DIMS[window_size],
            _CANONICAL_FINAL_HIDDEN[window_size],
        )
    dims = []
    for frac in _LADDER_FRACTIONS:
        d = int(round(frac * window_size))
        if dims and d >= dims[-1]:
            d = dims[-1] - 1
        if d < 2:
            break
        dims.append(d)
    final_hidden = max(2, int(round(0.1 * window_size)))
    return StackSpec(window_size, tuple(dims), final_hidden)


def _stage_rngs(config: nn.TrainConfig, stage: int) -> tuple[np.random.Generator, np.random.Generator]:
    # Independent init/shuffle streams per stage so a trained prefix is
    # bit-identical whether or not later stages exist.
    init_rng = np.random.default_rng((config.rng_seed, 2 * stage))
    shuffle_rng = np.random.default_rng((config.rng_seed, 2 * stage + 1))
    return init_rng, shuffle_rng


def train_stack(
    windows: np.ndarray, spec: StackSpec, config: nn.TrainConfig
) -> tuple[list[nn.DenseLayer], list[list[float]]]:
    """Train the encoder chain greedily on normalized healthy windows.

    Stage k is a one-hidden-layer autoencoder fitting its own input; only
    its encoder half survives. Codes for stage k+1 are computed once after
    stage k finishes. Returns the encoders in order plus each stage's epoch
    loss history.
    """
    X = as_float_matrix(windows, "windows")
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if X.shape[1] != spec.window_size:
        raise ValueError(
            f"dimension mismatch: windows are {X.shape[1]} wide, spec expects "
            f"{spec.window_size}"
        )
    encoders: list[nn.DenseLayer] = []
    histories: list[list[float]] = []
    data = X
    dims = (spec.window_size,) + spec.encoder_dims
    for stage, (n_in, n_hid) in enumerate(zip(dims, dims[1:])):
        init_rng, shuffle_rng = _stage_rngs(config, stage)
        ae = [
            nn.init_layer(n_in, n_hid, nn.TANH, init_rng),
            nn.init_layer(n_hid, n_in, nn.TANH, init_rng),
        ]
        histories.append(nn.train_epochs(ae, data, data, config, shuffle_rng))
        encoders.append(ae[0])
        data = nn.dense_forward(ae[0], data)
    return encoders, histories


def train_final_decoder(
    encoders: list[nn.DenseLayer],
    windows: np.ndarray,
    spec: StackSpec,
    config: nn.TrainConfig,
) -> tuple[list[nn.DenseLayer], list[float]]:
    """Train the bottleneck -> hidden -> window expansion decoder.

    Bottleneck codes are computed once through the frozen encoders; the
    decoder's loss compares its output against the original normalized
    window, not the code. The output layer is linear so reconstructions can
    reach the ends of the scaled range.
    """
    X = as_float_matrix(windows, "windows")
    codes = X
    for enc in encoders:
        codes = nn.dense_forward(enc, codes)
    stage = len(encoders)
    init_rng, shuffle_rng = _stage_rngs(config, stage)
    decoder = [
        nn.init_layer(spec.bottleneck, spec.final_hidden, nn.TANH, init_rng),
        nn.init_layer(spec.final_hidden, spec.window_size, nn.IDENTITY, init_rng),
    ]
    history = nn.train_epochs(decoder, codes, X, config, shuffle_rng)
    return decoder, history


@dataclass
class TrainingReport:
    stage_losses: list[list[float]] = field(default_factory=list)
    decoder_losses: list[float] = field(default_factory=list)


def fit_stacked_model(
    raw_windows: np.ndarray, spec: StackSpec, config: nn.TrainConfig
) -> tuple[StackedModel, TrainingReport]:
    """Full training pass from raw (unscaled) healthy windows.

    Computes min-max stats over the windows, scales them to [0, 1], runs
    the greedy stack and then the expansion decoder.
    """
    X = as_float_matrix(raw_windows, "windows")
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    stats = fit_norm_stats(X)
    Xn = scale_to_unit(X, stats)
    encoders, stage_losses = train_stack(Xn, spec, config)
    decoder, decoder_losses = train_final_decoder(encoders, Xn, spec, config)
    model = StackedModel(spec, encoders, decoder, stats)
    return model, TrainingReport(stage_losses, decoder_losses)


def encode(model: StackedModel, x: np.ndarray) -> np.ndarray:
    """Bottleneck code for a normalized window (or batch of windows)."""
    return nn.forward_stack(model.encoders, x)


def reconstruct(model: StackedModel, x: np.ndarray) -> np.ndarray:
    """Decode the bottleneck code back to a full normalized window."""
    return nn.forward_stack(model.decoder, encode(model, x))


def reconstruction_error(model: StackedModel, window_values: np.ndarray) -> float:
    """Anomaly score of one normalized window.

    Mean squared distance between the window and its reconstruction through
    the frozen stack; low on healthy data, it climbs when the signal leaves
    the training distribution.
    """
    x = as_float_vector(window_values, "window")
    if x.shape[0] != model.spec.window_size:
        raise ValueError(
            f"dimension mismatch: window has {x.shape[0]} samples, model expects "
            f"{model.spec.window_size}"
        )
    return nn.squared_distance(x, reconstruct(model, x))
