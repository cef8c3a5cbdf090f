"""Time-series primitives: channels, fixed-length windows, resting detection,
min-max scaling and cross-channel correlation.

A channel is one uniformly sampled sensor signal (the drive telemetry runs at
100 Hz). Windows are contiguous, fixed-length slices of a channel and are the
unit every model in this package consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .validation import as_float_vector

DEFAULT_SAMPLE_RATE_HZ = 100.0


@dataclass(frozen=True)
class ChannelSeries:
    """One named sensor channel as a uniformly sampled series."""

    name: str
    sample_rate_hz: float
    samples: np.ndarray
    start_time: float = 0.0

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", as_float_vector(self.samples, "samples"))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class Window:
    """A fixed-length slice of a parent series starting at ``origin_index``."""

    values: np.ndarray
    origin_index: int
    is_resting: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", as_float_vector(self.values, "values"))

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class RestParams:
    """Band test for a stopped machine: every sample within ``tolerance`` of ``level``."""

    level: float = 0.0
    tolerance: float = 0.01

    def __post_init__(self):
        if self.tolerance < 0:
            raise ValueError(f"tolerance must be >= 0, got {self.tolerance}")


@dataclass(frozen=True)
class NormStats:
    """Min-max scaling statistics, taken from healthy training data only."""

    min: float
    max: float

    def __post_init__(self):
        if not (self.max > self.min):
            raise ValueError("degenerate scale: max must be strictly greater than min")

    @property
    def span(self) -> float:
        return self.max - self.min


@dataclass(frozen=True)
class CorrelationMatrix:
    channel_names: list[str]
    values: np.ndarray = field(repr=False)


def segment(series: ChannelSeries, window_size: int, stride: int | None = None) -> list[Window]:
    """Tile a series into fixed-length windows.

    Stride defaults to the window size (non-overlapping tiling). Trailing
    samples shorter than one window are dropped, never padded.
    """
    if window_size < 1:
        raise ValueError(f"window_size must be positive, got {window_size}")
    if stride is None:
        stride = window_size
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    n = len(series)
    if n == 0 or window_size > n:
        raise ValueError(
            f"insufficient samples: series has {n}, window_size is {window_size}"
        )
    origins = range(0, n - window_size + 1, stride)
    return [Window(series.samples[o : o + window_size], o) for o in origins]


def detect_resting(window, rest: RestParams) -> bool:
    """True iff every sample sits within ``rest.tolerance`` of ``rest.level``."""
    values = window.values if isinstance(window, Window) else as_float_vector(window)
    return bool(np.all(np.abs(values - rest.level) <= rest.tolerance))


def mark_resting(window: Window, rest: RestParams) -> Window:
    """Return the window with its ``is_resting`` flag set from the band test."""
    return replace(window, is_resting=detect_resting(window, rest))


def default_rest_tolerance(stats: NormStats) -> float:
    # 1% of the healthy-data range; resting periods sit far outside normal swing.
    return 0.01 * stats.span


def fit_norm_stats(values) -> NormStats:
    """Min/max over healthy training data; persisted alongside the model."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("insufficient samples: cannot fit scaling to empty data")
    return NormStats(min=float(arr.min()), max=float(arr.max()))


def scale_to_unit(values: np.ndarray, stats: NormStats) -> np.ndarray:
    """Affine map of raw samples into [0, 1] by (x - min) / (max - min)."""
    return (np.asarray(values, dtype=float) - stats.min) / stats.span


def scale_from_unit(values: np.ndarray, stats: NormStats) -> np.ndarray:
    """Inverse of :func:`scale_to_unit`."""
    return np.asarray(values, dtype=float) * stats.span + stats.min


def normalize(window: Window, stats: NormStats) -> Window:
    """Window-level wrapper around :func:`scale_to_unit`."""
    return replace(window, values=scale_to_unit(window.values, stats))


def denormalize(window: Window, stats: NormStats) -> Window:
    return replace(window, values=scale_from_unit(window.values, stats))


def correlation_matrix(channels: Sequence[ChannelSeries]) -> CorrelationMatrix:
    """Pairwise Pearson correlation between channels, for input selection.

    All channels must be equally long (>= 2 samples) and have nonzero
    variance; a flat channel is reported by name.
    """
    if len(channels) < 2:
        raise ValueError(f"need at least 2 channels, got {len(channels)}")
    length = len(channels[0])
    for ch in channels[1:]:
        if len(ch) != length:
            raise ValueError(
                f"unequal channel lengths: '{channels[0].name}' has {length}, "
                f"'{ch.name}' has {len(ch)}"
            )
    if length < 2:
        raise ValueError(f"need at least 2 samples per channel, got {length}")
    for ch in channels:
        if np.ptp(ch.samples) == 0.0:
            raise ValueError(f"channel '{ch.name}' has zero variance")
    stacked = np.vstack([ch.samples for ch in channels])
    values = np.corrcoef(stacked)
    return CorrelationMatrix([ch.name for ch in channels], values)
