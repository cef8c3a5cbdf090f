"""File formats: channel CSVs, the versioned model document, event and
segment records, and plot-data export.

All numeric output uses Python's shortest round-trip float repr, so every
format re-reads bit-exactly and repeated runs from the same seeds produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import numpy as np

from . import nn
from .signals import ChannelSeries, NormStats, RestParams
from .stack import StackedModel, StackSpec
from .stream import TransmissionSegment, WindowVerdict
from .thresholds import ThresholdSet

MODEL_FORMAT = "saedetect-model"
MODEL_FORMAT_VERSION = 1


class DataError(ValueError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class ModelFormatError(DataError):
    """Unreadable, truncated or wrong-version model file."""


def default_channel(names) -> str | None:
    """First channel whose name mentions the field current, if any."""
    for name in names:
        if "field current" in name.lower().replace("_", " "):
            return name
    return None


def _parse_timestamp(cell: str, lineno: int) -> float:
    try:
        return float(cell)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(cell.replace("Z", "+00:00"))
    except ValueError:
        raise DataError(f"unparseable timestamp {cell!r} at line {lineno}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _read_table(path) -> tuple[list[str], list[float], list[list[str]], list[int]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty CSV file: {path}")
        if len(header) < 2:
            raise DataError(f"CSV needs a timestamp column plus at least one channel: {path}")
        times: list[float] = []
        rows: list[list[str]] = []
        linenos: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"row has {len(row)} cells, expected {len(header)}, at line {lineno}"
                )
            times.append(_parse_timestamp(row[0], lineno))
            rows.append(row[1:])
            linenos.append(lineno)
    if len(rows) < 2:
        raise DataError(f"need at least 2 data rows to establish the sample rate: {path}")
    return header[1:], times, rows, linenos


def _column(rows, linenos, col: int, name: str) -> np.ndarray:
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        try:
            v = float(row[col])
        except ValueError:
            raise DataError(f"non-numeric value {row[col]!r} in '{name}' at line {linenos[i]}")
        if not np.isfinite(v):
            raise DataError(f"non-finite value {row[col]!r} in '{name}' at line {linenos[i]}")
        out[i] = v
    return out


def _sample_rate(times: list[float], expected_rate_hz: float | None, path) -> float:
    dts = np.diff(times)
    if expected_rate_hz is not None:
        rate = float(expected_rate_hz)
    else:
        median_dt = float(np.median(dts))
        if median_dt <= 0:
            raise DataError(f"timestamps not increasing in {path}")
        rate = round(1.0 / median_dt, 6)
    dt = 1.0 / rate
    if np.any(np.abs(dts - dt) > 0.01 * dt):
        worst = int(np.argmax(np.abs(dts - dt)))
        raise DataError(
            f"non-uniform sampling in {path}: interval {dts[worst]:.6g}s at row "
            f"{worst + 2} vs expected {dt:.6g}s (1% jitter allowed)"
        )
    return rate


def read_csv(path, channel: str | None = None, expected_rate_hz: float | None = None) -> ChannelSeries:
    """Load one channel from a header + timestamp + numeric-columns CSV.

    The first column is the timestamp (epoch seconds or ISO-8601); sampling
    must be uniform within 1% jitter. With ``channel=None`` the field
    current column is picked by name.
    """
    names, times, rows, linenos = _read_table(path)
    if channel is None:
        channel = default_channel(names)
        if channel is None:
            raise DataError(
                f"no field-current column found in {path}; available channels: "
                + ", ".join(names)
            )
    if channel not in names:
        raise DataError(
            f"channel '{channel}' not in {path}; available channels: " + ", ".join(names)
        )
    samples = _column(rows, linenos, names.index(channel), channel)
    rate = _sample_rate(times, expected_rate_hz, path)
    return ChannelSeries(channel, rate, samples, start_time=times[0])


def read_all_channels(path, expected_rate_hz: float | None = None) -> list[ChannelSeries]:
    """Load every channel column of a CSV as separate series."""
    names, times, rows, linenos = _read_table(path)
    rate = _sample_rate(times, expected_rate_hz, path)
    return [
        ChannelSeries(name, rate, _column(rows, linenos, i, name), start_time=times[0])
        for i, name in enumerate(names)
    ]


def write_csv(path, channels: Mapping[str, np.ndarray], sample_rate_hz: float, start_time: float = 0.0) -> None:
    """Write aligned channels with an epoch-seconds timestamp column."""
    names = list(channels)
    arrays = [np.asarray(channels[n], dtype=float) for n in names]
    n = arrays[0].shape[0]
    if any(a.shape[0] != n for a in arrays):
        raise ValueError("all channels must have equal length")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["timestamp"] + names) + "\n")
        for i in range(n):
            t = start_time + i / sample_rate_hz
            fh.write(",".join([repr(t)] + [repr(float(a[i])) for a in arrays]) + "\n")


# -- model persistence ------------------------------------------------------


@dataclass
class ModelBundle:
    """Everything the detector needs, as persisted in one model file."""

    model: StackedModel
    thresholds: ThresholdSet | None
    rest: RestParams
    metadata: dict


def _layer_doc(layer: nn.DenseLayer) -> dict:
    return {
        "activation": layer.activation,
        "weights": [[float(v) for v in row] for row in layer.weights],
        "biases": [float(v) for v in layer.biases],
    }


def _layer_from_doc(doc: dict) -> nn.DenseLayer:
    try:
        return nn.DenseLayer(
            np.array(doc["weights"], dtype=float),
            np.array(doc["biases"], dtype=float),
            doc["activation"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad layer record in model file: {exc}")


def save_model(bundle: ModelBundle, path) -> None:
    """Write the versioned model document (JSON, lossless floats)."""
    m = bundle.model
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "spec": {
            "window_size": m.spec.window_size,
            "encoder_dims": list(m.spec.encoder_dims),
            "final_hidden": m.spec.final_hidden,
        },
        "normalization": {"min": m.norm_stats.min, "max": m.norm_stats.max},
        "resting": {"level": bundle.rest.level, "tolerance": bundle.rest.tolerance},
        "encoders": [_layer_doc(l) for l in m.encoders],
        "decoder": [_layer_doc(l) for l in m.decoder],
        "thresholds": None
        if bundle.thresholds is None
        else {
            "green": bundle.thresholds.green,
            "red": bundle.thresholds.red,
            "resting_sentinel": bundle.thresholds.resting_sentinel,
        },
        "metadata": bundle.metadata,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path) -> ModelBundle:
    """Read a model document back, bit-exactly; rejects unknown versions."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"truncated or corrupt model file {path}: {exc}")
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path} is not a saedetect model file")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {version}; this build reads version "
            f"{MODEL_FORMAT_VERSION}"
        )
    try:
        spec = StackSpec(
            doc["spec"]["window_size"],
            tuple(doc["spec"]["encoder_dims"]),
            doc["spec"]["final_hidden"],
        )
        stats = NormStats(doc["normalization"]["min"], doc["normalization"]["max"])
        encoders = [_layer_from_doc(d) for d in doc["encoders"]]
        decoder = [_layer_from_doc(d) for d in doc["decoder"]]
        model = StackedModel(spec, encoders, decoder, stats)
        rest = RestParams(doc["resting"]["level"], doc["resting"]["tolerance"])
        thresholds = None
        if doc["thresholds"] is not None:
            t = doc["thresholds"]
            thresholds = ThresholdSet(t["green"], t["red"], t["resting_sentinel"])
        metadata = doc.get("metadata", {})
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"truncated or corrupt model file {path}: {exc}")
    return ModelBundle(model, thresholds, rest, metadata)


# -- detection output -------------------------------------------------------


def write_events_csv(path, stream_id: str, verdicts: list[WindowVerdict]) -> None:
    """One line per window, in window order; resting carries the sentinel."""
    with open(path, "w", newline="") as fh:
        fh.write("stream_id,window_origin,error,band,timestamp\n")
        for v in verdicts:
            fh.write(f"{stream_id},{v.origin},{v.error!r},{v.band.value},{v.timestamp!r}\n")


def write_segments_jsonl(path, stream_id: str, segments: list[TransmissionSegment], include_samples: bool = True) -> None:
    """One JSON record per transmitted segment."""
    with open(path, "w") as fh:
        for seg in segments:
            rec = {
                "stream_id": stream_id,
                "start_index": seg.start_index,
                "end_index": seg.end_index,
                "trigger_events": [
                    {
                        "window_origin": e.window_origin,
                        "error": e.error,
                        "band": e.band.value,
                        "timestamp": e.timestamp,
                    }
                    for e in seg.trigger_events
                ],
            }
            if include_samples:
                rec["samples"] = [float(s) for s in seg.samples]
            fh.write(json.dumps(rec) + "\n")


def export_plot_data(path, verdicts: list[WindowVerdict], thresholds: ThresholdSet) -> None:
    """Columnar dump sufficient to redraw the reconstruction-error plots."""
    with open(path, "w", newline="") as fh:
        fh.write("window_index,error,band,green_threshold,red_threshold\n")
        for i, v in enumerate(verdicts):
            fh.write(
                f"{i},{v.error!r},{v.band.value},{thresholds.green!r},{thresholds.red!r}\n"
            )
