"""Streaming detector with transmission gating.

Samples are pushed one at a time; every full window is classified into a
traffic-light band (resting windows get the sentinel). Sustained anomaly
runs raise an alarm, which opens a transmission segment reaching back
``t_pre`` before the run and forward ``t_post`` after the last anomaly.
Anomalies whose pre/post margins overlap an open segment merge into it,
so emitted segments are exactly the union of the per-episode intervals
and never overlap.

Band runs skip resting windows: a stoppage neither breaks nor extends a
run, and it never resets an open segment's deadline.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .signals import NormStats, RestParams, default_rest_tolerance, scale_to_unit
from .stack import StackedModel, reconstruction_error
from .thresholds import SEVERITY, ThresholdSet, TrafficLight, classify

_ANOMALOUS = (TrafficLight.AMBER, TrafficLight.RED)

DEFAULT_T_PRE_S = 120.0
DEFAULT_T_POST_S = 120.0
DEFAULT_RED_RUN = 3
DEFAULT_AMBER_RUN = 12


class DetectorMode(Enum):
    QUIET = "quiet"
    TRANSMITTING = "transmitting"


@dataclass(frozen=True)
class WindowVerdict:
    """Classification of one completed window (the per-window log record)."""

    origin: int
    error: float
    band: TrafficLight
    timestamp: float


@dataclass(frozen=True)
class AnomalyEvent:
    """An Amber or Red window; Green/Resting windows produce no event."""

    window_origin: int
    error: float
    band: TrafficLight
    timestamp: float

    def __post_init__(self):
        if self.band not in _ANOMALOUS:
            raise ValueError(f"anomaly events must be amber or red, got {self.band}")


@dataclass(frozen=True)
class TransmissionSegment:
    """Raw samples forwarded around an alarmed anomaly episode.

    ``start_index`` and ``end_index`` are sample indices into the stream,
    end exclusive; ``trigger_events`` are the anomaly windows contained in
    the span, each covered in full.
    """

    start_index: int
    end_index: int
    samples: np.ndarray = field(repr=False)
    trigger_events: tuple[AnomalyEvent, ...] = ()

    def __len__(self) -> int:
        return self.end_index - self.start_index


def window_verdict(
    values: np.ndarray,
    origin: int,
    model: StackedModel,
    thresholds: ThresholdSet,
    rest: RestParams,
    sample_rate_hz: float,
    start_time: float = 0.0,
) -> WindowVerdict:
    """Classify one raw window; the single scoring path for stream and batch.

    Resting windows short-circuit to the sentinel before any scaling, so a
    stopped machine can never look anomalous.
    """
    ts = start_time + origin / sample_rate_hz
    if bool(np.all(np.abs(values - rest.level) <= rest.tolerance)):
        return WindowVerdict(origin, thresholds.resting_sentinel, TrafficLight.RESTING, ts)
    error = reconstruction_error(model, scale_to_unit(values, model.norm_stats))
    return WindowVerdict(origin, error, classify(error, thresholds), ts)


def batch_verdicts(
    samples: np.ndarray,
    model: StackedModel,
    thresholds: ThresholdSet,
    rest: RestParams,
    sample_rate_hz: float,
    start_time: float = 0.0,
) -> list[WindowVerdict]:
    """Offline per-window classification of a recorded stream.

    Tiles the stream at the model's window size (trailing partial window
    dropped) and scores each slice through the same path the streaming
    detector uses, so the two agree bit for bit.
    """
    arr = np.asarray(samples, dtype=float)
    w = model.spec.window_size
    out = []
    for origin in range(0, arr.shape[0] - w + 1, w):
        out.append(
            window_verdict(
                arr[origin : origin + w], origin, model, thresholds, rest,
                sample_rate_hz, start_time,
            )
        )
    return out


def raise_alarm(
    bands,
    red_run: int = DEFAULT_RED_RUN,
    amber_run: int = DEFAULT_AMBER_RUN,
) -> bool:
    """True when the trailing band run is persistent enough to alarm.

    Fires on ``red_run`` consecutive Red windows or ``amber_run``
    consecutive windows at Amber or worse. Resting windows are skipped:
    they neither break nor extend a run.
    """
    active = [b for b in bands if b is not TrafficLight.RESTING]
    reds = 0
    for b in reversed(active):
        if b is TrafficLight.RED:
            reds += 1
        else:
            break
    if reds >= red_run:
        return True
    ambers = 0
    for b in reversed(active):
        if SEVERITY.get(b, 0) >= SEVERITY[TrafficLight.AMBER]:
            ambers += 1
        else:
            break
    return ambers >= amber_run


def first_alarm_index(
    bands,
    red_run: int = DEFAULT_RED_RUN,
    amber_run: int | None = DEFAULT_AMBER_RUN,
) -> int | None:
    """Index of the first window whose trailing run satisfies the alarm rule.

    Pass ``amber_run=None`` to consider sustained-Red runs only.
    """
    reds = ambers = 0
    for i, b in enumerate(bands):
        if b is TrafficLight.RESTING:
            continue
        if b is TrafficLight.RED:
            reds += 1
        else:
            reds = 0
        if SEVERITY.get(b, 0) >= SEVERITY[TrafficLight.AMBER]:
            ambers += 1
        else:
            ambers = 0
        if reds >= red_run or (amber_run is not None and ambers >= amber_run):
            return i
    return None


@dataclass
class _OpenSegment:
    start: int
    deadline: int
    store: list            # raw samples from ``start`` onward
    triggers: list


@dataclass
class _Candidate:
    # Raw-sample buffer opened when an anomaly run starts outside coverage;
    # promoted to a segment store if the run alarms, dropped otherwise.
    start: int
    store: list


class StreamDetector:
    """Single-stream edge detector; one instance per stream, single owner.

    Feed samples with :meth:`push`; it returns the emissions produced by
    that sample (a :class:`WindowVerdict` when a window completes, plus an
    :class:`AnomalyEvent` for Amber/Red and a :class:`TransmissionSegment`
    when one closes). Call :meth:`flush` at end of stream.

    Memory while quiet is one assembly buffer plus a raw-history ring of
    ``t_pre`` plus one window; an open candidate run or transmission
    segment additionally buffers the raw samples it will emit.
    """

    def __init__(
        self,
        model: StackedModel,
        thresholds: ThresholdSet,
        sample_rate_hz: float,
        t_pre_s: float = DEFAULT_T_PRE_S,
        t_post_s: float = DEFAULT_T_POST_S,
        red_run_alarm: int = DEFAULT_RED_RUN,
        amber_run_alarm: int = DEFAULT_AMBER_RUN,
        rest: RestParams | None = None,
        start_time: float = 0.0,
    ):
        if sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {sample_rate_hz}")
        if red_run_alarm < 1 or amber_run_alarm < 1:
            raise ValueError("alarm run lengths must be >= 1")
        self.model = model
        self.thresholds = thresholds
        self.sample_rate_hz = float(sample_rate_hz)
        self.window_size = model.spec.window_size
        self.pre_samples = int(round(t_pre_s * sample_rate_hz))
        self.post_samples = int(round(t_post_s * sample_rate_hz))
        self.red_run_alarm = red_run_alarm
        self.amber_run_alarm = amber_run_alarm
        self.rest = rest if rest is not None else RestParams(
            0.0, default_rest_tolerance(model.norm_stats)
        )
        self.start_time = start_time

        self._assembly: list[float] = []
        self._ring: deque[float] = deque(maxlen=self.pre_samples + self.window_size)
        self._pos = 0
        self._amber_run = 0
        self._red_run = 0
        self._run_start: int | None = None
        self._run_events: list[AnomalyEvent] = []
        self._recent_events: deque[AnomalyEvent] = deque()
        self._candidate: _Candidate | None = None
        self._segment: _OpenSegment | None = None

    @property
    def mode(self) -> DetectorMode:
        if self._segment is not None and self._pos < self._segment.deadline:
            return DetectorMode.TRANSMITTING
        return DetectorMode.QUIET

    @property
    def samples_seen(self) -> int:
        return self._pos

    def push(self, sample: float) -> list:
        """Consume one raw sample; returns this step's emissions in order."""
        value = float(sample)
        if not math.isfinite(value):
            raise ValueError(f"corrupt sample: {sample!r}")
        self._ring.append(value)
        if self._segment is not None:
            self._segment.store.append(value)
        if self._candidate is not None:
            self._candidate.store.append(value)
        self._assembly.append(value)
        self._pos += 1
        if len(self._assembly) < self.window_size:
            return []
        values = np.array(self._assembly, dtype=float)
        self._assembly.clear()
        return self._complete_window(values, self._pos - self.window_size)

    def run(self, samples) -> list:
        """Push a whole recorded stream and flush; returns all emissions."""
        out = []
        for s in np.asarray(samples, dtype=float):
            out.extend(self.push(s))
        out.extend(self.flush())
        return out

    def flush(self) -> list:
        """Close out the stream; emits the open segment, if any, clamped."""
        self._assembly.clear()
        if self._segment is None:
            return []
        return [self._finalize_segment()]

    # -- internals ---------------------------------------------------------

    def _complete_window(self, values: np.ndarray, origin: int) -> list:
        end = origin + self.window_size
        verdict = window_verdict(
            values, origin, self.model, self.thresholds, self.rest,
            self.sample_rate_hz, self.start_time,
        )
        out: list = [verdict]
        band = verdict.band
        event = None
        if band in _ANOMALOUS:
            event = AnomalyEvent(origin, verdict.error, band, verdict.timestamp)
            out.append(event)
            self._recent_events.append(event)
        horizon = self._pos - (self.pre_samples + self.window_size)
        while self._recent_events and self._recent_events[0].window_origin < horizon:
            self._recent_events.popleft()

        if band is TrafficLight.GREEN:
            self._amber_run = self._red_run = 0
            self._run_start = None
            self._run_events = []
            self._candidate = None
        elif band in _ANOMALOUS:
            if self._amber_run == 0:
                self._run_start = origin
                self._run_events = []
                covered = self._segment is not None and origin < self._segment.deadline
                self._candidate = None if covered else self._open_candidate(origin)
            self._amber_run += 1
            self._red_run = self._red_run + 1 if band is TrafficLight.RED else 0
            self._run_events.append(event)
        # resting: runs, candidate and deadline all carry over unchanged

        seg = self._segment
        if seg is not None and event is not None and origin < seg.deadline:
            # anomaly inside coverage extends the tail, no alarm needed
            seg.deadline = end + self.post_samples
            seg.triggers.append(event)
            self._candidate = None
        elif event is not None and (
            self._red_run >= self.red_run_alarm or self._amber_run >= self.amber_run_alarm
        ):
            if seg is not None and self._run_start - self.pre_samples < seg.deadline:
                # the run's pre-margin overlaps the open segment: merge
                seg.deadline = end + self.post_samples
                seg.triggers.extend(e for e in self._run_events if e not in seg.triggers)
                self._candidate = None
            else:
                if seg is not None:
                    out.append(self._finalize_segment())
                self._open_segment(end)

        seg = self._segment
        if seg is not None and self._pos >= seg.deadline:
            # hold while an unresolved run could still merge into this segment
            run_horizon = self._run_start if self._amber_run > 0 else end
            if run_horizon - self.pre_samples >= seg.deadline:
                out.append(self._finalize_segment())
        return out

    def _open_candidate(self, run_start: int) -> _Candidate:
        start = max(0, run_start - self.pre_samples)
        ring = list(self._ring)
        ring_start = self._pos - len(ring)
        return _Candidate(start=start, store=ring[start - ring_start :])

    def _open_segment(self, run_end: int) -> None:
        cand = self._candidate
        start = cand.start
        triggers = [e for e in self._recent_events if e.window_origin >= start]
        self._segment = _OpenSegment(
            start=start,
            deadline=run_end + self.post_samples,
            store=cand.store,
            triggers=triggers,
        )
        self._candidate = None

    def _finalize_segment(self) -> TransmissionSegment:
        seg = self._segment
        self._segment = None
        end = min(seg.deadline, self._pos)
        samples = np.array(seg.store[: end - seg.start], dtype=float)
        return TransmissionSegment(seg.start, end, samples, tuple(seg.triggers))


def bandwidth_report(stream_length: int, segments) -> dict:
    """Transmitted fraction and segment count for a finished stream.

    Segments must be non-overlapping (adjacency is fine) and inside the
    stream; overlap means the merge logic failed upstream and is an error.
    """
    if stream_length <= 0:
        raise ValueError(f"stream_length must be positive, got {stream_length}")
    spans = sorted(
        (s.start_index, s.end_index) if isinstance(s, TransmissionSegment) else tuple(s)
        for s in segments
    )
    total = 0
    prev_end = 0
    for start, end in spans:
        if start < prev_end:
            raise ValueError(f"overlapping segments at sample {start}")
        if start < 0 or end > stream_length or end < start:
            raise ValueError(f"segment ({start}, {end}) outside stream of {stream_length}")
        total += end - start
        prev_end = end
    return {
        "transmitted_fraction": total / stream_length,
        "segment_count": len(spans),
    }
