"""Synthetic field-current scenarios: healthy operation, rest periods and
parameterized degradation faults.

Generation is fully seeded (numpy PCG64) and byte-reproducible; the corpus
manifest records the generator name, every seed and the ground-truth fault
intervals so detection lead times can be measured against them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .signals import ChannelSeries

PRNG_NAME = "numpy-pcg64"
DEFAULT_CHANNEL = "actual_field_current"


@dataclass(frozen=True)
class FaultSpec:
    """Degradation ramp: drift, growing oscillation and spikes.

    Effects ramp linearly from zero at ``onset_s`` to full strength at
    ``failure_s`` (the breakdown instant) and stay at full strength after.
    """

    onset_s: float
    failure_s: float
    drift_rate: float = 0.02
    oscillation_gain: float = 2.0
    spike_rate_hz: float = 0.3

    def __post_init__(self):
        if not (self.onset_s < self.failure_s):
            raise ValueError(
                f"fault onset must precede failure, got {self.onset_s} -> {self.failure_s}"
            )
        if self.spike_rate_hz < 0:
            raise ValueError("spike_rate_hz must be >= 0")

    @property
    def ramp_s(self) -> float:
        return self.failure_s - self.onset_s


@dataclass(frozen=True)
class ScenarioSpec:
    """One generated stream: base tone stack, noise, rests, optional fault."""

    duration_s: float
    sample_rate_hz: float = 100.0
    baseline: float = 40.0
    periodic_components: tuple = ()
    noise_sigma: float = 0.25
    rest_intervals: tuple = ()
    rest_level: float = 0.0
    fault: FaultSpec | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.duration_s <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("duration_s and sample_rate_hz must be positive")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        object.__setattr__(
            self,
            "periodic_components",
            tuple((float(a), float(f), float(p)) for a, f, p in self.periodic_components),
        )
        rests = tuple((float(s), float(e)) for s, e in self.rest_intervals)
        prev_end = 0.0
        for s, e in rests:
            if not (0.0 <= s < e <= self.duration_s):
                raise ValueError(f"rest interval ({s}, {e}) outside stream duration")
            if s < prev_end:
                raise ValueError(f"rest intervals overlap at {s}")
            prev_end = e
        object.__setattr__(self, "rest_intervals", rests)
        if self.fault is not None and self.fault.failure_s > self.duration_s:
            raise ValueError("fault failure_s beyond stream duration")


def generate(spec: ScenarioSpec, name: str = DEFAULT_CHANNEL) -> ChannelSeries:
    """Render a scenario to a channel, deterministically for a fixed seed."""
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    rng = np.random.default_rng(spec.rng_seed)

    x = np.full(n, spec.baseline, dtype=float)
    for amp, freq, phase in spec.periodic_components:
        x += amp * np.sin(2.0 * np.pi * freq * t + phase)
    if spec.noise_sigma > 0:
        x += rng.normal(0.0, spec.noise_sigma, n)

    if spec.fault is not None:
        f = spec.fault
        ramp = np.clip((t - f.onset_s) / f.ramp_s, 0.0, 1.0)
        x += np.where(t >= f.onset_s, f.drift_rate * (t - f.onset_s), 0.0)
        # two incommensurate tones give the growing swings an erratic beat
        f1 = rng.uniform(3.0, 5.0)
        f2 = rng.uniform(6.0, 9.0)
        p1, p2 = rng.uniform(0.0, 2.0 * np.pi, 2)
        swing = np.sin(2.0 * np.pi * f1 * t + p1) * (0.6 + 0.4 * np.sin(2.0 * np.pi * f2 * t + p2))
        x += f.oscillation_gain * ramp * swing
        if f.spike_rate_hz > 0:
            span = spec.duration_s - f.onset_s
            n_spikes = rng.poisson(f.spike_rate_hz * span)
            times = np.sort(rng.uniform(f.onset_s, spec.duration_s, n_spikes))
            signs = rng.choice([-1.0, 1.0], n_spikes)
            sizes = 1.0 + np.abs(rng.normal(0.0, 1.0, n_spikes))
            decay = np.exp(-np.arange(5) / 1.5)
            for ts, sign, size in zip(times, signs, sizes):
                i = int(ts * spec.sample_rate_hz)
                r = (ts - f.onset_s) / f.ramp_s if ts < f.failure_s else 1.0
                pulse = sign * size * f.oscillation_gain * r * decay
                j = min(i + 5, n)
                x[i:j] += pulse[: j - i]

    for s, e in spec.rest_intervals:
        x[int(round(s * spec.sample_rate_hz)) : int(round(e * spec.sample_rate_hz))] = spec.rest_level

    return ChannelSeries(name, spec.sample_rate_hz, x, start_time=0.0)


def healthy_scenarios(
    count: int,
    duration_s: float,
    base_seed: int,
    sample_rate_hz: float = 100.0,
    rest_streams: int = 0,
) -> list[ScenarioSpec]:
    """A family of healthy streams with seeded per-stream variation."""
    specs = []
    for i in range(count):
        rng = np.random.default_rng((base_seed, i))
        rests = ()
        if i < rest_streams:
            start = rng.uniform(0.3, 0.5) * duration_s
            rests = ((start, start + rng.uniform(0.1, 0.15) * duration_s),)
        specs.append(
            ScenarioSpec(
                duration_s=duration_s,
                sample_rate_hz=sample_rate_hz,
                baseline=40.0 + rng.uniform(-2.0, 2.0),
                periodic_components=(
                    (1.2 + rng.uniform(-0.3, 0.3), 0.9 + rng.uniform(-0.1, 0.1), rng.uniform(0, 2 * np.pi)),
                    (0.5 + rng.uniform(-0.15, 0.15), 2.3 + rng.uniform(-0.2, 0.2), rng.uniform(0, 2 * np.pi)),
                ),
                noise_sigma=0.25 + rng.uniform(-0.05, 0.05),
                rest_intervals=rests,
                rng_seed=int(rng.integers(0, 2**31)),
            )
        )
    return specs


def fault_scenarios(
    count: int,
    duration_s: float,
    base_seed: int,
    sample_rate_hz: float = 100.0,
    onset_frac: float = 0.45,
    failure_frac: float = 0.95,
    drift_scale: float = 1.0,
) -> list[ScenarioSpec]:
    """Degrading streams sharing the healthy family's base behavior."""
    healthy = healthy_scenarios(count, duration_s, base_seed, sample_rate_hz)
    specs = []
    for i, base in enumerate(healthy):
        rng = np.random.default_rng((base_seed, 1_000_000 + i))
        onset = (onset_frac + rng.uniform(-0.05, 0.05)) * duration_s
        fault = FaultSpec(
            onset_s=onset,
            failure_s=failure_frac * duration_s,
            drift_rate=drift_scale * float(rng.choice([-1.0, 1.0])) * rng.uniform(0.015, 0.03),
            oscillation_gain=drift_scale * rng.uniform(2.0, 3.5),
            spike_rate_hz=rng.uniform(0.2, 0.5),
        )
        specs.append(
            ScenarioSpec(
                duration_s=base.duration_s,
                sample_rate_hz=base.sample_rate_hz,
                baseline=base.baseline,
                periodic_components=base.periodic_components,
                noise_sigma=base.noise_sigma,
                fault=fault,
                rng_seed=int(rng.integers(0, 2**31)),
            )
        )
    return specs


def _spec_manifest(spec: ScenarioSpec) -> dict:
    entry: dict = {
        "seed": spec.rng_seed,
        "duration_s": spec.duration_s,
        "sample_rate_hz": spec.sample_rate_hz,
        "rest_intervals": [list(r) for r in spec.rest_intervals],
        "fault": None,
    }
    if spec.fault is not None:
        f = spec.fault
        entry["fault"] = {
            "onset_s": f.onset_s,
            "failure_s": f.failure_s,
            "drift_rate": f.drift_rate,
            "oscillation_gain": f.oscillation_gain,
            "spike_rate_hz": f.spike_rate_hz,
        }
    return entry


def generate_corpus(
    healthy_specs: list[ScenarioSpec],
    fault_specs: list[ScenarioSpec],
    out_dir,
    channel: str = DEFAULT_CHANNEL,
) -> dict:
    """Write scenario CSVs plus a ground-truth manifest; returns the manifest.

    File contents are byte-identical across runs for the same specs.
    """
    from .io import write_csv

    if not healthy_specs:
        raise ValueError("need at least one healthy scenario")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": "saedetect-corpus",
        "format_version": 1,
        "prng": PRNG_NAME,
        "channel": channel,
        "files": [],
    }
    for kind, specs in (("healthy", healthy_specs), ("fault", fault_specs)):
        for i, spec in enumerate(specs):
            fname = f"{kind}_{i:03d}.csv"
            series = generate(spec, channel)
            write_csv(out / fname, {channel: series.samples}, spec.sample_rate_hz)
            entry = _spec_manifest(spec)
            entry["path"] = fname
            entry["kind"] = kind
            manifest["files"].append(entry)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest
