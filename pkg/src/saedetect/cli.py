"""Command-line pipeline: gen-data, train, fit-thresholds, detect,
simulate, plot-data and correlate.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Every failure writes a single-line reason to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import io as mio
from . import stack, synth
from .estimator import StackedAutoencoder
from .signals import ChannelSeries, RestParams, correlation_matrix, detect_resting, segment
from .stream import (
    StreamDetector,
    TransmissionSegment,
    WindowVerdict,
    bandwidth_report,
    batch_verdicts,
    first_alarm_index,
)
from .thresholds import DEFAULT_PERCENTILE, fit_thresholds


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this pipeline reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="saedetect", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    g = sub.add_parser("gen-data", parents=[], help="write a synthetic labeled corpus")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--healthy", type=int, default=6)
    g.add_argument("--faults", type=int, default=3)
    g.add_argument("--duration-s", type=float, default=300.0)
    g.add_argument("--rate", type=float, default=100.0)
    g.add_argument("--rest-streams", type=int, default=0,
                   help="healthy streams that include a mid-stream stoppage")

    t = sub.add_parser("train", help="train a stacked model on healthy data")
    t.add_argument("--input", required=True, help="healthy CSV file(s)", nargs="+")
    t.add_argument("--channel", default=None)
    t.add_argument("--window", type=int, default=500,
                   help="window size in samples (250/500/1000 are the stock geometries)")
    t.add_argument("--epochs", type=int, default=200)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--momentum", type=float, default=0.9)
    t.add_argument("--batch", type=int, default=32)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--rest-level", type=float, default=0.0)
    t.add_argument("--out", required=True, help="model file to write")

    f = sub.add_parser("fit-thresholds", help="fit traffic-light thresholds from healthy data")
    f.add_argument("--model", required=True)
    f.add_argument("--input", required=True, nargs="+")
    f.add_argument("--channel", default=None)
    f.add_argument("--percentile", type=float, default=DEFAULT_PERCENTILE)
    f.add_argument("--out", default=None, help="defaults to rewriting --model")

    d = sub.add_parser("detect", help="run the streaming detector over a recorded stream")
    d.add_argument("--model", required=True)
    d.add_argument("--input", required=True)
    d.add_argument("--channel", default=None)
    d.add_argument("--window", type=int, default=None,
                   help="must match the model's window size if given")
    d.add_argument("--t-pre-min", type=float, default=2.0)
    d.add_argument("--t-post-min", type=float, default=2.0)
    d.add_argument("--alarm-red-run", type=int, default=3)
    d.add_argument("--alarm-amber-run", type=int, default=12)
    d.add_argument("--stream-id", default=None)
    d.add_argument("--no-samples", action="store_true", help="omit raw samples from segments")
    d.add_argument("--out", required=True, help="prefix for .events.csv and .segments.jsonl")

    s = sub.add_parser("simulate", help="end-to-end corpus, training and lead-time report")
    s.add_argument("--out", required=True, help="working directory")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--window", type=int, default=500)
    s.add_argument("--healthy", type=int, default=6)
    s.add_argument("--faults", type=int, default=3)
    s.add_argument("--duration-s", type=float, default=300.0)
    s.add_argument("--epochs", type=int, default=30)
    s.add_argument("--lr", type=float, default=0.1)
    s.add_argument("--momentum", type=float, default=0.9)
    s.add_argument("--batch", type=int, default=32)
    s.add_argument("--percentile", type=float, default=DEFAULT_PERCENTILE)
    s.add_argument("--t-pre-min", type=float, default=2.0)
    s.add_argument("--t-post-min", type=float, default=2.0)

    pl = sub.add_parser("plot-data", help="export per-window errors and thresholds")
    pl.add_argument("--model", required=True)
    pl.add_argument("--input", required=True)
    pl.add_argument("--channel", default=None)
    pl.add_argument("--out", required=True)

    c = sub.add_parser("correlate", help="print the channel correlation matrix")
    c.add_argument("--input", required=True)
    return p


def _training_windows(series_list: list[ChannelSeries], window: int, rest_level: float):
    """Windows from healthy series with resting windows excluded."""
    all_windows = []
    raw = []
    for series in series_list:
        raw.append(series.samples)
        all_windows.extend(segment(series, window))
    raw_min = min(float(a.min()) for a in raw)
    raw_max = max(float(a.max()) for a in raw)
    rest = RestParams(rest_level, 0.01 * (raw_max - raw_min))
    kept = [w.values for w in all_windows if not detect_resting(w, rest)]
    if not kept:
        raise mio.DataError("no non-resting windows available for training")
    return np.array(kept), rest


def _cmd_gen_data(args) -> int:
    healthy = synth.healthy_scenarios(
        args.healthy, args.duration_s, args.seed, args.rate, rest_streams=args.rest_streams
    )
    faults = synth.fault_scenarios(args.faults, args.duration_s, args.seed + 1, args.rate)
    manifest = synth.generate_corpus(healthy, faults, args.out)
    print(f"wrote {len(manifest['files'])} streams to {args.out}")
    return 0


def _cmd_train(args) -> int:
    series_list = [mio.read_csv(p, args.channel) for p in args.input]
    X, rest = _training_windows(series_list, args.window, args.rest_level)
    est = StackedAutoencoder(
        learning_rate=args.lr,
        momentum=args.momentum,
        epochs=args.epochs,
        batch_size=args.batch,
        random_state=args.seed,
    )
    est.fit(X)
    metadata = {
        "rng_seed": args.seed,
        "train_config": {
            "learning_rate": args.lr,
            "momentum": args.momentum,
            "epochs": args.epochs,
            "batch_size": args.batch,
        },
        "n_training_windows": int(X.shape[0]),
        "data_sha256": hashlib.sha256(np.ascontiguousarray(X).tobytes()).hexdigest(),
        "sample_rate_hz": series_list[0].sample_rate_hz,
        "channel": series_list[0].name,
    }
    mio.save_model(mio.ModelBundle(est.model_, None, rest, metadata), args.out)
    final_losses = [h[-1] for h in est.stage_losses_] + [est.decoder_losses_[-1]]
    print(f"trained {est.spec_.window_size}-window stack; stage losses: "
          + " ".join(f"{l:.3g}" for l in final_losses))
    print(f"model written to {args.out}")
    return 0


def _healthy_errors(bundle: mio.ModelBundle, series_list: list[ChannelSeries]) -> np.ndarray:
    errors = []
    for series in series_list:
        verdicts = batch_verdicts(
            series.samples, bundle.model, _scoring_thresholds(bundle), bundle.rest,
            series.sample_rate_hz, series.start_time,
        )
        errors.extend(v.error for v in verdicts if v.error >= 0)
    if not errors:
        raise mio.DataError("no non-resting windows in threshold-fitting data")
    return np.array(errors)


def _scoring_thresholds(bundle: mio.ModelBundle):
    # scoring needs some thresholds object for band labels; fitting only
    # reads the errors, so a placeholder is fine when none are stored yet
    from .thresholds import ThresholdSet

    return bundle.thresholds or ThresholdSet(0.0, float("inf"))


def _cmd_fit_thresholds(args) -> int:
    bundle = mio.load_model(args.model)
    series_list = [mio.read_csv(p, args.channel) for p in args.input]
    errors = _healthy_errors(bundle, series_list)
    thresholds = fit_thresholds(errors, args.percentile)
    bundle.thresholds = thresholds
    bundle.metadata = dict(bundle.metadata)
    bundle.metadata["threshold_percentile"] = args.percentile
    bundle.metadata["threshold_windows"] = int(errors.shape[0])
    mio.save_model(bundle, args.out or args.model)
    print(f"green={thresholds.green!r} red={thresholds.red!r} from {errors.shape[0]} windows")
    return 0


def _require_thresholds(bundle: mio.ModelBundle):
    if bundle.thresholds is None:
        raise mio.DataError("model has no thresholds; run fit-thresholds first")
    return bundle.thresholds


def _cmd_detect(args) -> int:
    bundle = mio.load_model(args.model)
    thresholds = _require_thresholds(bundle)
    if args.window is not None and args.window != bundle.model.spec.window_size:
        raise mio.DataError(
            f"window size {args.window} does not match the model's "
            f"{bundle.model.spec.window_size}"
        )
    series = mio.read_csv(args.input, args.channel)
    detector = StreamDetector(
        bundle.model,
        thresholds,
        series.sample_rate_hz,
        t_pre_s=args.t_pre_min * 60.0,
        t_post_s=args.t_post_min * 60.0,
        red_run_alarm=args.alarm_red_run,
        amber_run_alarm=args.alarm_amber_run,
        rest=bundle.rest,
        start_time=series.start_time,
    )
    emissions = detector.run(series.samples)
    verdicts = [e for e in emissions if isinstance(e, WindowVerdict)]
    segments = [e for e in emissions if isinstance(e, TransmissionSegment)]
    stream_id = args.stream_id or Path(args.input).stem
    mio.write_events_csv(f"{args.out}.events.csv", stream_id, verdicts)
    mio.write_segments_jsonl(
        f"{args.out}.segments.jsonl", stream_id, segments,
        include_samples=not args.no_samples,
    )
    report = bandwidth_report(len(series), segments)
    print(
        f"windows={len(verdicts)} segments={report['segment_count']} "
        f"transmitted_fraction={report['transmitted_fraction']:.6f}"
    )
    return 0


def _cmd_plot_data(args) -> int:
    bundle = mio.load_model(args.model)
    thresholds = _require_thresholds(bundle)
    series = mio.read_csv(args.input, args.channel)
    verdicts = batch_verdicts(
        series.samples, bundle.model, thresholds, bundle.rest,
        series.sample_rate_hz, series.start_time,
    )
    mio.export_plot_data(args.out, verdicts, thresholds)
    print(f"wrote {len(verdicts)} rows to {args.out}")
    return 0


def _cmd_correlate(args) -> int:
    channels = mio.read_all_channels(args.input)
    matrix = correlation_matrix(channels)
    width = max(len(n) for n in matrix.channel_names)
    header = " " * (width + 1) + " ".join(f"{n:>{width}}" for n in matrix.channel_names)
    print(header)
    for name, row in zip(matrix.channel_names, matrix.values):
        print(f"{name:>{width}} " + " ".join(f"{v:{width}.4f}" for v in row))
    return 0


def _cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus_dir = out / "corpus"
    healthy = synth.healthy_scenarios(args.healthy, args.duration_s, args.seed)
    faults = synth.fault_scenarios(args.faults, args.duration_s, args.seed + 1)
    manifest = synth.generate_corpus(healthy, faults, corpus_dir)

    healthy_files = [f for f in manifest["files"] if f["kind"] == "healthy"]
    fault_files = [f for f in manifest["files"] if f["kind"] == "fault"]
    series_list = [mio.read_csv(corpus_dir / f["path"]) for f in healthy_files]
    X, rest = _training_windows(series_list, args.window, 0.0)
    est = StackedAutoencoder(
        learning_rate=args.lr, momentum=args.momentum, epochs=args.epochs,
        batch_size=args.batch, random_state=args.seed,
    )
    est.fit(X)
    errors = np.concatenate(
        [
            [v.error for v in batch_verdicts(
                s.samples, est.model_, _scoring_thresholds(
                    mio.ModelBundle(est.model_, None, rest, {})
                ), rest, s.sample_rate_hz) if v.error >= 0]
            for s in series_list
        ]
    )
    thresholds = fit_thresholds(errors, args.percentile)
    bundle = mio.ModelBundle(est.model_, thresholds, rest, {"rng_seed": args.seed})
    mio.save_model(bundle, out / "model.json")

    report = {"healthy": [], "faults": [], "window": args.window}
    for f in healthy_files + fault_files:
        series = mio.read_csv(corpus_dir / f["path"])
        detector = StreamDetector(
            est.model_, thresholds, series.sample_rate_hz,
            t_pre_s=args.t_pre_min * 60.0, t_post_s=args.t_post_min * 60.0, rest=rest,
        )
        emissions = detector.run(series.samples)
        verdicts = [e for e in emissions if isinstance(e, WindowVerdict)]
        segments = [e for e in emissions if isinstance(e, TransmissionSegment)]
        bw = bandwidth_report(len(series), segments)
        entry = {"path": f["path"], **bw}
        if f["fault"] is None:
            report["healthy"].append(entry)
        else:
            bands = [v.band for v in verdicts]
            idx = first_alarm_index(bands, amber_run=None)
            alarm_s = None if idx is None else verdicts[idx].timestamp + args.window / series.sample_rate_hz
            failure_s = f["fault"]["failure_s"]
            onset_s = f["fault"]["onset_s"]
            entry["alarm_s"] = alarm_s
            entry["detected_before_failure"] = alarm_s is not None and alarm_s < failure_s
            entry["lead_s"] = None if alarm_s is None else failure_s - alarm_s
            entry["lead_fraction_of_ramp"] = (
                None if alarm_s is None else (failure_s - alarm_s) / (failure_s - onset_s)
            )
            report["faults"].append(entry)

    leads = [e["lead_fraction_of_ramp"] for e in report["faults"] if e["lead_s"] is not None]
    report["summary"] = {
        "detected": sum(1 for e in report["faults"] if e["detected_before_failure"]),
        "fault_streams": len(report["faults"]),
        "median_lead_fraction": float(np.median(leads)) if leads else None,
        "healthy_segments": sum(e["segment_count"] for e in report["healthy"]),
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    s = report["summary"]
    print(
        f"detected {s['detected']}/{s['fault_streams']} faults before failure; "
        f"median lead {s['median_lead_fraction'] if s['median_lead_fraction'] is None else round(s['median_lead_fraction'], 3)} "
        f"of ramp; {s['healthy_segments']} false-alarm segments on healthy streams"
    )
    print(f"report written to {out / 'report.json'}")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "fit-thresholds": _cmd_fit_thresholds,
    "detect": _cmd_detect,
    "simulate": _cmd_simulate,
    "plot-data": _cmd_plot_data,
    "correlate": _cmd_correlate,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a command is required", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (mio.DataError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
