"""Command-line interface.

Exit codes: 0 success, 2 validation or parse failure (including
degenerate tracking geometry), 3 pipeline-stage failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import fields
from pathlib import Path

from . import hr_tracker, hrv, metrics, motion, outliers, pipeline, pos, rr, synth, trace_io
from .errors import (
    DegenerateGeometryError,
    NumericalError,
    ParseError,
    PipelineStageError,
    ValidationError,
)

EXIT_VALIDATION = 2
EXIT_PIPELINE = 3


def _load_config(args) -> trace_io.PipelineConfig:
    config = trace_io.load_config(getattr(args, "config", None))
    overrides = {}
    if getattr(args, "no_interp", False):
        overrides["enable_interp"] = False
    if getattr(args, "no_outlier_removal", False):
        overrides["enable_outlier_removal"] = False
    if overrides:
        config = trace_io.config_overrides(config, **overrides)
    return config


def _add_ablation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON pipeline config")
    p.add_argument("--no-interp", action="store_true",
                   help="skip quadratic peak refinement")
    p.add_argument("--no-outlier-removal", action="store_true",
                   help="skip Gaussian outlier pruning")


def _dump_intermediates(diag: pipeline.PipelineDiagnostics, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_io.write_series(out_dir / "pulse_raw.csv", diag.pulse_raw)
    trace_io.write_series(out_dir / "pulse_hr_band.csv", diag.pulse_hr_band)
    trace_io.write_series(out_dir / "hr_curve.csv", diag.hr_curve)
    trace_io.write_series(out_dir / "pulse_second.csv", diag.pulse_second)
    trace_io.write_series(out_dir / "ibi.csv", diag.ibi)
    trace_io.write_series(out_dir / "hrv.csv", diag.hrv_bpm)
    trace_io.write_series(out_dir / "hrv_detrended.csv", diag.hrv_detrended)
    trace_io.write_series(out_dir / "hrv_pruned.csv", diag.hrv_pruned)
    peaks = trace_io.UnevenSeries(
        diag.peaks.times, diag.peaks.raw_indices.astype(float), unit="index"
    )
    trace_io.write_series(out_dir / "peaks.csv", peaks)
    (out_dir / "second_band.json").write_text(
        json.dumps({"low_hz": diag.second_band_hz[0],
                    "high_hz": diag.second_band_hz[1]}) + "\n"
    )


def _cmd_estimate(args) -> int:
    config = _load_config(args)
    trace = trace_io.load_rgb_trace(args.trace)
    segment_id = Path(args.trace).stem
    result = pipeline.run_pipeline(trace, config, segment_id=segment_id)
    if args.dump_intermediates:
        _dump_intermediates(result.diagnostics, Path(args.dump_intermediates))
    payload = {
        "segment_id": segment_id,
        "rr_brpm": result.estimate.rr_brpm,
        "peak_power": result.estimate.peak_power,
        "n_hrv_samples": len(result.diagnostics.hrv_pruned),
        "n_outliers_removed": result.diagnostics.n_outliers_removed,
    }
    print(json.dumps(payload, indent=2))
    return 0


def _segment_ground_truth(trace_path: Path, gt_table: dict[str, float] | None) -> float:
    truth_path = trace_path.with_suffix(".truth.json")
    if gt_table is not None:
        if trace_path.stem not in gt_table:
            raise ValidationError(f"no ground truth for segment '{trace_path.stem}'")
        return gt_table[trace_path.stem]
    if truth_path.exists():
        return float(json.loads(truth_path.read_text())["rr_brpm"])
    raise ValidationError(
        f"no ground truth for '{trace_path.stem}': pass --gt or provide {truth_path.name}"
    )


def _load_gt_table(path) -> dict[str, float]:
    rows = trace_io._read_rows(path, ["segment_id", "rr_brpm"])
    table = {}
    for i, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise ParseError(f"{path}:{i}: expected 2 fields, got {len(row)}")
        table[row[0]] = float(row[1])
    return table


def _cmd_evaluate(args) -> int:
    config = _load_config(args)
    corpus = Path(args.corpus)
    trace_paths = sorted(p for p in corpus.glob("*.csv"))
    if not trace_paths:
        raise ValidationError(f"no trace CSVs found in {corpus}")
    gt_table = _load_gt_table(args.gt) if args.gt else None
    results = []
    for path in trace_paths:
        trace = trace_io.load_rgb_trace(path)
        gt = _segment_ground_truth(path, gt_table)
        run = pipeline.run_pipeline(trace, config, segment_id=path.stem)
        results.append(
            metrics.SegmentResult(
                segment_id=path.stem,
                rr_measured_brpm=run.estimate.rr_brpm,
                rr_ground_truth_brpm=gt,
                n_hrv_samples=len(run.diagnostics.hrv_pruned),
                n_outliers_removed=run.diagnostics.n_outliers_removed,
            )
        )
    report = metrics.compute_metrics(results)
    payload = {
        "mean_error": report.mean_error,
        "sd_error": report.sd_error,
        "rmse": report.rmse,
        "mean_error_rate": report.mean_error_rate,
        "pct_within_1": report.pct_within_1,
        "n_segments": report.n_segments,
        "segments": [
            {
                "segment_id": r.segment_id,
                "rr_measured_brpm": r.rr_measured_brpm,
                "rr_ground_truth_brpm": r.rr_ground_truth_brpm,
                "rr_error_brpm": r.rr_error_brpm,
                "n_hrv_samples": r.n_hrv_samples,
                "n_outliers_removed": r.n_outliers_removed,
            }
            for r in results
        ],
    }
    if args.bland_altman:
        ba = metrics.bland_altman(results)
        with Path(args.bland_altman).open("w", newline="") as fh:
            fh.write("segment_id,mean_brpm,diff_brpm\n")
            for sid, m, d in zip(ba.segment_ids, ba.means, ba.diffs):
                fh.write(f"{sid},{trace_io.FLOAT_FMT % m},{trace_io.FLOAT_FMT % d}\n")
        payload["bland_altman"] = {
            "bias": ba.bias, "loa_lower": ba.loa_lower, "loa_upper": ba.loa_upper,
        }
    if args.report:
        Path(args.report).write_text(json.dumps(payload, indent=2) + "\n")
    print(metrics.format_metrics_row(report))
    return 0


def _cmd_synth(args) -> int:
    raw = json.loads(Path(args.spec).read_text())
    pulse_strength = raw.pop("pulse_strength", 0.01)
    drift = raw.pop("drift", 0.0)
    known = {f.name for f in fields(synth.SynthSpec)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown synth spec keys: {sorted(unknown)}")
    if raw.get("snr_db") is None and "snr_db" in raw:
        raw["snr_db"] = math.inf
    spec = synth.SynthSpec(**raw)
    trace, truth = synth.gen_rgb_trace(spec, pulse_strength=pulse_strength, drift=drift)
    trace_io.write_rgb_trace(args.out_trace, trace)
    if args.out_truth:
        payload = {
            "rr_brpm": truth.rr_brpm,
            "beat_times": truth.beat_times.tolist(),
            "hr_curve": {
                "times": truth.hr_curve.times.tolist(),
                "hr_bpm": truth.hr_curve.hr_bpm.tolist(),
            },
        }
        Path(args.out_truth).write_text(json.dumps(payload) + "\n")
    return 0


def _cmd_track_roi(args) -> int:
    tracks = trace_io.load_point_tracks(args.tracks)
    roi_entries = trace_io.load_roi_csv(args.roi)
    if len(roi_entries) != 1:
        raise ValidationError(f"{args.roi}: expected exactly one initial ROI frame")
    initial = motion.RoiPolygon(roi_entries[0][1])
    polygons = motion.track_roi(initial, tracks)
    frames = list(tracks.frame_range())
    trace_io.write_roi_csv(
        args.out, [(f, p.vertices) for f, p in zip(frames, polygons)]
    )
    return 0


def _cmd_rppg(args) -> int:
    trace = trace_io.load_rgb_trace(args.in_path)
    pulse = pos.pos_extract(trace, args.window_s)
    trace_io.write_series(args.out, pulse)
    return 0


def _cmd_hr(args) -> int:
    pulse = trace_io.load_pulse(args.in_path)
    config = trace_io.PipelineConfig(ridge_transition_penalty=args.penalty)
    curve = hr_tracker.track_hr(pulse, config)
    trace_io.write_series(args.out, curve)
    return 0


def _cmd_hrv(args) -> int:
    pulse = trace_io.load_pulse(args.pulse)
    hr_curve = trace_io.load_hr_curve(args.hr)
    band = hrv.design_second_band(hr_curve, args.offset_bpm, pulse.sample_rate)
    filtered = hrv.zero_phase_bandpass(pulse, band)
    peaks = hrv.detect_peaks(filtered, band)
    if not args.no_interp:
        peaks = hrv.refine_peaks(filtered, peaks)
    series = hrv.detrend_hrv(hrv.ibi_to_hrv(hrv.compute_ibi(peaks)), hr_curve)
    trace_io.write_series(args.out, series)
    return 0


def _cmd_prune(args) -> int:
    series = trace_io.load_uneven_series(args.in_path, unit="bpm")
    fit = outliers.fit_gaussian(series)
    pruned = outliers.prune(series, fit, args.alpha)
    trace_io.write_series(args.out, pruned)
    return 0


def _cmd_rr(args) -> int:
    series = trace_io.load_uneven_series(args.in_path, unit="bpm")
    estimate = rr.estimate_rr(series)
    if args.psd:
        with Path(args.psd).open("w", newline="") as fh:
            fh.write("freq_brpm,power\n")
            for f, p in zip(estimate.psd.freqs_brpm, estimate.psd.power):
                fh.write(f"{trace_io.FLOAT_FMT % f},{trace_io.FLOAT_FMT % p}\n")
    payload = {
        "rr_brpm": estimate.rr_brpm,
        "peak_power": estimate.peak_power,
        "n_samples": len(series),
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rrpipe",
        description="Respiratory rate estimation from face-video rPPG traces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="full pipeline on one rgb trace")
    p.add_argument("--trace", required=True)
    _add_ablation_flags(p)
    p.add_argument("--dump-intermediates", default=None, metavar="DIR")
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("evaluate", help="run a corpus and report error metrics")
    p.add_argument("--corpus", required=True, help="directory of trace CSVs")
    p.add_argument("--gt", default=None,
                   help="segment_id,rr_brpm CSV (default: per-trace .truth.json)")
    p.add_argument("--report", default=None, help="write report JSON here")
    p.add_argument("--bland-altman", default=None, help="write agreement CSV here")
    _add_ablation_flags(p)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic rgb trace + ground truth")
    p.add_argument("--spec", required=True, help="SynthSpec JSON")
    p.add_argument("--out-trace", required=True)
    p.add_argument("--out-truth", default=None)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("track-roi", help="propagate an ROI along point tracks")
    p.add_argument("--tracks", required=True)
    p.add_argument("--roi", required=True, help="initial ROI polygon CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_track_roi)

    p = sub.add_parser("rppg", help="POS pulse extraction from an rgb trace")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window-s", type=float, default=pos.DEFAULT_WINDOW_S)
    p.set_defaults(fn=_cmd_rppg)

    p = sub.add_parser("hr", help="track the HR curve of a pulse signal")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="penalty", type=float, default=0.2)
    p.set_defaults(fn=_cmd_hr)

    p = sub.add_parser("hrv", help="detrended HRV from pulse + HR curve")
    p.add_argument("--pulse", required=True)
    p.add_argument("--hr", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--offset-bpm", type=float, default=30.0)
    p.add_argument("--no-interp", action="store_true")
    p.set_defaults(fn=_cmd_hrv)

    p = sub.add_parser("prune", help="three-sigma Gaussian outlier removal")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=3.0)
    p.set_defaults(fn=_cmd_prune)

    p = sub.add_parser("rr", help="Lomb-Scargle RR estimate of an uneven series")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--psd", default=None, help="also write the power spectrum CSV")
    p.set_defaults(fn=_cmd_rr)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ValidationError, DegenerateGeometryError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PipelineStageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
