"""Shared data types, file formats, and pipeline configuration.

All CSV files are comma-separated with a mandatory header row. Numeric
fields are written with the ``%.9e`` format (10 significant digits), so
unit-scale series survive a write/read round trip to within 1e-9.

Formats:
    rgb trace      ``frame,t_s,r,g,b``       one row per video frame
    uneven series  ``t_s,value``             irregularly spaced samples
    pulse / HR     ``t_s,value``             uniformly spaced samples
    point tracks   ``frame,point_id,x,y``    a point missing in a frame is omitted
    ROI polygons   ``frame,vertex_id,x,y``   vertex order defines the polygon
    config         JSON object keyed by PipelineConfig field names
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

FLOAT_FMT = "%.9e"

# Accepted inter-sample jitter, relative to the median interval. Frames are
# never resampled; anything within this bound is treated as uniform.
RATE_JITTER_TOL = 0.20


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def _check_strictly_increasing(times: np.ndarray, name: str) -> None:
    if times.size >= 2 and not np.all(np.diff(times) > 0):
        raise ValidationError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class RgbTrace:
    """Per-frame mean ROI color triplets on a nominally uniform time grid."""

    timestamps: np.ndarray  # seconds, strictly increasing
    samples: np.ndarray     # shape (n, 3), mean (r, g, b) per frame

    def __post_init__(self):
        t = _as_float_array(self.timestamps, "timestamps")
        s = _as_float_array(self.samples, "samples")
        if s.ndim != 2 or s.shape[1] != 3:
            raise ValidationError("samples must have shape (n, 3)")
        if len(t) != len(s):
            raise ValidationError("timestamps and samples must have equal length")
        if len(t) < 2:
            raise ValidationError("trace needs at least 2 frames")
        _check_strictly_increasing(t, "timestamps")
        dt = np.diff(t)
        med = float(np.median(dt))
        if np.max(np.abs(dt - med)) > RATE_JITTER_TOL * med:
            raise ValidationError(
                "frame intervals deviate more than "
                f"{RATE_JITTER_TOL:.0%} from the median; trace is not uniform"
            )
        if np.any(s < 0):
            raise ValidationError("channel values must be >= 0")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def start_time(self) -> float:
        return float(self.timestamps[0])

    @property
    def sample_rate(self) -> float:
        """Rate inferred as 1 / median inter-frame interval."""
        return 1.0 / float(np.median(np.diff(self.timestamps)))


@dataclass(frozen=True)
class PulseSignal:
    """Uniformly sampled scalar waveform (raw or filtered rPPG)."""

    start_time: float
    sample_rate: float
    values: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise ValidationError("sample_rate must be positive and finite")
        if not math.isfinite(self.start_time):
            raise ValidationError("start_time must be finite")
        v = _as_float_array(self.values, "values")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self.values)) / self.sample_rate

    @property
    def duration(self) -> float:
        return (len(self.values) - 1) / self.sample_rate if len(self.values) else 0.0


HR_BPM_MIN = 42.0   # 0.7 Hz
HR_BPM_MAX = 240.0  # 4 Hz


@dataclass(frozen=True)
class HrCurve:
    """Instantaneous heart rate in BPM, one value per time point."""

    times: np.ndarray
    hr_bpm: np.ndarray

    def __post_init__(self):
        t = _as_float_array(self.times, "times")
        hr = _as_float_array(self.hr_bpm, "hr_bpm")
        if len(t) != len(hr):
            raise ValidationError("times and hr_bpm must have equal length")
        if len(t) < 1:
            raise ValidationError("HR curve must not be empty")
        _check_strictly_increasing(t, "times")
        if np.any(hr < HR_BPM_MIN) or np.any(hr > HR_BPM_MAX):
            raise ValidationError(
                f"hr_bpm must lie within [{HR_BPM_MIN}, {HR_BPM_MAX}]"
            )
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "hr_bpm", hr)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class UnevenSeries:
    """Time-stamped, irregularly spaced samples (IBI, HRV, detrended HRV).

    ``unit`` is a tag only ("s" for IBI, "bpm" for HRV); no arithmetic
    depends on it.
    """

    times: np.ndarray
    values: np.ndarray
    unit: str = ""

    def __post_init__(self):
        t = _as_float_array(self.times, "times")
        v = _as_float_array(self.values, "values")
        if len(t) != len(v):
            raise ValidationError("times and values must have equal length")
        _check_strictly_increasing(t, "times")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class PointTrackTable:
    """Tracked feature point positions, grouped by frame.

    Frames must form a consecutive integer range. Within a frame each
    point id appears at most once; a point lost by the tracker is simply
    absent from later frames.
    """

    frames: np.ndarray     # int, one entry per row
    point_ids: np.ndarray  # int
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=int)
        p = np.asarray(self.point_ids, dtype=int)
        x = _as_float_array(self.xs, "xs")
        y = _as_float_array(self.ys, "ys")
        if not (len(f) == len(p) == len(x) == len(y)):
            raise ValidationError("track columns must have equal length")
        if len(f) == 0:
            raise ValidationError("track table is empty")
        uniq = np.unique(f)
        if not np.array_equal(uniq, np.arange(uniq[0], uniq[-1] + 1)):
            raise ValidationError("track frames must be consecutive integers")
        for fr in uniq:
            ids = p[f == fr]
            if len(np.unique(ids)) != len(ids):
                raise ValidationError(f"duplicate point id in frame {fr}")
        object.__setattr__(self, "frames", f)
        object.__setattr__(self, "point_ids", p)
        object.__setattr__(self, "xs", x)
        object.__setattr__(self, "ys", y)

    def frame_range(self) -> range:
        return range(int(self.frames.min()), int(self.frames.max()) + 1)

    def points_at(self, frame: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (ids, coords) for one frame, sorted by point id."""
        mask = self.frames == frame
        ids = self.point_ids[mask]
        coords = np.column_stack([self.xs[mask], self.ys[mask]])
        order = np.argsort(ids)
        return ids[order], coords[order]


@dataclass(frozen=True)
class PipelineConfig:
    """Pipeline parameters; defaults are the standard operating point."""

    hr_band_hz: tuple[float, float] = (0.7, 4.0)
    second_filter_offset_bpm: float = 30.0
    outlier_alpha: float = 3.0
    rr_band_brpm: tuple[float, float] = (5.0, 30.0)
    rr_grid_step_brpm: float = 0.05
    pos_window_s: float = 1.6
    stft_window_s: float = 10.0
    stft_hop_s: float = 0.5
    ridge_transition_penalty: float = 0.2
    filter_order: int = 4
    enable_interp: bool = True
    enable_outlier_removal: bool = True

    def __post_init__(self):
        for name in ("hr_band_hz", "rr_band_brpm"):
            band = tuple(float(v) for v in getattr(self, name))
            if len(band) != 2:
                raise ValidationError(f"{name} must have exactly two entries")
            if not all(map(math.isfinite, band)) or band[0] >= band[1]:
                raise ValidationError(f"{name} must satisfy low < high")
            object.__setattr__(self, name, band)
        for name in (
            "second_filter_offset_bpm",
            "outlier_alpha",
            "rr_grid_step_brpm",
            "pos_window_s",
            "stft_window_s",
            "stft_hop_s",
        ):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive")
            object.__setattr__(self, name, v)
        pen = float(self.ridge_transition_penalty)
        if not (math.isfinite(pen) and pen >= 0):
            raise ValidationError("ridge_transition_penalty must be >= 0")
        object.__setattr__(self, "ridge_transition_penalty", pen)
        if int(self.filter_order) < 1:
            raise ValidationError("filter_order must be >= 1")
        object.__setattr__(self, "filter_order", int(self.filter_order))
        object.__setattr__(self, "enable_interp", bool(self.enable_interp))
        object.__setattr__(
            self, "enable_outlier_removal", bool(self.enable_outlier_removal)
        )


# ---------------------------------------------------------------------------
# readers


def _read_rows(path, expected_header: list[str]) -> list[list[str]]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: empty file, expected header {expected_header}")
    if [c.strip() for c in rows[0]] != expected_header:
        raise ParseError(
            f"{path}: bad header {rows[0]!r}, expected {expected_header}"
        )
    return rows[1:]


def _parse_float(token: str, path, line: int) -> float:
    try:
        return float(token)
    except ValueError as exc:
        raise ParseError(f"{path}:{line}: not a number: {token!r}") from exc


def _parse_int(token: str, path, line: int) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise ParseError(f"{path}:{line}: not an integer: {token!r}") from exc


def load_rgb_trace(path) -> RgbTrace:
    """Load and validate an rgb trace CSV (``frame,t_s,r,g,b``)."""
    rows = _read_rows(path, ["frame", "t_s", "r", "g", "b"])
    times, rgb = [], []
    for i, row in enumerate(rows, start=2):
        if len(row) != 5:
            raise ParseError(f"{path}:{i}: expected 5 fields, got {len(row)}")
        _parse_int(row[0], path, i)
        times.append(_parse_float(row[1], path, i))
        rgb.append([_parse_float(c, path, i) for c in row[2:5]])
    return RgbTrace(np.array(times), np.array(rgb))


def _load_time_value(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path, ["t_s", "value"])
    times, values = [], []
    for i, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise ParseError(f"{path}:{i}: expected 2 fields, got {len(row)}")
        times.append(_parse_float(row[0], path, i))
        values.append(_parse_float(row[1], path, i))
    return np.array(times), np.array(values)


def load_uneven_series(path, unit: str = "") -> UnevenSeries:
    times, values = _load_time_value(path)
    return UnevenSeries(times, values, unit)


def load_pulse(path) -> PulseSignal:
    """Load a uniformly sampled signal; rate is 1 / median interval."""
    times, values = _load_time_value(path)
    if len(times) < 2:
        raise ValidationError(f"{path}: pulse needs at least 2 samples")
    _check_strictly_increasing(times, "t_s")
    dt = np.diff(times)
    med = float(np.median(dt))
    if np.max(np.abs(dt - med)) > RATE_JITTER_TOL * med:
        raise ValidationError(f"{path}: sample times are not uniform")
    return PulseSignal(start_time=float(times[0]), sample_rate=1.0 / med, values=values)


def load_hr_curve(path) -> HrCurve:
    times, values = _load_time_value(path)
    return HrCurve(times, values)


def load_point_tracks(path) -> PointTrackTable:
    rows = _read_rows(path, ["frame", "point_id", "x", "y"])
    frames, ids, xs, ys = [], [], [], []
    for i, row in enumerate(rows, start=2):
        if len(row) != 4:
            raise ParseError(f"{path}:{i}: expected 4 fields, got {len(row)}")
        frames.append(_parse_int(row[0], path, i))
        ids.append(_parse_int(row[1], path, i))
        xs.append(_parse_float(row[2], path, i))
        ys.append(_parse_float(row[3], path, i))
    return PointTrackTable(np.array(frames), np.array(ids), np.array(xs), np.array(ys))


def load_roi_csv(path) -> list[tuple[int, np.ndarray]]:
    """Load ROI polygons as [(frame, vertices)] sorted by frame.

    Vertex order within a frame follows ``vertex_id``.
    """
    rows = _read_rows(path, ["frame", "vertex_id", "x", "y"])
    by_frame: dict[int, list[tuple[int, float, float]]] = {}
    for i, row in enumerate(rows, start=2):
        if len(row) != 4:
            raise ParseError(f"{path}:{i}: expected 4 fields, got {len(row)}")
        frame = _parse_int(row[0], path, i)
        vid = _parse_int(row[1], path, i)
        x = _parse_float(row[2], path, i)
        y = _parse_float(row[3], path, i)
        by_frame.setdefault(frame, []).append((vid, x, y))
    out = []
    for frame in sorted(by_frame):
        entries = sorted(by_frame[frame])
        vids = [e[0] for e in entries]
        if vids != list(range(len(vids))):
            raise ValidationError(
                f"{path}: frame {frame} vertex ids must be 0..{len(vids) - 1}"
            )
        out.append((frame, np.array([[e[1], e[2]] for e in entries])))
    return out


def load_config(path=None) -> PipelineConfig:
    """Load a JSON config, or return defaults when ``path`` is None."""
    if path is None:
        return PipelineConfig()
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> PipelineConfig:
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(raw)
    for key in ("hr_band_hz", "rr_band_brpm"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    return PipelineConfig(**kwargs)


def config_overrides(config: PipelineConfig, **overrides) -> PipelineConfig:
    return replace(config, **overrides)


# ---------------------------------------------------------------------------
# writers


def write_series(path, series: UnevenSeries | PulseSignal | HrCurve) -> None:
    """Write any time/value series as a ``t_s,value`` CSV."""
    if isinstance(series, UnevenSeries):
        times, values = series.times, series.values
    elif isinstance(series, PulseSignal):
        times, values = series.times, series.values
    elif isinstance(series, HrCurve):
        times, values = series.times, series.hr_bpm
    else:
        raise TypeError(f"cannot serialize {type(series).__name__}")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_s", "value"])
        for t, v in zip(times, values):
            w.writerow([_fmt(t), _fmt(v)])


def write_rgb_trace(path, trace: RgbTrace) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "t_s", "r", "g", "b"])
        for i, (t, (r, g, b)) in enumerate(zip(trace.timestamps, trace.samples)):
            w.writerow([i, _fmt(t), _fmt(r), _fmt(g), _fmt(b)])


def write_point_tracks(path, table: PointTrackTable) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "point_id", "x", "y"])
        for f, p, x, y in zip(table.frames, table.point_ids, table.xs, table.ys):
            w.writerow([int(f), int(p), _fmt(x), _fmt(y)])


def write_roi_csv(path, entries: list[tuple[int, np.ndarray]]) -> None:
    """Write [(frame, vertices)] in the ROI polygon format."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "vertex_id", "x", "y"])
        for frame, vertices in entries:
            for vid, (x, y) in enumerate(np.asarray(vertices, dtype=float)):
                w.writerow([int(frame), vid, _fmt(x), _fmt(y)])
