"""Synthetic pulse, trace, and track generation with exact ground truth.

The cardiac model is a sinusoidal respiratory modulation of the
instantaneous heart rate,

    HR(t) = hr0 + rsa_amp * sin(2 pi (rr / 60) t)   [BPM]

whose cardiac phase has the closed form

    phi(t) = hr0 t / 60 + (rsa_amp / (120 pi f)) (1 - cos(2 pi f t)),
    f = rr / 60,

so beat times (phi crossing successive integers) and the HR curve are
known exactly rather than numerically integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .motion import AffineTransform
from .trace_io import HrCurve, PointTrackTable, PulseSignal, RgbTrace, UnevenSeries

BEAT_TIME_TOL_S = 1e-9

# relative pulsatility of the color channels (green strongest)
CHANNEL_WEIGHTS = (0.3, 0.8, 0.5)
CHANNEL_BASELINE = 1.0

# second harmonic weight: makes peaks asymmetric, like a real PPG upstroke
SECOND_HARMONIC = 0.3


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic segment."""

    duration_s: float
    sample_rate_hz: float
    hr0_bpm: float
    rsa_amp_bpm: float = 0.0
    rr_brpm: float = 15.0
    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if self.duration_s <= 0 or self.sample_rate_hz <= 0 or self.hr0_bpm <= 0:
            raise ValidationError("duration, rate, and hr0 must be positive")
        if self.rsa_amp_bpm < 0:
            raise ValidationError("rsa_amp_bpm must be >= 0")
        if self.rsa_amp_bpm >= self.hr0_bpm:
            raise ValidationError("rsa_amp_bpm must be below hr0_bpm")
        if not 0 < self.rr_brpm < 60:
            raise ValidationError("rr_brpm must lie in (0, 60)")


@dataclass(frozen=True)
class GroundTruth:
    """Exact quantities behind a generated segment."""

    beat_times: np.ndarray
    hr_curve: HrCurve
    rr_brpm: float
    rsa_waveform: UnevenSeries

    def __post_init__(self):
        t = np.asarray(self.beat_times, dtype=float)
        if len(t) >= 2 and not np.all(np.diff(t) > 0):
            raise ValidationError("beat times must be strictly increasing")
        object.__setattr__(self, "beat_times", t)


def cardiac_phase(spec: SynthSpec, t) -> np.ndarray:
    """Closed-form phi(t); phi counts elapsed cardiac cycles."""
    t = np.asarray(t, dtype=float)
    f = spec.rr_brpm / 60.0
    base = spec.hr0_bpm * t / 60.0
    if spec.rsa_amp_bpm == 0.0:
        return base
    return base + spec.rsa_amp_bpm / (120.0 * np.pi * f) * (1.0 - np.cos(2.0 * np.pi * f * t))


def instantaneous_hr(spec: SynthSpec, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return spec.hr0_bpm + spec.rsa_amp_bpm * np.sin(2.0 * np.pi * spec.rr_brpm / 60.0 * t)


def _beat_times(spec: SynthSpec) -> np.ndarray:
    """Solve phi(t) = k for k = 0 .. floor(phi(duration)) by bisection."""
    total = float(cardiac_phase(spec, spec.duration_s))
    n_beats = int(math.floor(total))
    times = np.empty(n_beats + 1)
    times[0] = 0.0
    lo = 0.0
    for k in range(1, n_beats + 1):
        hi = spec.duration_s
        a, b = lo, hi
        while b - a > BEAT_TIME_TOL_S:
            mid = 0.5 * (a + b)
            if float(cardiac_phase(spec, mid)) < k:
                a = mid
            else:
                b = mid
        times[k] = 0.5 * (a + b)
        lo = times[k]
    return times


def _waveform(phase: np.ndarray) -> np.ndarray:
    return np.sin(2.0 * np.pi * phase) + SECOND_HARMONIC * np.sin(4.0 * np.pi * phase)


def _add_noise(clean: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    if math.isinf(snr_db):
        return clean
    signal_power = float(np.mean(clean**2))
    noise_power = signal_power / 10.0 ** (snr_db / 10.0)
    return clean + rng.standard_normal(len(clean)) * math.sqrt(noise_power)


def _ground_truth(spec: SynthSpec, times: np.ndarray) -> GroundTruth:
    return GroundTruth(
        beat_times=_beat_times(spec),
        hr_curve=HrCurve(times, instantaneous_hr(spec, times)),
        rr_brpm=spec.rr_brpm,
        rsa_waveform=UnevenSeries(
            times,
            spec.rsa_amp_bpm
            * np.sin(2.0 * np.pi * spec.rr_brpm / 60.0 * times),
            unit="bpm",
        ),
    )


def gen_pulse(spec: SynthSpec) -> tuple[PulseSignal, GroundTruth]:
    """Two-harmonic cardiac waveform plus white noise at the requested SNR."""
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    times = np.arange(n) / spec.sample_rate_hz
    clean = _waveform(cardiac_phase(spec, times))
    rng = np.random.default_rng(spec.seed)
    values = _add_noise(clean, spec.snr_db, rng)
    pulse = PulseSignal(start_time=0.0, sample_rate=spec.sample_rate_hz, values=values)
    return pulse, _ground_truth(spec, times)


def gen_rgb_trace(
    spec: SynthSpec,
    pulse_strength: float = 0.01,
    drift: float | tuple[float, float, float] = 0.0,
) -> tuple[RgbTrace, GroundTruth]:
    """RGB trace with the pulse mixed into each channel.

    channel_c(t) = baseline * (1 + drift_c * t)
                 + weight_c * pulse_strength * pulse(t) + noise

    Per-channel noise is scaled against that channel's pulse component so
    the trace realizes the requested SNR. ``pulse_strength`` is relative
    to the unit baseline and must stay small, as rPPG pulsatility is.
    """
    if not 0.0 < pulse_strength <= 0.05:
        raise ValidationError("pulse_strength must lie in (0, 0.05]")
    drifts = np.broadcast_to(np.asarray(drift, dtype=float), (3,))
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    times = np.arange(n) / spec.sample_rate_hz
    clean_pulse = _waveform(cardiac_phase(spec, times))
    rng = np.random.default_rng(spec.seed)
    channels = np.empty((n, 3))
    for c in range(3):
        component = CHANNEL_WEIGHTS[c] * pulse_strength * clean_pulse
        channels[:, c] = (
            CHANNEL_BASELINE * (1.0 + drifts[c] * times)
            + _add_noise(component, spec.snr_db, rng)
        )
    trace = RgbTrace(times, channels)
    return trace, _ground_truth(spec, times)


def gen_point_tracks(
    n_points: int,
    n_frames: int,
    motion: list[AffineTransform],
    noise_px: float = 0.0,
    seed: int = 0,
) -> tuple[PointTrackTable, list[AffineTransform]]:
    """Point tracks under a known affine motion sequence.

    ``motion`` maps frame f to frame f+1 and must have n_frames - 1
    entries. Initial points are uniform in a 100 x 100 box.
    """
    if n_points < 3:
        raise ValidationError("need at least 3 points")
    if n_frames < 1:
        raise ValidationError("need at least 1 frame")
    if len(motion) != n_frames - 1:
        raise ValidationError(
            f"motion must have {n_frames - 1} transforms, got {len(motion)}"
        )
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 100.0, size=(n_points, 2))
    frames, ids, xs, ys = [], [], [], []
    current = pts
    for f in range(n_frames):
        if f > 0:
            current = motion[f - 1].apply(current)
        observed = current
        if noise_px > 0:
            observed = current + rng.normal(0.0, noise_px, size=current.shape)
        frames.extend([f] * n_points)
        ids.extend(range(n_points))
        xs.extend(observed[:, 0])
        ys.extend(observed[:, 1])
    table = PointTrackTable(
        np.array(frames), np.array(ids), np.array(xs), np.array(ys)
    )
    return table, list(motion)
