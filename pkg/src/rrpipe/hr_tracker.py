"""Heart-rate curve tracking through the pulse spectrogram.

First-phase bandpass confines the pulse to the plausible cardiac band,
then a Viterbi-style dynamic program carves the maximum-contrast ridge
through the short-time spectrum. The transition penalty is an L1 cost on
frequency jumps, so the score of a path f_1..f_T is

    sum_t log(mag[t, f_t] + eps) - penalty * sum_t |f_t - f_{t-1}|
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import filters
from .errors import ValidationError
from .trace_io import HrCurve, PipelineConfig, PulseSignal

RIDGE_EPS = 1e-12

# zero-padding target for the spectrogram frequency grid
MAX_FREQ_RESOLUTION_HZ = 0.02


@dataclass(frozen=True)
class TimeFreqMap:
    """Short-time spectral magnitudes on a fixed frequency grid."""

    frame_times: np.ndarray  # seconds, window centers
    freqs_hz: np.ndarray     # strictly increasing
    magnitudes: np.ndarray   # shape (n_frames, n_freqs), >= 0

    def __post_init__(self):
        t = np.asarray(self.frame_times, dtype=float)
        f = np.asarray(self.freqs_hz, dtype=float)
        m = np.asarray(self.magnitudes, dtype=float)
        if m.shape != (len(t), len(f)):
            raise ValidationError("magnitudes must have shape (frames, freqs)")
        if len(t) < 1 or len(f) < 1:
            raise ValidationError("time-frequency map must not be empty")
        if len(f) >= 2 and not np.all(np.diff(f) > 0):
            raise ValidationError("freqs_hz must be strictly increasing")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValidationError("magnitudes must be finite and >= 0")
        object.__setattr__(self, "frame_times", t)
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "magnitudes", m)


def bandpass_hr(
    pulse: PulseSignal, band_hz: tuple[float, float] = (0.7, 4.0), order: int = 4
) -> PulseSignal:
    """First-phase zero-phase bandpass over the cardiac band."""
    return filters.zero_phase_bandpass(pulse, band_hz, order)


def spectrogram(
    pulse: PulseSignal,
    window_s: float = 10.0,
    hop_s: float = 0.5,
    band_hz: tuple[float, float] = (0.7, 4.0),
) -> TimeFreqMap:
    """Hann-windowed magnitude spectrogram restricted to ``band_hz``.

    Frames are zero-padded until the frequency spacing is at most 0.02 Hz;
    each frame is stamped with its window center time.
    """
    rate = pulse.sample_rate
    n = len(pulse)
    win = int(round(window_s * rate))
    hop = max(1, int(round(hop_s * rate)))
    if win > n:
        raise ValidationError(
            f"signal of {n} samples is shorter than one {win}-sample window"
        )
    nfft = 1
    while nfft < win or rate / nfft > MAX_FREQ_RESOLUTION_HZ:
        nfft *= 2
    freqs = np.fft.rfftfreq(nfft, d=1.0 / rate)
    keep = (freqs >= band_hz[0]) & (freqs <= band_hz[1])
    if not np.any(keep):
        raise ValidationError(f"band {band_hz} contains no frequency bins")
    window = np.hanning(win)
    starts = np.arange(0, n - win + 1, hop)
    segments = pulse.values[starts[:, None] + np.arange(win)] * window
    mags = np.abs(np.fft.rfft(segments, n=nfft, axis=1))[:, keep]
    centers = pulse.start_time + (starts + (win - 1) / 2.0) / rate
    return TimeFreqMap(centers, freqs[keep], mags)


def trace_ridge(
    tf_map: TimeFreqMap,
    penalty: float = 0.2,
    sample_times: np.ndarray | None = None,
) -> HrCurve:
    """Extract the optimal frequency ridge and return it as an HR curve.

    Dynamic program over the frequency grid; ties break toward the lower
    frequency. The ridge is converted to BPM and linearly interpolated
    onto ``sample_times`` (frame times when omitted), extending the first
    and last frame values as constants beyond the frame range.
    """
    if penalty < 0:
        raise ValidationError("penalty must be >= 0")
    mags = tf_map.magnitudes
    freqs = tf_map.freqs_hz
    n_frames, n_freqs = mags.shape
    logmag = np.log(mags + RIDGE_EPS)

    jump_cost = penalty * np.abs(freqs[None, :] - freqs[:, None])  # (prev, next)
    score = logmag[0].copy()
    backptr = np.zeros((n_frames, n_freqs), dtype=int)
    for t in range(1, n_frames):
        cand = score[:, None] - jump_cost
        best_prev = np.argmax(cand, axis=0)  # first max = lowest frequency
        backptr[t] = best_prev
        score = cand[best_prev, np.arange(n_freqs)] + logmag[t]

    path = np.empty(n_frames, dtype=int)
    path[-1] = int(np.argmax(score))
    for t in range(n_frames - 1, 0, -1):
        path[t - 1] = backptr[t, path[t]]

    ridge_bpm = 60.0 * freqs[path]
    if sample_times is None:
        times = tf_map.frame_times
        hr = ridge_bpm
    else:
        times = np.asarray(sample_times, dtype=float)
        hr = np.interp(times, tf_map.frame_times, ridge_bpm)
    return HrCurve(times, hr)


def ridge_path_score(
    tf_map: TimeFreqMap, path: np.ndarray, penalty: float
) -> float:
    """Score of an explicit frequency-index path under the ridge objective."""
    path = np.asarray(path, dtype=int)
    mag_term = np.sum(
        np.log(tf_map.magnitudes[np.arange(len(path)), path] + RIDGE_EPS)
    )
    jumps = np.abs(np.diff(tf_map.freqs_hz[path]))
    return float(mag_term - penalty * np.sum(jumps))


def track_hr(pulse: PulseSignal, config: PipelineConfig) -> HrCurve:
    """Bandpass, spectrogram, and ridge tracking; HR at every pulse sample."""
    filtered = bandpass_hr(pulse, config.hr_band_hz, config.filter_order)
    tf_map = spectrogram(
        filtered, config.stft_window_s, config.stft_hop_s, config.hr_band_hz
    )
    return trace_ridge(tf_map, config.ridge_transition_penalty, pulse.times)
