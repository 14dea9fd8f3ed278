"""HRV extraction: adaptive second filter, peak detection and refinement,
inter-beat intervals, and detrending against the HR curve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from . import filters
from .errors import ValidationError
from .trace_io import HrCurve, PulseSignal, UnevenSeries

# Second-filter band clamp: keep the low edge physiological and the high
# edge safely below Nyquist.
BAND_LOW_FLOOR_HZ = 0.4
BAND_HIGH_NYQUIST_FRACTION = 0.45

# Peak selection: spacing below one period of the fastest in-band
# component suppresses dicrotic double-detections; the height threshold
# drops noise maxima in low-amplitude stretches.
PEAK_MIN_SEPARATION_PERIODS = 0.6
PEAK_HEIGHT_PERCENTILE = 60.0
MIN_PEAKS = 4


@dataclass(frozen=True)
class PeakList:
    """Detected pulse peaks: instants in seconds plus raw sample indices."""

    times: np.ndarray
    raw_indices: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        idx = np.asarray(self.raw_indices, dtype=int)
        if len(t) != len(idx):
            raise ValidationError("times and raw_indices must have equal length")
        if len(t) >= 2 and not np.all(np.diff(t) > 0):
            raise ValidationError("peak times must be strictly increasing")
        if not np.all(np.isfinite(t)):
            raise ValidationError("peak times must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "raw_indices", idx)

    def __len__(self) -> int:
        return len(self.times)


def design_second_band(
    hr: HrCurve, offset_bpm: float = 30.0, sample_rate: float | None = None
) -> tuple[float, float]:
    """Band for the second filter: HR dynamic range widened by the offset.

    Returns ((min(hr) - offset) / 60, (max(hr) + offset) / 60) in Hz,
    clamped to [0.4 Hz, 0.45 * sample_rate]. The upper clamp is skipped
    when no sample rate is given.

    Raises:
        ValidationError: the clamped band is empty, which signals an
            implausible HR curve.
    """
    if offset_bpm <= 0:
        raise ValidationError("offset_bpm must be positive")
    hr1 = float(np.min(hr.hr_bpm))
    hr2 = float(np.max(hr.hr_bpm))
    low = max((hr1 - offset_bpm) / 60.0, BAND_LOW_FLOOR_HZ)
    high = (hr2 + offset_bpm) / 60.0
    if sample_rate is not None:
        high = min(high, BAND_HIGH_NYQUIST_FRACTION * sample_rate)
    if low >= high:
        raise ValidationError(
            f"clamped band ({low:.3f}, {high:.3f}) Hz is empty; HR curve implausible"
        )
    return (low, high)


def zero_phase_bandpass(
    pulse: PulseSignal, band_hz: tuple[float, float], order: int = 4
) -> PulseSignal:
    """Second-phase zero-phase bandpass (shared filter core)."""
    return filters.zero_phase_bandpass(pulse, band_hz, order)


def detect_peaks(pulse: PulseSignal, band_hz: tuple[float, float]) -> PeakList:
    """Detect raw (unrefined) peaks in a filtered pulse signal.

    Local maxima above the 60th percentile of the signal, thinned so no
    two kept peaks are closer than 0.6 periods of the band's high edge;
    thinning keeps peaks greedily by descending height.

    Raises:
        ValidationError: fewer than 4 peaks found (unusable for HRV).
    """
    x = pulse.values
    high_hz = band_hz[1]
    # >= 2 samples guarantees refined times stay strictly increasing
    min_sep = max(2.0, PEAK_MIN_SEPARATION_PERIODS * pulse.sample_rate / high_hz)
    threshold = np.percentile(x, PEAK_HEIGHT_PERCENTILE)
    candidates, _ = find_peaks(x)
    candidates = candidates[x[candidates] > threshold]

    order = np.lexsort((candidates, -x[candidates]))  # height desc, index asc
    kept: list[int] = []
    for idx in candidates[order]:
        if all(abs(int(idx) - k) >= min_sep for k in kept):
            kept.append(int(idx))
    kept.sort()
    if len(kept) < MIN_PEAKS:
        raise ValidationError(
            f"only {len(kept)} peaks found, need >= {MIN_PEAKS} for HRV"
        )
    kept_arr = np.array(kept, dtype=int)
    times = pulse.start_time + kept_arr / pulse.sample_rate
    return PeakList(times, kept_arr)


def refine_peak(pulse: PulseSignal, raw_index: int) -> float:
    """Sub-sample peak instant from a parabola through three samples.

    The vertex offset delta = 0.5 (x[-1] - x[+1]) / (x[-1] - 2 x[0] + x[+1])
    is clamped to [-0.5, 0.5] samples; a flat triple yields delta = 0.

    Raises:
        ValidationError: raw_index is at the signal edge or not a local
            maximum of its three-sample neighborhood.
    """
    x = pulse.values
    if not 1 <= raw_index <= len(x) - 2:
        raise ValidationError(f"raw_index {raw_index} has no two-sided neighborhood")
    xm, x0, xp = x[raw_index - 1], x[raw_index], x[raw_index + 1]
    if x0 < xm or x0 < xp:
        raise ValidationError(f"raw_index {raw_index} is not a local maximum")
    denom = xm - 2.0 * x0 + xp
    delta = 0.0 if denom == 0.0 else 0.5 * (xm - xp) / denom
    delta = float(np.clip(delta, -0.5, 0.5))
    return pulse.start_time + (raw_index + delta) / pulse.sample_rate


def refine_peaks(pulse: PulseSignal, peaks: PeakList) -> PeakList:
    """Apply quadratic refinement to every raw peak."""
    times = np.array([refine_peak(pulse, int(i)) for i in peaks.raw_indices])
    return PeakList(times, peaks.raw_indices)


def compute_ibi(peaks: PeakList) -> UnevenSeries:
    """Inter-beat intervals, each stamped at the midpoint of its peak pair."""
    if len(peaks) < 2:
        raise ValidationError("need at least 2 peaks to compute IBIs")
    t = peaks.times
    return UnevenSeries(times=(t[:-1] + t[1:]) / 2.0, values=np.diff(t), unit="s")


def ibi_to_hrv(ibi: UnevenSeries) -> UnevenSeries:
    """Instantaneous heart rate: 60 / IBI, at the same times."""
    if np.any(ibi.values <= 0):
        raise ValidationError("IBI values must be positive")
    return UnevenSeries(times=ibi.times, values=60.0 / ibi.values, unit="bpm")


def detrend_hrv(hrv: UnevenSeries, hr: HrCurve) -> UnevenSeries:
    """Subtract the HR curve (linearly interpolated, constant at the edges)."""
    if len(hrv) == 0:
        raise ValidationError("HRV series is empty")
    trend = np.interp(hrv.times, hr.times, hr.hr_bpm)
    return UnevenSeries(times=hrv.times, values=hrv.values - trend, unit="bpm")
