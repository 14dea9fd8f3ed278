"""Zero-phase Butterworth bandpass filtering shared by both filter phases.

The filter runs forward and then backward over the signal so the net
phase response is zero and peak locations are preserved. Both passes are
initialized at the steady state of their first sample, which keeps a
constant input at the filter's DC response instead of ringing at the
edges.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import butter, lfilter, lfilter_zi

from .errors import ValidationError
from .trace_io import PulseSignal


def design_bandpass(
    band_hz: tuple[float, float], sample_rate: float, order: int = 4
) -> tuple[np.ndarray, np.ndarray]:
    """Butterworth bandpass coefficients (b, a) for the given band."""
    low, high = band_hz
    nyq = sample_rate / 2.0
    if not (0.0 < low < high):
        raise ValidationError(f"band must satisfy 0 < low < high, got {band_hz}")
    if high >= nyq:
        raise ValidationError(
            f"band edge {high} Hz is not below the Nyquist rate {nyq} Hz"
        )
    return butter(order, [low / nyq, high / nyq], btype="band")


def zero_phase_filter(values: np.ndarray, b: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Apply (b, a) forward, then backward over the reversed output."""
    zi = lfilter_zi(b, a)
    fwd, _ = lfilter(b, a, values, zi=zi * values[0])
    rev = fwd[::-1]
    bwd, _ = lfilter(b, a, rev, zi=zi * rev[0])
    return bwd[::-1]


def zero_phase_bandpass(
    pulse: PulseSignal, band_hz: tuple[float, float], order: int = 4
) -> PulseSignal:
    """Zero-phase Butterworth bandpass of a pulse signal; length preserved."""
    if len(pulse) <= 3 * order:
        raise ValidationError(
            f"signal of {len(pulse)} samples is too short for an order-{order} filter"
        )
    b, a = design_bandpass(band_hz, pulse.sample_rate, order)
    return PulseSignal(
        start_time=pulse.start_time,
        sample_rate=pulse.sample_rate,
        values=zero_phase_filter(pulse.values, b, a),
    )
