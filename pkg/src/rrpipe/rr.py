"""Respiratory rate from detrended HRV via the Lomb-Scargle periodogram.

The periodogram is the classic normalized form: with sample mean xbar,
sample variance s2 (divide by n-1), and per-frequency phase origin tau
defined by tan(2 w tau) = sum sin(2 w t) / sum cos(2 w t),

    P(w) = 1 / (2 s2) * ( [sum (x - xbar) cos w(t - tau)]^2 / sum cos^2 w(t - tau)
                        + [sum (x - xbar) sin w(t - tau)]^2 / sum sin^2 w(t - tau) )

evaluated directly on a dense breaths-per-minute grid; no fast
approximation is needed at this scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .trace_io import PipelineConfig, UnevenSeries

MIN_SAMPLES = 4


@dataclass(frozen=True)
class PsdEstimate:
    """Normalized power on a strictly increasing BrPM grid."""

    freqs_brpm: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs_brpm, dtype=float)
        p = np.asarray(self.power, dtype=float)
        if len(f) != len(p):
            raise ValidationError("freqs_brpm and power must have equal length")
        if len(f) >= 2 and not np.all(np.diff(f) > 0):
            raise ValidationError("freqs_brpm must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise ValidationError("power must be finite")
        object.__setattr__(self, "freqs_brpm", f)
        object.__setattr__(self, "power", p)


@dataclass(frozen=True)
class RrEstimate:
    """Selected respiratory rate and the spectrum it came from."""

    rr_brpm: float
    peak_power: float
    psd: PsdEstimate


def lomb_scargle(series: UnevenSeries, grid_brpm: np.ndarray) -> PsdEstimate:
    """Normalized Lomb-Scargle power of an uneven series on a BrPM grid."""
    grid = np.asarray(grid_brpm, dtype=float)
    if len(series) < MIN_SAMPLES:
        raise ValidationError(f"need at least {MIN_SAMPLES} samples")
    if np.any(grid <= 0):
        raise ValidationError("grid frequencies must be positive")
    t = series.times
    x = series.values
    var = float(np.var(x, ddof=1))
    if var == 0.0:
        raise ValidationError("series has zero variance")
    xc = x - np.mean(x)

    omega = 2.0 * np.pi * grid / 60.0  # rad/s
    two_wt = 2.0 * omega[:, None] * t[None, :]
    tau = np.arctan2(
        np.sum(np.sin(two_wt), axis=1), np.sum(np.cos(two_wt), axis=1)
    ) / (2.0 * omega)
    arg = omega[:, None] * (t[None, :] - tau[:, None])
    c = np.cos(arg)
    s = np.sin(arg)
    c_num = np.sum(xc[None, :] * c, axis=1) ** 2
    s_num = np.sum(xc[None, :] * s, axis=1) ** 2
    c_den = np.sum(c * c, axis=1)
    s_den = np.sum(s * s, axis=1)
    c_term = np.divide(c_num, c_den, out=np.zeros_like(c_num), where=c_den > 0)
    s_term = np.divide(s_num, s_den, out=np.zeros_like(s_num), where=s_den > 0)
    power = (c_term + s_term) / (2.0 * var)
    return PsdEstimate(grid, power)


def pick_rr(psd: PsdEstimate, band_brpm: tuple[float, float] = (5.0, 30.0)) -> RrEstimate:
    """Grid argmax of the power inside the closed band; ties pick lower."""
    low, high = band_brpm
    inside = (psd.freqs_brpm >= low) & (psd.freqs_brpm <= high)
    if not np.any(inside):
        raise ValidationError(f"grid does not intersect the band {band_brpm}")
    freqs = psd.freqs_brpm[inside]
    power = psd.power[inside]
    best = int(np.argmax(power))  # first max = lowest frequency
    return RrEstimate(rr_brpm=float(freqs[best]), peak_power=float(power[best]), psd=psd)


def rr_grid(config: PipelineConfig) -> np.ndarray:
    """The configured estimation grid, endpoints included exactly."""
    low, high = config.rr_band_brpm
    n_steps = int(round((high - low) / config.rr_grid_step_brpm))
    return np.linspace(low, high, n_steps + 1)


def estimate_rr(series: UnevenSeries, config: PipelineConfig | None = None) -> RrEstimate:
    """Lomb-Scargle on the configured grid followed by band-limited argmax."""
    if config is None:
        config = PipelineConfig()
    psd = lomb_scargle(series, rr_grid(config))
    return pick_rr(psd, config.rr_band_brpm)
