"""Corpus-level error metrics and Bland-Altman agreement data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

LIMITS_OF_AGREEMENT_FACTOR = 1.96


@dataclass(frozen=True)
class SegmentResult:
    """Measured vs. ground-truth respiratory rate for one segment."""

    segment_id: str
    rr_measured_brpm: float
    rr_ground_truth_brpm: float
    n_hrv_samples: int = 0
    n_outliers_removed: int = 0

    @property
    def rr_error_brpm(self) -> float:
        return self.rr_measured_brpm - self.rr_ground_truth_brpm


@dataclass(frozen=True)
class MetricsReport:
    """Error statistics over a corpus of segments.

    ``mean_error_rate`` and ``pct_within_1`` are percentages.
    """

    mean_error: float
    sd_error: float
    rmse: float
    mean_error_rate: float
    pct_within_1: float
    n_segments: int


def compute_metrics(results: list[SegmentResult]) -> MetricsReport:
    """Mean, sample SD, RMSE, mean |error|/truth, and share of |error| < 1.

    Raises:
        ValidationError: empty input or non-positive ground truth.
    """
    if not results:
        raise ValidationError("need at least one segment result")
    gt = np.array([r.rr_ground_truth_brpm for r in results])
    if np.any(gt <= 0):
        raise ValidationError("ground-truth RR must be positive")
    err = np.array([r.rr_error_brpm for r in results])
    n = len(err)
    return MetricsReport(
        mean_error=float(np.mean(err)),
        sd_error=float(np.std(err, ddof=1)) if n > 1 else 0.0,
        rmse=float(np.sqrt(np.mean(err**2))),
        mean_error_rate=float(np.mean(np.abs(err) / gt)) * 100.0,
        pct_within_1=float(np.count_nonzero(np.abs(err) < 1.0)) / n * 100.0,
        n_segments=n,
    )


def format_metrics_row(report: MetricsReport) -> str:
    """Render metrics in the usual table-row shape, e.g.
    ``0.04 (2.18)  2.16  5.92%  78.33%``."""
    return (
        f"{report.mean_error:.2f} ({report.sd_error:.2f})  "
        f"{report.rmse:.2f}  {report.mean_error_rate:.2f}%  "
        f"{report.pct_within_1:.2f}%"
    )


@dataclass(frozen=True)
class BlandAltman:
    """Per-segment (mean, difference) pairs with 95% limits of agreement."""

    segment_ids: list[str]
    means: np.ndarray  # (measured + truth) / 2
    diffs: np.ndarray  # measured - truth
    bias: float
    loa_lower: float
    loa_upper: float


def bland_altman(results: list[SegmentResult]) -> BlandAltman:
    """Agreement rows and bias +- 1.96 sample SD limits.

    Raises:
        ValidationError: fewer than 2 segments.
    """
    if len(results) < 2:
        raise ValidationError("need at least 2 segments for Bland-Altman limits")
    measured = np.array([r.rr_measured_brpm for r in results])
    gt = np.array([r.rr_ground_truth_brpm for r in results])
    diffs = measured - gt
    bias = float(np.mean(diffs))
    spread = LIMITS_OF_AGREEMENT_FACTOR * float(np.std(diffs, ddof=1))
    return BlandAltman(
        segment_ids=[r.segment_id for r in results],
        means=(measured + gt) / 2.0,
        diffs=diffs,
        bias=bias,
        loa_lower=bias - spread,
        loa_upper=bias + spread,
    )
