"""Gaussian outlier pruning of detrended HRV samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .trace_io import UnevenSeries


@dataclass(frozen=True)
class GaussianFit:
    """Maximum-likelihood Gaussian parameters of a sample set."""

    mu: float
    sigma: float
    n: int

    def __post_init__(self):
        if self.sigma < 0:
            raise ValidationError("sigma must be >= 0")
        if self.n < 1:
            raise ValidationError("n must be >= 1")


def fit_gaussian(series: UnevenSeries) -> GaussianFit:
    """MLE fit: mean and sqrt of the divide-by-n variance."""
    if len(series) < 2:
        raise ValidationError("need at least 2 samples to fit")
    mu = float(np.mean(series.values))
    sigma = float(np.sqrt(np.mean((series.values - mu) ** 2)))
    return GaussianFit(mu=mu, sigma=sigma, n=len(series))


def prune(series: UnevenSeries, fit: GaussianFit, alpha: float = 3.0) -> UnevenSeries:
    """Keep samples inside the closed interval [mu - alpha sigma, mu + alpha sigma].

    Single pass over a fixed fit; no refitting. With sigma = 0 only values
    exactly equal to mu survive.
    """
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    keep = np.abs(series.values - fit.mu) <= alpha * fit.sigma
    return UnevenSeries(series.times[keep], series.values[keep], series.unit)
