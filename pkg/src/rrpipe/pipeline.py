"""End-to-end per-segment pipeline: RGB trace in, RR estimate out."""

from __future__ import annotations

from dataclasses import dataclass

from . import hr_tracker, hrv, outliers, pos, rr
from .errors import PipelineStageError
from .trace_io import HrCurve, PipelineConfig, PulseSignal, RgbTrace, UnevenSeries


@dataclass(frozen=True)
class PipelineDiagnostics:
    """Every intermediate product of one pipeline run."""

    pulse_raw: PulseSignal
    pulse_hr_band: PulseSignal
    hr_curve: HrCurve
    second_band_hz: tuple[float, float]
    pulse_second: PulseSignal
    peaks: hrv.PeakList
    ibi: UnevenSeries
    hrv_bpm: UnevenSeries
    hrv_detrended: UnevenSeries
    hrv_pruned: UnevenSeries
    n_outliers_removed: int


@dataclass(frozen=True)
class PipelineResult:
    estimate: rr.RrEstimate
    diagnostics: PipelineDiagnostics


def run_pipeline(
    trace: RgbTrace,
    config: PipelineConfig | None = None,
    segment_id: str = "segment",
) -> PipelineResult:
    """Run the full RR pipeline on one trace.

    Stage order: POS extraction, cardiac-band filter, spectrogram ridge
    HR tracking, adaptive second filter, peak detection (with quadratic
    refinement unless disabled), IBI, HRV, detrending, Gaussian outlier
    pruning (unless disabled), Lomb-Scargle RR estimation. Any stage
    error is re-raised with the stage name and segment id attached.
    """
    if config is None:
        config = PipelineConfig()

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            raise PipelineStageError(name, segment_id, exc) from exc

    pulse_raw = stage("pos_extract", pos.pos_extract, trace, config.pos_window_s)
    pulse_hr = stage(
        "bandpass_hr",
        hr_tracker.bandpass_hr,
        pulse_raw,
        config.hr_band_hz,
        config.filter_order,
    )
    tf_map = stage(
        "spectrogram",
        hr_tracker.spectrogram,
        pulse_hr,
        config.stft_window_s,
        config.stft_hop_s,
        config.hr_band_hz,
    )
    hr_curve = stage(
        "trace_ridge",
        hr_tracker.trace_ridge,
        tf_map,
        config.ridge_transition_penalty,
        pulse_raw.times,
    )
    band = stage(
        "design_second_band",
        hrv.design_second_band,
        hr_curve,
        config.second_filter_offset_bpm,
        pulse_raw.sample_rate,
    )
    pulse_second = stage(
        "zero_phase_bandpass",
        hrv.zero_phase_bandpass,
        pulse_raw,
        band,
        config.filter_order,
    )
    peaks = stage("detect_peaks", hrv.detect_peaks, pulse_second, band)
    if config.enable_interp:
        peaks = stage("refine_peaks", hrv.refine_peaks, pulse_second, peaks)
    ibi = stage("compute_ibi", hrv.compute_ibi, peaks)
    hrv_bpm = stage("ibi_to_hrv", hrv.ibi_to_hrv, ibi)
    detrended = stage("detrend_hrv", hrv.detrend_hrv, hrv_bpm, hr_curve)
    pruned = detrended
    n_removed = 0
    if config.enable_outlier_removal:
        fit = stage("fit_gaussian", outliers.fit_gaussian, detrended)
        pruned = stage("prune", outliers.prune, detrended, fit, config.outlier_alpha)
        n_removed = len(detrended) - len(pruned)
    estimate = stage("estimate_rr", rr.estimate_rr, pruned, config)

    return PipelineResult(
        estimate=estimate,
        diagnostics=PipelineDiagnostics(
            pulse_raw=pulse_raw,
            pulse_hr_band=pulse_hr,
            hr_curve=hr_curve,
            second_band_hz=band,
            pulse_second=pulse_second,
            peaks=peaks,
            ibi=ibi,
            hrv_bpm=hrv_bpm,
            hrv_detrended=detrended,
            hrv_pruned=pruned,
            n_outliers_removed=n_removed,
        ),
    )
