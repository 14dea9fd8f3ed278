"""Respiratory rate estimation from face-video rPPG traces."""

from .errors import (
    DegenerateGeometryError,
    NumericalError,
    ParseError,
    PipelineStageError,
    ValidationError,
)
from .filters import zero_phase_bandpass
from .hr_tracker import TimeFreqMap, bandpass_hr, spectrogram, trace_ridge, track_hr
from .hrv import (
    PeakList,
    compute_ibi,
    design_second_band,
    detect_peaks,
    detrend_hrv,
    ibi_to_hrv,
    refine_peak,
    refine_peaks,
)
from .metrics import (
    BlandAltman,
    MetricsReport,
    SegmentResult,
    bland_altman,
    compute_metrics,
    format_metrics_row,
)
from .motion import (
    AffineFit,
    AffineTransform,
    PointSet,
    RoiPolygon,
    estimate_affine,
    propagate_roi,
    track_roi,
)
from .outliers import GaussianFit, fit_gaussian, prune
from .pipeline import PipelineDiagnostics, PipelineResult, run_pipeline
from .pos import pos_extract
from .rr import PsdEstimate, RrEstimate, estimate_rr, lomb_scargle, pick_rr, rr_grid
from .synth import GroundTruth, SynthSpec, gen_point_tracks, gen_pulse, gen_rgb_trace
from .trace_io import (
    HrCurve,
    PipelineConfig,
    PointTrackTable,
    PulseSignal,
    RgbTrace,
    UnevenSeries,
    load_config,
    load_hr_curve,
    load_point_tracks,
    load_pulse,
    load_rgb_trace,
    load_roi_csv,
    load_uneven_series,
    write_point_tracks,
    write_rgb_trace,
    write_roi_csv,
    write_series,
)

__version__ = "0.1.0"
