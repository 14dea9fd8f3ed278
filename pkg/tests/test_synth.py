import numpy as np
import pytest

from rrpipe.errors import ValidationError
from rrpipe.hrv import compute_ibi, ibi_to_hrv
from rrpipe.hrv import PeakList
from rrpipe.motion import AffineTransform, PointSet, estimate_affine
from rrpipe.pipeline import run_pipeline
from rrpipe.synth import (
    SynthSpec,
    cardiac_phase,
    gen_point_tracks,
    gen_pulse,
    gen_rgb_trace,
    instantaneous_hr,
)


class TestGenPulse:
    def test_constant_rate_beats_on_integer_seconds(self):
        spec = SynthSpec(duration_s=10, sample_rate_hz=30, hr0_bpm=60)
        _, truth = gen_pulse(spec)
        assert np.allclose(truth.beat_times, np.arange(11), atol=1e-8)
        ibi = np.diff(truth.beat_times)
        assert np.allclose(ibi, 1.0, atol=1e-8)

    def test_beat_count_from_phase_arithmetic(self):
        spec = SynthSpec(duration_s=30, sample_rate_hz=30, hr0_bpm=70)
        _, truth = gen_pulse(spec)
        # phi(30) = 35, so 35 beats beyond the t = 0 phase origin
        assert len(truth.beat_times) == 36
        assert truth.beat_times[0] == 0.0
        assert np.sum(truth.beat_times > 0) == 35

    def test_phase_matches_numerical_integration(self):
        spec = SynthSpec(duration_s=30, sample_rate_hz=30, hr0_bpm=70,
                         rsa_amp_bpm=3, rr_brpm=15)
        grid = np.linspace(0.0, 30.0, 30_001)  # 1 kHz
        hr = instantaneous_hr(spec, grid)
        trapezoid = np.concatenate(
            [[0.0], np.cumsum((hr[1:] + hr[:-1]) / 2 * np.diff(grid))]
        ) / 60.0
        closed = cardiac_phase(spec, grid)
        assert np.max(np.abs(closed - trapezoid)) <= 1e-6

    def test_beat_times_hit_integer_phase(self):
        spec = SynthSpec(duration_s=30, sample_rate_hz=30, hr0_bpm=70,
                         rsa_amp_bpm=3, rr_brpm=15)
        _, truth = gen_pulse(spec)
        phases = cardiac_phase(spec, truth.beat_times)
        assert np.max(np.abs(phases - np.round(phases))) <= 1e-8

    def test_deterministic_for_fixed_seed(self):
        spec = SynthSpec(duration_s=20, sample_rate_hz=30, hr0_bpm=72,
                         rsa_amp_bpm=3, rr_brpm=14, snr_db=12, seed=99)
        p1, t1 = gen_pulse(spec)
        p2, t2 = gen_pulse(spec)
        assert np.array_equal(p1.values, p2.values)
        assert np.array_equal(t1.beat_times, t2.beat_times)

    def test_snr_realization_within_half_db(self):
        for seed in range(100):
            spec = SynthSpec(duration_s=30, sample_rate_hz=30, hr0_bpm=70,
                             rsa_amp_bpm=3, rr_brpm=15, snr_db=15, seed=seed)
            noisy, _ = gen_pulse(spec)
            clean, _ = gen_pulse(SynthSpec(duration_s=30, sample_rate_hz=30,
                                           hr0_bpm=70, rsa_amp_bpm=3, rr_brpm=15,
                                           seed=seed))
            noise = noisy.values - clean.values
            measured = 10 * np.log10(np.mean(clean.values**2) / np.mean(noise**2))
            assert abs(measured - 15.0) <= 0.5

    def test_rsa_survives_ibi_chain_within_5_percent(self):
        # beats -> IBI -> HRV -> remove the baseline trend: the residual
        # must be the RSA sinusoid. Parameters keep the beat-averaging
        # attenuation of the modulation below the 5% budget.
        spec = SynthSpec(duration_s=60, sample_rate_hz=30, hr0_bpm=80,
                         rsa_amp_bpm=4, rr_brpm=10)
        _, truth = gen_pulse(spec)
        beats = truth.beat_times
        peaks = PeakList(beats, np.round(beats * 30).astype(int))
        hrv = ibi_to_hrv(compute_ibi(peaks))
        detrended = hrv.values - spec.hr0_bpm
        w = 2 * np.pi * spec.rr_brpm / 60.0
        basis = np.column_stack([np.sin(w * hrv.times), np.cos(w * hrv.times)])
        coef, *_ = np.linalg.lstsq(basis, detrended, rcond=None)
        amplitude = float(np.hypot(*coef))
        assert amplitude == pytest.approx(spec.rsa_amp_bpm, rel=0.05)

    @pytest.mark.parametrize("kwargs", [
        dict(duration_s=0), dict(sample_rate_hz=-1), dict(hr0_bpm=0),
        dict(rsa_amp_bpm=-1), dict(rsa_amp_bpm=80), dict(rr_brpm=0),
        dict(rr_brpm=60),
    ])
    def test_invalid_specs_rejected(self, kwargs):
        base = dict(duration_s=30, sample_rate_hz=30, hr0_bpm=70)
        with pytest.raises(ValidationError):
            SynthSpec(**{**base, **kwargs})


class TestGenRgbTrace:
    def test_vanishing_strength_gives_constant_channels(self):
        spec = SynthSpec(duration_s=10, sample_rate_hz=30, hr0_bpm=70)
        trace, _ = gen_rgb_trace(spec, pulse_strength=1e-12, drift=0.0)
        assert np.max(np.abs(trace.samples - 1.0)) <= 1e-11

    def test_green_regression_recovers_weight_times_strength(self):
        spec = SynthSpec(duration_s=30, sample_rate_hz=30, hr0_bpm=70,
                         rsa_amp_bpm=3, rr_brpm=15)
        strength = 0.01
        trace, _ = gen_rgb_trace(spec, pulse_strength=strength, drift=0.0)
        clean, _ = gen_pulse(spec)
        slope, intercept = np.polyfit(clean.values, trace.samples[:, 1], 1)
        assert abs(slope - 0.8 * strength) <= 1e-9
        assert intercept == pytest.approx(1.0, abs=1e-9)

    def test_full_pipeline_on_noise_free_trace(self):
        spec = SynthSpec(duration_s=30, sample_rate_hz=30, hr0_bpm=70,
                         rsa_amp_bpm=3, rr_brpm=15)
        trace, truth = gen_rgb_trace(spec)
        result = run_pipeline(trace)
        assert result.estimate.rr_brpm == pytest.approx(15.0, abs=0.5)

    def test_strength_bounds(self):
        spec = SynthSpec(duration_s=10, sample_rate_hz=30, hr0_bpm=70)
        for bad in (0.0, 0.06, -0.01):
            with pytest.raises(ValidationError, match="pulse_strength"):
                gen_rgb_trace(spec, pulse_strength=bad)

    def test_deterministic(self):
        spec = SynthSpec(duration_s=10, sample_rate_hz=30, hr0_bpm=70,
                         snr_db=15, seed=7)
        t1, _ = gen_rgb_trace(spec)
        t2, _ = gen_rgb_trace(spec)
        assert np.array_equal(t1.samples, t2.samples)


class TestGenPointTracks:
    def test_identity_motion_keeps_points(self):
        motion = [AffineTransform.identity() for _ in range(4)]
        table, _ = gen_point_tracks(5, 5, motion, noise_px=0.0, seed=1)
        ids0, coords0 = table.points_at(0)
        for f in range(1, 5):
            ids, coords = table.points_at(f)
            assert np.array_equal(ids, ids0)
            assert np.array_equal(coords, coords0)

    def test_constant_translation_accumulates(self):
        step = AffineTransform(np.eye(2), [1.0, 0.0])
        table, _ = gen_point_tracks(4, 6, [step] * 5, noise_px=0.0, seed=2)
        _, coords0 = table.points_at(0)
        for f in range(6):
            _, coords = table.points_at(f)
            assert np.allclose(coords, coords0 + [f, 0.0], atol=1e-12)

    def test_affine_recovery_closes_the_loop(self):
        rng = np.random.default_rng(3)
        motion = []
        for _ in range(6):
            lin = np.eye(2) + rng.uniform(-0.02, 0.02, (2, 2))
            motion.append(AffineTransform(lin, rng.uniform(-1, 1, 2)))
        table, truth = gen_point_tracks(10, 7, motion, noise_px=0.0, seed=4)
        for f in range(6):
            ids_a, coords_a = table.points_at(f)
            ids_b, coords_b = table.points_at(f + 1)
            fit = estimate_affine(PointSet(ids_a, coords_a), PointSet(ids_b, coords_b))
            assert np.max(np.abs(fit.transform.linear - truth[f].linear)) <= 1e-9
            assert np.max(np.abs(
                fit.transform.translation - truth[f].translation)) <= 1e-9

    def test_motion_length_must_match(self):
        with pytest.raises(ValidationError, match="transforms"):
            gen_point_tracks(5, 5, [AffineTransform.identity()], seed=0)

    def test_too_few_points(self):
        with pytest.raises(ValidationError, match="points"):
            gen_point_tracks(2, 3, [AffineTransform.identity()] * 2, seed=0)
