import numpy as np
import pytest

from rrpipe.errors import ValidationError
from rrpipe.metrics import (
    MetricsReport,
    SegmentResult,
    bland_altman,
    compute_metrics,
    format_metrics_row,
)


def results_from(errors, gts):
    return [
        SegmentResult(f"s{i}", gt + e, gt)
        for i, (e, gt) in enumerate(zip(errors, gts))
    ]


class TestComputeMetrics:
    def test_perfect_estimator(self):
        rep = compute_metrics(results_from([0.0] * 5, [15.0] * 5))
        assert rep.mean_error == 0.0
        assert rep.sd_error == 0.0
        assert rep.rmse == 0.0
        assert rep.mean_error_rate == 0.0
        assert rep.pct_within_1 == 100.0
        assert rep.n_segments == 5

    def test_two_segment_hand_example(self):
        rep = compute_metrics(results_from([1.5, -1.5], [15.0, 15.0]))
        assert rep.mean_error == 0.0
        assert rep.rmse == 1.5
        assert rep.mean_error_rate == pytest.approx(10.0, rel=1e-12)
        assert rep.pct_within_1 == 0.0
        assert rep.sd_error == pytest.approx(np.sqrt(4.5), rel=1e-12)

    def test_pct_within_1_is_strict(self):
        rep = compute_metrics(results_from([1.0, 0.999, -1.0, 0.0], [10.0] * 4))
        assert rep.pct_within_1 == 50.0

    def test_single_segment_sd_is_zero(self):
        rep = compute_metrics(results_from([0.7], [14.0]))
        assert rep.sd_error == 0.0
        assert rep.rmse == pytest.approx(0.7)

    def test_rmse_identity_on_random_sets(self):
        rng = np.random.default_rng(51)
        for _ in range(100):
            n = int(rng.integers(1, 40))
            errors = rng.normal(0, 3, n)
            gts = rng.uniform(5, 30, n)
            rep = compute_metrics(results_from(errors, gts))
            lhs = rep.rmse**2
            rhs = rep.mean_error**2 + rep.sd_error**2 * (n - 1) / n
            assert abs(lhs - rhs) <= 1e-9
            assert rep.rmse >= abs(rep.mean_error) - 1e-12

    def test_permutation_invariance(self):
        rng = np.random.default_rng(52)
        errors = rng.normal(0, 2, 30)
        gts = rng.uniform(8, 24, 30)
        results = results_from(errors, gts)
        shuffled = list(results)
        rng.shuffle(shuffled)
        a = compute_metrics(results)
        b = compute_metrics(shuffled)
        for field in ("mean_error", "sd_error", "rmse", "mean_error_rate",
                      "pct_within_1", "n_segments"):
            assert getattr(a, field) == pytest.approx(getattr(b, field), rel=1e-12)

    def test_zero_ground_truth_rejected(self):
        with pytest.raises(ValidationError, match="positive"):
            compute_metrics([SegmentResult("s", 10.0, 0.0)])

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            compute_metrics([])


def test_format_metrics_row_matches_table_shape():
    rep = MetricsReport(mean_error=0.04, sd_error=2.18, rmse=2.16,
                        mean_error_rate=5.92, pct_within_1=78.33, n_segments=60)
    assert format_metrics_row(rep) == "0.04 (2.18)  2.16  5.92%  78.33%"


class TestBlandAltman:
    def test_identical_measurements(self):
        results = [SegmentResult(f"s{i}", 12.0, 12.0) for i in range(5)]
        ba = bland_altman(results)
        assert np.all(ba.diffs == 0.0)
        assert ba.bias == 0.0
        assert ba.loa_lower == 0.0 and ba.loa_upper == 0.0
        assert np.all(ba.means == 12.0)

    def test_two_point_limits(self):
        results = results_from([1.0, -1.0], [15.0, 15.0])
        ba = bland_altman(results)
        assert ba.bias == 0.0
        assert ba.loa_upper == pytest.approx(1.96 * np.sqrt(2.0), rel=1e-12)
        assert ba.loa_lower == pytest.approx(-1.96 * np.sqrt(2.0), rel=1e-12)

    def test_limits_cover_most_diffs(self):
        # 95% limits should cover >= 90% of normally distributed diffs
        fractions = []
        for seed in range(100):
            rng = np.random.default_rng(1000 + seed)
            errors = rng.normal(0.2, 1.5, 60)
            ba = bland_altman(results_from(errors, rng.uniform(8, 24, 60)))
            inside = (ba.diffs >= ba.loa_lower) & (ba.diffs <= ba.loa_upper)
            fractions.append(np.mean(inside))
        # per-corpus coverage fluctuates binomially around 95%
        assert np.mean(fractions) >= 0.90
        assert min(fractions) >= 0.85

    def test_single_segment_rejected(self):
        with pytest.raises(ValidationError):
            bland_altman([SegmentResult("s", 10.0, 11.0)])
