import numpy as np
import pytest

from rrpipe.errors import DegenerateGeometryError, ValidationError
from rrpipe.motion import (
    AffineTransform,
    PointSet,
    RoiPolygon,
    estimate_affine,
    propagate_roi,
    track_roi,
)
from rrpipe.synth import gen_point_tracks
from rrpipe.trace_io import PointTrackTable


def lstsq_oracle(src, dst):
    """Independent fit: stacked 2k x 6 system solved via explicit normal
    equations, parameter order (a11, a12, tx, a21, a22, ty)."""
    k = len(src)
    d = np.zeros((2 * k, 6))
    d[0::2, 0:2] = src
    d[0::2, 2] = 1.0
    d[1::2, 3:5] = src
    d[1::2, 5] = 1.0
    b = dst.reshape(-1)
    params = np.linalg.inv(d.T @ d) @ (d.T @ b)
    return np.array([params[0:2], params[3:5]]), params[[2, 5]]


def point_set(coords, ids=None):
    coords = np.asarray(coords, dtype=float)
    if ids is None:
        ids = np.arange(len(coords))
    return PointSet(ids, coords)


def random_invertible(rng, scale=0.3):
    while True:
        lin = np.eye(2) + rng.uniform(-scale, scale, (2, 2))
        if abs(np.linalg.det(lin)) > 0.05:
            return AffineTransform(lin, rng.uniform(-5, 5, 2))


class TestEstimateAffine:
    def test_identity(self):
        rng = np.random.default_rng(0)
        pts = point_set(rng.uniform(0, 100, (10, 2)))
        fit = estimate_affine(pts, pts)
        assert np.allclose(fit.transform.linear, np.eye(2), atol=1e-9)
        assert np.allclose(fit.transform.translation, 0.0, atol=1e-9)
        assert fit.residual_sum_sq <= 1e-12
        assert fit.n_points == 10

    def test_pure_shift(self):
        rng = np.random.default_rng(1)
        src = point_set(rng.uniform(0, 100, (8, 2)))
        dst = point_set(src.coords + [2.0, 3.0])
        fit = estimate_affine(src, dst)
        assert np.allclose(fit.transform.linear, np.eye(2), atol=1e-9)
        assert np.allclose(fit.transform.translation, [2.0, 3.0], atol=1e-9)
        assert fit.residual_sum_sq <= 1e-12

    def test_known_transform_with_noise_matches_oracle(self):
        rng = np.random.default_rng(2)
        linear = np.array([[1.02, -0.05], [0.04, 0.98]])
        translation = np.array([1.5, -0.7])
        src = rng.uniform(0, 100, (20, 2))
        exact = src @ linear.T + translation

        # zero noise: exact recovery
        fit = estimate_affine(point_set(src), point_set(exact))
        assert np.max(np.abs(fit.transform.linear - linear)) <= 1e-9
        assert np.max(np.abs(fit.transform.translation - translation)) <= 1e-9

        # sigma = 0.1 px noise: match the independent least-squares oracle
        noisy = exact + rng.normal(0, 0.1, exact.shape)
        fit = estimate_affine(point_set(src), point_set(noisy))
        lin_o, tr_o = lstsq_oracle(src, noisy)
        assert np.max(np.abs(fit.transform.linear - lin_o)) <= 1e-9
        assert np.max(np.abs(fit.transform.translation - tr_o)) <= 1e-9

    def test_exact_recovery_over_random_transforms(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a = random_invertible(rng)
            src = rng.uniform(-50, 50, (int(rng.integers(3, 30)), 2))
            if np.linalg.matrix_rank(src - src.mean(0)) < 2:
                continue
            fit = estimate_affine(point_set(src), point_set(a.apply(src)))
            assert np.max(np.abs(fit.transform.linear - a.linear)) <= 1e-9
            assert np.max(np.abs(fit.transform.translation - a.translation)) <= 1e-9

    def test_local_optimality_of_residual(self):
        rng = np.random.default_rng(4)
        src = rng.uniform(0, 100, (15, 2))
        dst = src @ [[1.01, 0.02], [-0.03, 0.99]] + rng.normal(0, 0.5, src.shape)
        fit = estimate_affine(point_set(src), point_set(dst))
        base = fit.residual_sum_sq
        for _ in range(100):
            lin = fit.transform.linear + rng.normal(0, 1e-3, (2, 2))
            tr = fit.transform.translation + rng.normal(0, 1e-3, 2)
            residual = np.sum((dst - (src @ lin.T + tr)) ** 2)
            assert residual >= base - 1e-12

    def test_translation_equivariance(self):
        rng = np.random.default_rng(5)
        src = rng.uniform(0, 100, (12, 2))
        dst = src @ [[0.97, 0.05], [-0.02, 1.03]] + [4.0, -2.0]
        dst += rng.normal(0, 0.2, src.shape)
        shift = np.array([13.0, -7.5])
        fit0 = estimate_affine(point_set(src), point_set(dst))
        fit1 = estimate_affine(point_set(src + shift), point_set(dst + shift))
        lin = fit0.transform.linear
        expected_tr = fit0.transform.translation + shift - lin @ shift
        assert np.allclose(fit1.transform.linear, lin, atol=1e-9)
        assert np.allclose(fit1.transform.translation, expected_tr, atol=1e-8)

    def test_matches_by_id_and_drops_unshared(self):
        src = point_set([[0, 0], [10, 0], [0, 10], [99, 99]], ids=[1, 2, 3, 4])
        dst = point_set([[1, 0], [11, 0], [1, 10]], ids=[1, 2, 3])
        fit = estimate_affine(src, dst)
        assert fit.n_points == 3
        assert np.allclose(fit.transform.translation, [1.0, 0.0], atol=1e-9)

    def test_too_few_common_points(self):
        src = point_set([[0, 0], [1, 0], [0, 1]], ids=[0, 1, 2])
        dst = point_set([[0, 0], [1, 0], [0, 1]], ids=[2, 3, 4])
        with pytest.raises(DegenerateGeometryError, match="common points"):
            estimate_affine(src, dst)

    def test_collinear_points(self):
        src = point_set([[0, 0], [1, 1], [2, 2], [3, 3]])
        with pytest.raises(DegenerateGeometryError, match="collinear"):
            estimate_affine(src, src)


class TestPropagateRoi:
    triangle = RoiPolygon(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))

    def test_identity(self):
        out = propagate_roi(self.triangle, AffineTransform.identity())
        assert np.array_equal(out.vertices, self.triangle.vertices)

    def test_translation(self):
        out = propagate_roi(self.triangle, AffineTransform(np.eye(2), [2.0, 3.0]))
        assert np.allclose(out.vertices, [[2, 3], [3, 3], [2, 4]])

    def test_inverse_composition_round_trip(self):
        rng = np.random.default_rng(6)
        poly = RoiPolygon(np.array([[0, 0], [4, 0], [5, 3], [2, 5], [-1, 2]], float))
        for _ in range(20):
            a = random_invertible(rng)
            back = propagate_roi(propagate_roi(poly, a), a.inverse())
            assert np.max(np.abs(back.vertices - poly.vertices)) <= 1e-9


class TestTrackRoi:
    @staticmethod
    def static_table(n_frames=5, n_points=6):
        rng = np.random.default_rng(7)
        pts = rng.uniform(0, 100, (n_points, 2))
        frames = np.repeat(np.arange(n_frames), n_points)
        ids = np.tile(np.arange(n_points), n_frames)
        xy = np.tile(pts, (n_frames, 1))
        return PointTrackTable(frames, ids, xy[:, 0], xy[:, 1])

    def test_static_tracks_keep_roi(self):
        poly = RoiPolygon(np.array([[10.0, 10.0], [20.0, 10.0], [15.0, 20.0]]))
        out = track_roi(poly, self.static_table())
        assert len(out) == 5
        for p in out:
            assert np.allclose(p.vertices, poly.vertices, atol=1e-9)

    def test_known_motion_matches_ground_truth(self):
        rng = np.random.default_rng(8)
        motion = [random_invertible(rng, scale=0.02) for _ in range(9)]
        table, truth = gen_point_tracks(12, 10, motion, noise_px=0.0, seed=9)
        poly = RoiPolygon(np.array([[20.0, 20.0], [60.0, 25.0], [40.0, 70.0]]))
        out = track_roi(poly, table)
        assert len(out) == 10
        expected = poly
        for f in range(1, 10):
            expected = propagate_roi(expected, truth[f - 1])
            assert np.max(np.abs(out[f].vertices - expected.vertices)) <= 1e-6

    def test_error_names_offending_frame_pair(self):
        frames = np.array([0, 0, 0, 1, 1])
        ids = np.array([0, 1, 2, 0, 1])
        xs = np.array([0.0, 10.0, 0.0, 0.0, 10.0])
        ys = np.array([0.0, 0.0, 10.0, 0.0, 0.0])
        table = PointTrackTable(frames, ids, xs, ys)
        poly = RoiPolygon(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(DegenerateGeometryError, match="frames 0->1"):
            track_roi(poly, table)


class TestPolygonValidation:
    def test_self_intersecting_rejected(self):
        bowtie = [[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]]
        with pytest.raises(ValidationError, match="self-intersecting"):
            RoiPolygon(np.array(bowtie))

    def test_square_ok(self):
        RoiPolygon(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))

    def test_too_few_vertices(self):
        with pytest.raises(ValidationError, match="3 vertices"):
            RoiPolygon(np.array([[0.0, 0.0], [1.0, 0.0]]))


class TestAffineTransformType:
    def test_rejects_singular(self):
        with pytest.raises(ValidationError, match="invertible"):
            AffineTransform(np.zeros((2, 2)), np.zeros(2))

    def test_compose_then_apply(self):
        rng = np.random.default_rng(10)
        a, b = random_invertible(rng), random_invertible(rng)
        pts = rng.uniform(0, 10, (5, 2))
        assert np.allclose(a.compose(b).apply(pts), a.apply(b.apply(pts)))
