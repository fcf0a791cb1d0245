import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matchprop.metrics import (
    SequenceScore,
    contour_f,
    contour_points,
    default_contour_tolerance,
    jaccard,
    jumpcut_error,
    jumpcut_protocol,
)
from matchprop.synthetic import suite_config
from matchprop.types import (
    ContractViolation,
    EmptyPredictionError,
    FeatureMap,
    binary_mask,
)


def mask_of(rows):
    return binary_mask(np.asarray(rows, dtype=bool))


def square_mask(h, w, top, left, size):
    fg = np.zeros((h, w), bool)
    fg[top : top + size, left : left + size] = True
    return mask_of(fg)


class TestJaccard:
    def test_identical_masks(self):
        m = square_mask(8, 8, 2, 2, 4)
        assert jaccard(m, m) == 1.0

    def test_disjoint_masks(self):
        assert jaccard(square_mask(8, 8, 0, 0, 2), square_mask(8, 8, 5, 5, 2)) == 0.0

    def test_half_overlap_counted(self):
        full = mask_of(np.ones((4, 4), bool))
        half = np.zeros((4, 4), bool)
        half[:, :2] = True
        assert jaccard(mask_of(half), full) == 8 / 16

    def test_both_empty_is_one(self):
        e = mask_of(np.zeros((4, 4), bool))
        assert jaccard(e, e) == 1.0

    def test_symmetric(self):
        a = square_mask(8, 8, 1, 1, 4)
        b = square_mask(8, 8, 3, 3, 4)
        assert jaccard(a, b) == jaccard(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            jaccard(square_mask(4, 4, 0, 0, 2), square_mask(5, 5, 0, 0, 2))


def brute_force_match_fraction(points_a, points_b, tol):
    """Fraction of a-points within tol of some b-point (exhaustive)."""
    hits = 0
    for ya, xa in points_a:
        if min((ya - yb) ** 2 + (xa - xb) ** 2 for yb, xb in points_b) <= tol * tol:
            hits += 1
    return hits / len(points_a)


class TestContourF:
    def test_identical_masks(self):
        m = square_mask(10, 10, 2, 3, 4)
        assert contour_f(m, m, 0.0) == 1.0
        assert contour_f(m, m) == 1.0

    def test_far_apart_is_zero(self):
        assert contour_f(square_mask(20, 20, 0, 0, 3), square_mask(20, 20, 14, 14, 3), 2.0) == 0.0

    def test_one_pixel_shift_tol_one(self):
        a = square_mask(12, 12, 3, 3, 5)
        b = square_mask(12, 12, 3, 4, 5)
        assert contour_f(a, b, 1.0) == 1.0

    def test_one_pixel_shift_small_tol_matches_brute_force(self):
        a = square_mask(12, 12, 3, 3, 5)
        b = square_mask(12, 12, 3, 4, 5)
        pa = list(zip(*np.nonzero(contour_points(a.labels > 0))))
        pb = list(zip(*np.nonzero(contour_points(b.labels > 0))))
        precision = brute_force_match_fraction(pa, pb, 0.5)
        recall = brute_force_match_fraction(pb, pa, 0.5)
        want = 2 * precision * recall / (precision + recall)
        assert contour_f(a, b, 0.5) == pytest.approx(want)

    def test_both_empty_is_one(self):
        e = mask_of(np.zeros((6, 6), bool))
        assert contour_f(e, e, 1.0) == 1.0

    def test_one_empty_is_zero(self):
        e = mask_of(np.zeros((6, 6), bool))
        assert contour_f(square_mask(6, 6, 1, 1, 3), e, 1.0) == 0.0

    def test_default_tolerance_is_half_percent_of_diagonal(self):
        assert default_contour_tolerance(480, 854) == math.ceil(0.005 * math.hypot(854, 480))

    @settings(max_examples=30)
    @given(seed=st.integers(0, 10_000), t1=st.floats(0, 5), t2=st.floats(0, 5))
    def test_monotone_in_tolerance(self, seed, t1, t2):
        lo, hi = sorted((t1, t2))
        rng = np.random.default_rng(seed)
        a = mask_of(rng.random((10, 10)) < 0.4)
        b = mask_of(rng.random((10, 10)) < 0.4)
        assert contour_f(a, b, lo) <= contour_f(a, b, hi) + 1e-12

    def test_filled_frame_has_a_contour(self):
        full = mask_of(np.ones((5, 5), bool))
        assert contour_points(full.labels > 0).sum() == 16  # the border ring


class TestJumpcutError:
    def test_perfect_prediction(self):
        m = square_mask(20, 20, 5, 5, 10)
        assert jumpcut_error(m, m) == 0.0

    def test_single_false_positive(self):
        gt = np.zeros((20, 20), bool)
        gt[:10, :10] = True  # 100 px
        pred = gt.copy()
        pred[15, 15] = True  # 101 px
        assert jumpcut_error(mask_of(pred), mask_of(gt)) == pytest.approx(1 / 101)

    def test_disjoint_equal_sizes(self):
        pred = np.zeros((20, 20), bool)
        pred[:5, :10] = True  # 50 px
        gt = np.zeros((20, 20), bool)
        gt[10:15, :10] = True  # 50 px
        assert jumpcut_error(mask_of(pred), mask_of(gt)) == 2.0

    def test_empty_prediction_raises(self):
        with pytest.raises(EmptyPredictionError):
            jumpcut_error(mask_of(np.zeros((4, 4), bool)), square_mask(4, 4, 0, 0, 2))

    def test_not_symmetric(self):
        pred = np.zeros((10, 10), bool)
        pred[:2, :2] = True  # 4 px
        gt = np.zeros((10, 10), bool)
        gt[:4, :4] = True  # 16 px
        assert jumpcut_error(mask_of(pred), mask_of(gt)) != jumpcut_error(mask_of(gt), mask_of(pred))


class TestTranslationInvariance:
    @settings(max_examples=20)
    @given(seed=st.integers(0, 10_000), dy=st.integers(0, 4), dx=st.integers(0, 4))
    def test_all_metrics(self, seed, dy, dx):
        rng = np.random.default_rng(seed)
        base_p = rng.random((8, 8)) < 0.4
        base_g = rng.random((8, 8)) < 0.4
        canvas_p = np.zeros((16, 16), bool)
        canvas_g = np.zeros((16, 16), bool)
        canvas_p[:8, :8] = base_p
        canvas_g[:8, :8] = base_g
        moved_p = np.roll(np.roll(canvas_p, dy, 0), dx, 1)
        moved_g = np.roll(np.roll(canvas_g, dy, 0), dx, 1)
        assert jaccard(mask_of(canvas_p), mask_of(canvas_g)) == jaccard(
            mask_of(moved_p), mask_of(moved_g)
        )
        assert contour_f(mask_of(canvas_p), mask_of(canvas_g), 1.5) == pytest.approx(
            contour_f(mask_of(moved_p), mask_of(moved_g), 1.5)
        )
        if canvas_p.any():
            assert jumpcut_error(mask_of(canvas_p), mask_of(canvas_g)) == jumpcut_error(
                mask_of(moved_p), mask_of(moved_g)
            )


class TestSequenceScore:
    def test_mean(self):
        s = SequenceScore((0.1, 0.3))
        assert s.mean == pytest.approx(0.2)


def orthogonal_features(fg: np.ndarray):
    """Stride-1 features, orthogonal FG/BG vectors: matching is exact."""
    h, w = fg.shape
    data = np.zeros((h, w, 2), np.float32)
    data[fg, 0] = 1.0
    data[~fg, 1] = 1.0
    return FeatureMap(data, stride=1)


def static_fixture(num_frames):
    """Identical frames with separable features: propagation is exact."""
    gt = np.zeros((16, 16), bool)
    gt[4:12, 6:14] = True
    feats = [orthogonal_features(gt) for _ in range(num_frames)]
    masks = {i: binary_mask(gt) for i in range(num_frames)}
    return feats, masks


class TestJumpcutProtocol:
    def test_perfect_propagation_scores_zero(self):
        feats, masks = static_fixture(6)
        report = jumpcut_protocol(feats, masks, suite_config(), keyframes=(0,), transfer_distance=5)
        assert report["error_rate"] == 0.0
        assert len(report["per_keyframe"]) == 1

    def test_single_keyframe_average(self):
        feats, masks = static_fixture(4)
        report = jumpcut_protocol(feats, masks, suite_config(), keyframes=(0,), transfer_distance=3)
        assert report["error_rate"] == report["per_keyframe"][0]["error"]

    def test_mean_of_keyframe_errors(self):
        feats, masks = static_fixture(8)
        report = jumpcut_protocol(
            feats, masks, suite_config(), keyframes=(0, 2), transfer_distance=4
        )
        errors = [e["error"] for e in report["per_keyframe"]]
        assert report["error_rate"] == pytest.approx(float(np.mean(errors)))

    def test_short_sequence_skips_with_warning(self):
        feats, masks = static_fixture(5)
        with pytest.warns(UserWarning, match="too short"):
            report = jumpcut_protocol(
                feats, masks, suite_config(), keyframes=(0, 3), transfer_distance=4
            )
        assert len(report["per_keyframe"]) == 1
        assert report["warnings"]

    def test_outlier_removal_disabled_for_transfer(self):
        # the object jumps farther than the extrusion reach between the
        # keyframe and the target; with the filter active the prediction
        # would be wiped out, so a zero error proves the filter was off
        gt_a = np.zeros((16, 32), bool)
        gt_a[4:8, 2:6] = True
        gt_b = np.zeros((16, 32), bool)
        gt_b[10:14, 26:30] = True
        feats = [orthogonal_features(gt_a), orthogonal_features(gt_b)]
        masks = {0: binary_mask(gt_a), 1: binary_mask(gt_b)}
        cfg = suite_config(extrusion_radius=5.0)
        report = jumpcut_protocol(feats, masks, cfg, keyframes=(0,), transfer_distance=1)
        assert report["error_rate"] == 0.0
