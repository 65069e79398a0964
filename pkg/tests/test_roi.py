import numpy as np
import pytest

from poleloc import GrayImage, Point2, detect_top_n, estimate_roi
from poleloc.corners import CornerPoint, CornerSet
from poleloc.errors import DegenerateProfileWarning, DegenerateRoiError
from poleloc.roi import Roi, RoiParams, RowProfile, roi_from_bounds, row_profile, scan_bounds


def corners_at(points, dims=(256, 192)):
    return CornerSet(
        tuple(CornerPoint(Point2(float(x), float(y))) for x, y in points), dims
    )


class TestRowProfile:
    def test_constant_rows(self):
        img = GrayImage(np.full((2, 3), 10, dtype=np.uint8))
        assert row_profile(img).sums.tolist() == [30.0, 30.0]

    def test_direct_sum(self):
        img = GrayImage(np.array([[0, 0], [255, 255]], dtype=np.uint8))
        assert row_profile(img).sums.tolist() == [0.0, 510.0]

    def test_transpose_oracle(self, random_image):
        sums = row_profile(random_image).sums
        oracle = random_image.pixels.T.astype(float).sum(axis=0)
        assert np.array_equal(sums, oracle)


def step_profile():
    sums = np.zeros(120)
    sums[40:80] = 5000.0
    return RowProfile(sums)


class TestScanBounds:
    def test_step_profile_hand_trace(self):
        top, bottom = scan_bounds(step_profile(), 60, RoiParams(tau=0.5))
        assert (top, bottom) == (39, 80)

    def test_constant_profile_degenerate(self):
        profile = RowProfile(np.full(50, 123.0))
        with pytest.warns(DegenerateProfileWarning):
            top, bottom = scan_bounds(profile, 25, RoiParams())
        assert (top, bottom) == (0, 50)

    def test_tiny_tau_stops_at_first_gradient(self):
        sums = np.zeros(30)
        sums[10:] = 1.0
        sums[20:] = 100.0
        top, bottom = scan_bounds(RowProfile(sums), 15, RoiParams(tau=1e-9))
        assert top == 9  # first row with any nonzero forward difference

    def test_bounds_ordered_on_random_profiles(self, rng):
        params = RoiParams()
        for _ in range(50):
            sums = rng.uniform(0, 1000, 64)
            y0 = int(rng.integers(0, 64))
            top, bottom = scan_bounds(RowProfile(sums), y0, params)
            assert 0 <= top < bottom <= 64

    def test_step_sizes_respected(self):
        # with delta_b=5 the upper pointer only visits multiples of 5
        sums = np.zeros(60)
        sums[23:40] = 900.0  # gradient spike at row 22
        top, bottom = scan_bounds(RowProfile(sums), 30, RoiParams(tau=0.5, delta_b=5))
        assert top == 30  # rows 0,5,10,15,20,25 all miss the spike at 22

    def test_y0_validation(self):
        with pytest.raises(ValueError):
            scan_bounds(step_profile(), 120, RoiParams())


class TestRoiFromBounds:
    def test_direct_formula(self):
        roi = roi_from_bounds(100.0, 50, 150, 0.5, (400, 300))
        assert (roi.left, roi.right) == (50, 150)
        assert (roi.top, roi.bottom) == (50, 150)

    def test_huge_lambda_clamps(self):
        roi = roi_from_bounds(100.0, 10, 100, 50.0, (400, 300))
        assert (roi.left, roi.right) == (0, 400)

    def test_left_clamp(self):
        roi = roi_from_bounds(10.0, 0, 100, 1.0, (400, 300))
        assert (roi.left, roi.right) == (0, 110)

    def test_width_monotone_in_lambda(self):
        widths = [
            roi_from_bounds(128.0, 40, 140, lam, (256, 192)).width
            for lam in (0.2, 0.5, 0.8, 1.1, 1.4)
        ]
        assert widths == sorted(widths)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateRoiError):
            roi_from_bounds(-500.0, 10, 100, 0.1, (256, 192))

    def test_bounds_validation(self):
        with pytest.raises(ValueError):
            roi_from_bounds(10.0, 50, 50, 1.0, (256, 192))


class TestRoi:
    def test_invariants(self):
        with pytest.raises(ValueError):
            Roi(top=5, bottom=5, left=0, right=4)
        with pytest.raises(ValueError):
            Roi(top=0, bottom=4, left=-1, right=4)

    def test_crop_and_diagonal(self, sample0):
        roi = Roi(top=10, bottom=40, left=20, right=60)
        crop = roi.crop(sample0.image)
        assert (crop.height, crop.width) == (30, 40)
        assert roi.diagonal == pytest.approx(50.0)


class TestEstimateRoi:
    def test_synthetic_contains_poles_with_margin(self, default_spec):
        from poleloc.synth import generate_sample

        for i in range(8):
            s = generate_sample(default_spec, i)
            cs = detect_top_n(s.image, 512, 20)
            roi = estimate_roi(s.image, cs, RoiParams())
            for pole in s.poles:
                assert roi.contains(pole.position, margin=4.0)

    def test_flat_image_degenerate_path(self):
        img = GrayImage(np.full((64, 64), 80, dtype=np.uint8))
        cs = corners_at([(30, 30), (34, 30)], dims=(64, 64))
        with pytest.warns(DegenerateProfileWarning):
            roi = estimate_roi(img, cs, RoiParams())
        assert (roi.top, roi.bottom) == (0, 64)

    def test_translation_equivariance(self):
        px = np.zeros((120, 90), dtype=np.uint8)
        px[40:70, 20:70] = 180
        base = GrayImage(px)
        shifted = GrayImage(np.roll(px, 7, axis=0))
        cs_base = corners_at([(40, 50), (50, 55)], dims=(90, 120))
        cs_shift = corners_at([(40, 57), (50, 62)], dims=(90, 120))
        params = RoiParams()
        a = estimate_roi(base, cs_base, params)
        b = estimate_roi(shifted, cs_shift, params)
        assert (b.top, b.bottom) == (a.top + 7, a.bottom + 7)
        assert (b.left, b.right) == (a.left, a.right)
