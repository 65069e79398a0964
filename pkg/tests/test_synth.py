import hashlib
import json
import math

import numpy as np
import pytest

from poleloc import CellSpec, Point2, detect_top_n
from poleloc.errors import SpecInfeasibleError
from poleloc.heatmap import cell_center, pixel_to_cell
from poleloc.synth import (
    composite_pole,
    degrade_predictions,
    generate_dataset,
    generate_sample,
    load_manifest,
)


def dir_digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


class TestGenerateSample:
    def test_bit_identical_regeneration(self, default_spec):
        a = generate_sample(default_spec, 3)
        b = generate_sample(default_spec, 3)
        assert np.array_equal(a.image.pixels, b.image.pixels)
        assert a.poles == b.poles
        assert a.true_roi == b.true_roi

    def test_different_indices_differ(self, default_spec):
        a = generate_sample(default_spec, 0)
        b = generate_sample(default_spec, 1)
        assert not np.array_equal(a.image.pixels, b.image.pixels)

    def test_poles_inside_true_roi(self, default_spec):
        for i in range(10):
            s = generate_sample(default_spec, i)
            for pole in s.poles:
                assert s.true_roi.contains(pole.position)

    def test_true_roi_inside_image(self, default_spec):
        for i in range(10):
            s = generate_sample(default_spec, i)
            roi = s.true_roi
            assert 0 <= roi.top < roi.bottom <= s.image.height
            assert 0 <= roi.left < roi.right <= s.image.width

    def test_polarity_split(self, default_spec):
        s = generate_sample(default_spec, 0)
        polarities = [p.polarity for p in s.poles]
        assert polarities.count("positive") == 2
        assert polarities.count("negative") == 2

    def test_noise_free_pole_matches_profile(self):
        spec = CellSpec(
            seed=11,
            noise_sigma=0.0,
            background_brightness=(20, 20),
            foreground_brightness=(100, 100),
        )
        s = generate_sample(spec, 0)
        # regenerate one pole's neighborhood from the analytic profile
        pole = s.poles[0]
        px, py = pole.position
        region = s.image.pixels[int(py) - 2 : int(py) + 3, int(px) - 2 : int(px) + 3]
        # the blend near the center is blob-dominated; the center pixel must
        # equal the composited profile over any admissible underlay
        ys, xs = np.mgrid[int(py) - 2 : int(py) + 3, int(px) - 2 : int(px) + 3]
        lo = composite_pole(np.full((5, 5), 96.0), 215.0, 3.0 / 1.8, xs - px, ys - py)
        hi = composite_pole(np.full((5, 5), 104.0), 235.0, 4.5 / 1.8, xs - px, ys - py)
        assert (region >= np.floor(lo + 0.5) - 1).all()
        assert (region <= np.floor(hi + 0.5) + 1).all()

    def test_composite_profile_hand_check(self):
        # value = (1 - w) * under + w * blob with w the wide blend weight
        sigma = 2.0
        under = np.array([[150.0]])
        for r in (0.0, 1.0, 3.0):
            got = composite_pole(under, 225.0, sigma, np.array([[r]]), np.array([[0.0]]))
            blob = 225.0 * math.exp(-r * r / (2 * sigma * sigma))
            w = math.exp(-r * r / (2 * (2 * sigma) ** 2))
            assert got[0, 0] == pytest.approx((1 - w) * 150.0 + w * blob, abs=1e-12)

    def test_poles_sit_on_strong_gradients(self, default_spec):
        hits = total = 0
        for i in range(10):
            s = generate_sample(default_spec, i)
            cs = detect_top_n(s.image, 512, 20)
            for pole in s.poles:
                total += 1
                best = min(
                    math.hypot(c.position.x - pole.position.x, c.position.y - pole.position.y)
                    for c in cs.corners
                )
                hits += best <= 4.0
        assert hits / total >= 0.90

    def test_infeasible_spec(self):
        with pytest.raises(SpecInfeasibleError):
            generate_sample(CellSpec(image_dims=(64, 48), band_vertical_extent=(0.9, 0.9)), 0)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CellSpec(num_poles=0)
        with pytest.raises(ValueError):
            CellSpec(pole_radius=(5.0, 3.0))


class TestGenerateDataset:
    def test_writes_images_and_manifest(self, tmp_path, default_spec):
        samples = generate_dataset(default_spec, 10, tmp_path)
        assert len(samples) == 10
        files = sorted((tmp_path / "images").glob("*.png"))
        assert len(files) == 10
        entries = load_manifest(tmp_path / "manifest.json")
        assert len(entries) == 10
        for e in entries:
            assert (tmp_path / e["image"]).exists()
            assert {"top", "bottom", "left", "right"} <= set(e["roi"])
            for p in e["poles"]:
                assert p["polarity"] in ("positive", "negative")

    def test_regeneration_hash_identical(self, tmp_path, default_spec):
        generate_dataset(default_spec, 5, tmp_path / "a")
        generate_dataset(default_spec, 5, tmp_path / "b")
        assert dir_digest(tmp_path / "a") == dir_digest(tmp_path / "b")

    def test_n_validation(self, default_spec):
        with pytest.raises(ValueError):
            generate_dataset(default_spec, 0)

    def test_manifest_roundtrip_positions(self, tmp_path, default_spec):
        samples = generate_dataset(default_spec, 3, tmp_path)
        entries = load_manifest(tmp_path / "manifest.json")
        for s, e in zip(samples, entries):
            for pole, rec in zip(s.poles, e["poles"]):
                assert rec["x"] == pole.position.x
                assert rec["y"] == pole.position.y


class TestDegradePredictions:
    def test_quantize_snaps_to_cell_centers(self):
        truth = [Point2(13.5, 9.5), Point2(20.0, 33.3)]
        out = degrade_predictions(truth, "quantize", stride=4)
        assert out[0].position == Point2(13.5, 9.5)
        for pred, t in zip(out, truth):
            for axis in ("x", "y"):
                v = getattr(pred.position, axis)
                u = pixel_to_cell(v, 4)
                assert u == round(u)  # exactly a cell center
            err = math.hypot(pred.position.x - t.x, pred.position.y - t.y)
            assert err <= 2 * math.sqrt(2) + 1e-12

    def test_jitter_zero_is_identity(self):
        truth = [Point2(5.0, 6.0), Point2(7.5, 8.25)]
        out = degrade_predictions(truth, "jitter", sigma=0.0)
        assert [p.position for p in out] == truth

    def test_jitter_std_matches(self):
        truth = [Point2(100.0, 100.0)] * 1000
        out = degrade_predictions(truth, "jitter", sigma=2.0, seed=123)
        dx = np.array([p.position.x - 100.0 for p in out])
        dy = np.array([p.position.y - 100.0 for p in out])
        assert abs(dx.std() - 2.0) / 2.0 < 0.10
        assert abs(dy.std() - 2.0) / 2.0 < 0.10

    def test_bias_offsets(self):
        out = degrade_predictions([Point2(1.0, 2.0)], "bias", offset=(3.0, -1.0))
        assert out[0].position == Point2(4.0, 1.0)

    def test_deterministic_per_seed(self):
        truth = [Point2(10.0, 10.0)] * 5
        a = degrade_predictions(truth, "jitter", sigma=1.0, seed=9)
        b = degrade_predictions(truth, "jitter", sigma=1.0, seed=9)
        assert a == b

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            degrade_predictions([Point2(0, 0)], "melt")

    def test_empty_truth(self):
        with pytest.raises(ValueError):
            degrade_predictions([], "quantize")
