import math

import numpy as np
import pytest

from poleloc import Point2
from poleloc.errors import EmptyResultsError, ThetaMismatchError
from poleloc.metrics import (
    EvalReport,
    SampleResult,
    evaluate,
    format_table,
    format_theta,
    nme,
    pck,
    pcs,
    relative_gain,
    report_to_dict,
)


def make_result(sid, pred_pts, gt_pts, d_ref):
    return SampleResult(
        sample_id=sid,
        predictions=tuple(Point2(*p) if p is not None else None for p in pred_pts),
        ground_truth=tuple(Point2(*g) for g in gt_pts),
        d_ref=d_ref,
    )


def brute_force(results, thetas):
    """Independent enumeration of all three metrics."""
    total, err_sum = 0, 0.0
    kp_hits = {t: 0 for t in thetas}
    sample_hits = {t: 0 for t in thetas}
    for r in results:
        worst = 0.0
        for i, g in enumerate(r.ground_truth):
            p = r.predictions[i] if i < len(r.predictions) else None
            if p is None:
                e = 1.0
            else:
                e = math.sqrt((p.x - g.x) ** 2 + (p.y - g.y) ** 2) / r.d_ref
            total += 1
            err_sum += e
            worst = max(worst, e)
            for t in thetas:
                kp_hits[t] += e <= t
        for t in thetas:
            sample_hits[t] += worst <= t
    return (
        err_sum / total * 100.0,
        {t: kp_hits[t] / total for t in thetas},
        {t: sample_hits[t] / len(results) for t in thetas},
    )


def random_results(rng, n_samples=None, n_kp=None):
    n_samples = n_samples or int(rng.integers(1, 51))
    out = []
    for s in range(n_samples):
        k = n_kp or int(rng.integers(1, 9))
        gts = rng.uniform(0, 200, (k, 2))
        preds = gts + rng.normal(0, 2.0, (k, 2))
        out.append(
            make_result(f"s{s}", preds.tolist(), gts.tolist(), float(rng.uniform(50, 400)))
        )
    return out


class TestNme:
    def test_single_term(self):
        r = make_result("a", [(5.0, 0.0)], [(0.0, 0.0)], 100.0)
        assert nme([r]) == pytest.approx(5.0)

    def test_perfect_zero(self):
        r = make_result("a", [(3.0, 4.0)], [(3.0, 4.0)], 10.0)
        assert nme([r]) == 0.0

    def test_brute_force_oracle(self, rng):
        results = random_results(rng, n_samples=20)
        want, _, _ = brute_force(results, [0.01])
        assert nme(results) == pytest.approx(want, abs=1e-12)

    def test_empty_error(self):
        with pytest.raises(EmptyResultsError):
            nme([])


class TestPck:
    def test_perfect(self):
        r = make_result("a", [(1.0, 1.0)], [(1.0, 1.0)], 10.0)
        assert pck([r], 0.001) == 1.0

    def test_boundary_inclusive(self):
        r = make_result("a", [(0.005, 0.0)], [(0.0, 0.0)], 1.0)
        assert pck([r], 0.005) == 1.0

    def test_three_of_eight(self):
        gts = [(0.0, 0.0)] * 8
        preds = [(0.0, 0.0)] * 3 + [(50.0, 0.0)] * 5
        r = make_result("a", preds, gts, 100.0)
        assert pck([r], 0.01) == pytest.approx(0.375)


class TestPcs:
    def test_max_dominates(self):
        results = [
            make_result("a", [(0.0, 0.0), (90.0, 0.0)], [(0.0, 0.0), (0.0, 0.0)], 100.0)
            for _ in range(4)
        ]
        assert pcs(results, 0.01) == 0.0
        assert pck(results, 0.01) == 0.5

    def test_all_perfect(self):
        r = make_result("a", [(1.0, 2.0)], [(1.0, 2.0)], 10.0)
        assert pcs([r], 0.005) == 1.0

    def test_brute_force_oracle(self, rng):
        results = random_results(rng, n_samples=30)
        _, _, want = brute_force(results, [0.005, 0.01, 0.02])
        for t in (0.005, 0.01, 0.02):
            assert pcs(results, t) == pytest.approx(want[t], abs=1e-12)


class TestInvariants:
    def test_threshold_monotonicity(self, rng):
        results = random_results(rng)
        thetas = sorted(rng.uniform(0.001, 0.1, 6))
        pcks = [pck(results, t) for t in thetas]
        pcss = [pcs(results, t) for t in thetas]
        assert pcks == sorted(pcks)
        assert pcss == sorted(pcss)

    def test_pcs_dominated_by_pck(self, rng):
        for _ in range(10):
            results = random_results(rng)
            for t in (0.002, 0.01, 0.05):
                assert pcs(results, t) <= pck(results, t) + 1e-12

    def test_scale_invariance(self, rng):
        results = random_results(rng, n_samples=10)
        scaled = [
            SampleResult(
                r.sample_id,
                tuple(Point2(p.x * 3, p.y * 3) for p in r.predictions),
                tuple(Point2(g.x * 3, g.y * 3) for g in r.ground_truth),
                r.d_ref * 3,
            )
            for r in results
        ]
        assert nme(scaled) == pytest.approx(nme(results), rel=1e-12)
        for t in (0.005, 0.01):
            assert pck(scaled, t) == pck(results, t)
            assert pcs(scaled, t) == pcs(results, t)

    def test_missing_predictions_score_full_error(self):
        r = make_result("a", [(0.0, 0.0)], [(0.0, 0.0), (5.0, 5.0)], 100.0)
        assert nme([r]) == pytest.approx(50.0)  # (0 + 1.0) / 2 * 100
        r2 = make_result("a", [(0.0, 0.0), None], [(0.0, 0.0), (5.0, 5.0)], 100.0)
        assert nme([r2]) == pytest.approx(50.0)


class TestEvaluate:
    def test_report_fields(self, rng):
        results = random_results(rng, n_samples=12)
        rep = evaluate(results)
        assert rep.n_samples == 12
        assert rep.n_keypoints == sum(len(r.ground_truth) for r in results)
        assert set(rep.pck) == {0.005, 0.01}
        assert rep.pck[0.01] >= rep.pcs[0.01]

    def test_deterministic(self, rng):
        results = random_results(rng, n_samples=8)
        assert evaluate(results) == evaluate(results)

    def test_json_dict_keys(self, rng):
        rep = evaluate(random_results(rng, n_samples=3))
        d = report_to_dict(rep)
        assert set(d) == {"nme", "pck", "pcs", "n_samples", "n_keypoints"}
        assert set(d["pck"]) == {"0.005", "0.01"}


class TestRelativeGain:
    """Gain arithmetic checked against the published comparison table."""

    BASE = EvalReport(
        nme=0.658, pck={0.005: 0.421, 0.01: 0.818}, pcs={0.005: 0.239, 0.01: 0.965}
    )
    BEST = EvalReport(
        nme=0.582, pck={0.005: 0.519, 0.01: 0.865}, pcs={0.005: 0.388, 0.01: 0.991}
    )

    def test_published_row(self):
        gain = relative_gain(self.BASE, self.BEST)
        assert gain["nme"] == pytest.approx(11.55, abs=0.005)
        assert gain["pck"][0.005] == pytest.approx(23.28, abs=0.005)
        assert gain["pck"][0.01] == pytest.approx(5.75, abs=0.005)
        assert gain["pcs"][0.005] == pytest.approx(62.34, abs=0.005)
        assert gain["pcs"][0.01] == pytest.approx(2.69, abs=0.005)

    def test_identical_reports_zero(self):
        gain = relative_gain(self.BASE, self.BASE)
        assert gain["nme"] == 0.0
        assert all(v == 0.0 for v in gain["pck"].values())
        assert all(v == 0.0 for v in gain["pcs"].values())

    def test_theta_mismatch(self):
        other = EvalReport(nme=1.0, pck={0.02: 0.5}, pcs={0.02: 0.5})
        with pytest.raises(ThetaMismatchError):
            relative_gain(self.BASE, other)

    def test_zero_baseline_is_none(self):
        base = EvalReport(nme=0.0, pck={0.01: 0.0}, pcs={0.01: 0.0})
        gain = relative_gain(base, self.BASE if False else base)
        assert gain["nme"] is None
        assert gain["pck"][0.01] is None


class TestFormatting:
    def test_theta_labels(self):
        assert format_theta(0.005) == "0.5%"
        assert format_theta(0.01) == "1.0%"

    def test_table_layout(self):
        table = format_table(
            [("raw", TestRelativeGain.BASE), ("corrected", TestRelativeGain.BEST)],
            relative_gain(TestRelativeGain.BASE, TestRelativeGain.BEST),
        )
        head = table.splitlines()[0]
        for col in ("NME(%)", "PCK@0.5%", "PCK@1.0%", "PCS@0.5%", "PCS@1.0%"):
            assert col in head
        assert "0.658" in table and "0.582" in table
        assert "11.55%" in table and "62.34%" in table
