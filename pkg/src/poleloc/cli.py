"""Command-line driver: dataset synthesis, the detection pipeline, evaluation.

Subcommands: synth, detect-corners, estimate-roi, predict, correct,
pipeline, evaluate. Batch inputs are a manifest (JSON array of image +
annotation entries); single images are accepted wherever a manifest is.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from PIL import Image, ImageDraw

from . import metrics, synth
from .config import PipelineConfig, load_config
from .corners import CornerPoint, CornerSet, detect_top_n
from .correct import CorrectedPole, correct_all, reference_feature
from .errors import ConfigError, IdMismatchError, PolelocError
from .heatmap import PolePrediction, decode_all, predict
from .image import GrayImage, Point2, load_image
from .metrics import SampleResult
from .roi import Roi, estimate_roi

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


# ---------------------------------------------------------------------------
# JSON schemas


def corner_set_to_dict(cs: CornerSet) -> dict:
    return {
        "width": cs.source_dims[0],
        "height": cs.source_dims[1],
        "corners": [
            {
                "x": c.position.x,
                "y": c.position.y,
                "response": c.response,
                "orientation": c.orientation,
            }
            for c in cs.corners
        ],
    }


def corner_set_from_dict(data: dict) -> CornerSet:
    corners = tuple(
        CornerPoint(
            Point2(float(c["x"]), float(c["y"])),
            float(c.get("response", 0.0)),
            float(c.get("orientation", 0.0)),
        )
        for c in data["corners"]
    )
    return CornerSet(corners, (int(data["width"]), int(data["height"])))


def roi_to_dict(roi: Roi) -> dict:
    return {"top": roi.top, "bottom": roi.bottom, "left": roi.left, "right": roi.right}


def roi_from_dict(data: dict) -> Roi:
    return Roi(
        top=int(data["top"]),
        bottom=int(data["bottom"]),
        left=int(data["left"]),
        right=int(data["right"]),
    )


def _pole_entry(
    pred: PolePrediction, corr: CorrectedPole, offset: tuple[int, int]
) -> dict:
    ox, oy = offset
    return {
        "index": pred.pole_index,
        "raw": {"x": pred.position.x + ox, "y": pred.position.y + oy, "score": pred.score},
        "corrected": {"x": corr.refined.x + ox, "y": corr.refined.y + oy},
        "alpha": corr.alpha,
        "beta": corr.beta,
        "low_confidence": corr.low_confidence,
        "corner": (
            None
            if corr.reference is None
            else {"x": corr.reference.x + ox, "y": corr.reference.y + oy}
        ),
    }


# ---------------------------------------------------------------------------
# Pipeline


def run_pipeline_on_image(
    img: GrayImage, cfg: PipelineConfig, sample_id: str
) -> dict:
    """Corners -> crop -> heatmaps -> decode -> correct, one image.

    Positions in the returned entry are in full-image coordinates.
    """
    corners = detect_top_n(img, cfg.corner.n, cfg.corner.threshold)
    roi = estimate_roi(img, corners, cfg.roi)
    crop = roi.crop(img)

    heatmaps = predict(crop, cfg.predictor, stem=sample_id)
    preds = decode_all(heatmaps)

    shifted = tuple(
        CornerPoint(
            Point2(c.position.x - roi.left, c.position.y - roi.top),
            c.response,
            c.orientation,
        )
        for c in corners.corners
        if roi.left <= c.position.x < roi.right and roi.top <= c.position.y < roi.bottom
    )
    roi_corners = CornerSet(shifted, (roi.width, roi.height))

    # Inference mode: the predictions themselves seed the reference feature.
    ref = reference_feature(crop, [p.position for p in preds], [], cfg.correction)
    corrected = correct_all(preds, roi_corners, crop, ref, cfg.correction)

    return {
        "sample_id": sample_id,
        "roi": roi_to_dict(roi),
        "poles": [
            _pole_entry(p, c, (roi.left, roi.top)) for p, c in zip(preds, corrected)
        ],
    }


def _iter_inputs(path: Path) -> list[tuple[str, Path]]:
    """(sample_id, image path) pairs from a manifest or a single image."""
    if path.suffix.lower() == ".json":
        entries = synth.load_manifest(path)
        return [
            (Path(e["image"]).stem, path.parent / e["image"]) for e in entries
        ]
    return [(path.stem, path)]


# ---------------------------------------------------------------------------
# Overlay rendering


def render_overlay(img: GrayImage, entry: dict) -> Image.Image:
    """Ground-glass view of one result: crop box, corners, raw/refined poles."""
    canvas = Image.fromarray(img.pixels, mode="L").convert("RGB")
    draw = ImageDraw.Draw(canvas)
    roi = entry.get("roi")
    if roi:
        draw.rectangle(
            [roi["left"], roi["top"], roi["right"] - 1, roi["bottom"] - 1],
            outline=(240, 200, 40),
        )
    for pole in entry.get("poles", []):
        corner = pole.get("corner")
        if corner:
            x, y = corner["x"], corner["y"]
            draw.line([x - 3, y, x + 3, y], fill=(60, 220, 60))
            draw.line([x, y - 3, x, y + 3], fill=(60, 220, 60))
        raw = pole["raw"]
        draw.line([raw["x"] - 3, raw["y"] - 3, raw["x"] + 3, raw["y"] + 3], fill=(230, 60, 60))
        draw.line([raw["x"] - 3, raw["y"] + 3, raw["x"] + 3, raw["y"] - 3], fill=(230, 60, 60))
        cor = pole["corrected"]
        draw.ellipse(
            [cor["x"] - 3, cor["y"] - 3, cor["x"] + 3, cor["y"] + 3],
            outline=(80, 200, 240),
        )
    return canvas


# ---------------------------------------------------------------------------
# Evaluation helpers


def _match_auto(
    preds: list[Point2], gts: list[Point2]
) -> list[Optional[Point2]]:
    """Assign predictions to ground truth minimizing total distance.

    Exhaustive for up to 6 keypoints, greedy nearest-pair beyond.
    """
    if not preds:
        return [None] * len(gts)
    dist = [[math.hypot(p.x - g.x, p.y - g.y) for p in preds] for g in gts]
    n_g, n_p = len(gts), len(preds)
    if max(n_g, n_p) <= 6:
        best, best_cost = None, math.inf
        idx = list(range(n_p))
        for perm in itertools.permutations(idx, min(n_g, n_p)):
            if n_g <= n_p:
                cost = sum(dist[g][perm[g]] for g in range(n_g))
            else:
                cost = sum(dist[g][p] for g, p in enumerate(perm))
            if cost < best_cost:
                best, best_cost = perm, cost
        out: list[Optional[Point2]] = [None] * n_g
        for g, p in enumerate(best[:n_g]):
            out[g] = preds[p]
        return out
    pairs = sorted(
        ((dist[g][p], g, p) for g in range(n_g) for p in range(n_p)),
    )
    out = [None] * n_g
    used_g, used_p = set(), set()
    for _, g, p in pairs:
        if g in used_g or p in used_p:
            continue
        out[g] = preds[p]
        used_g.add(g)
        used_p.add(p)
    return out


def build_sample_results(
    results: list[dict],
    manifest: list[dict],
    which: str,
    match: str = "auto",
) -> list[SampleResult]:
    """Pair result entries with manifest ground truth; `which` is raw|corrected."""
    by_id = {}
    for e in manifest:
        by_id[Path(e["image"]).stem] = e
    out = []
    for entry in results:
        sid = entry.get("sample_id")
        if "error" in entry:
            continue
        if sid not in by_id:
            raise IdMismatchError(f"sample {sid!r} not in manifest")
        truth = [Point2(p["x"], p["y"]) for p in by_id[sid]["poles"]]
        preds = [
            Point2(pole[which]["x"], pole[which]["y"]) for pole in entry["poles"]
        ]
        if match == "auto":
            matched = _match_auto(preds, truth)
        elif match == "index":
            matched = [preds[i] if i < len(preds) else None for i in range(len(truth))]
        else:
            raise ValueError(f"unknown match mode {match!r}")
        d_ref = roi_from_dict(entry["roi"]).diagonal
        out.append(
            SampleResult(
                sample_id=sid,
                predictions=tuple(matched),
                ground_truth=tuple(truth),
                d_ref=d_ref,
            )
        )
    if not out:
        raise IdMismatchError("no evaluable samples (all failed or unmatched)")
    return out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args) -> int:
    spec = synth.CellSpec()
    if args.spec:
        data = json.loads(Path(args.spec).read_text())
        for key in ("image_dims", "pole_radius", "band_vertical_extent",
                    "background_brightness", "foreground_brightness"):
            if key in data:
                data[key] = tuple(data[key])
        spec = replace(spec, **data)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    synth.generate_dataset(spec, args.n, args.out)
    print(f"wrote {args.n} samples to {args.out}")
    return 0


def cmd_detect_corners(args) -> int:
    img = load_image(args.image)
    cs = detect_top_n(img, args.n, args.threshold)
    payload = corner_set_to_dict(cs)
    _write_json(args.out, payload)
    if args.overlay:
        canvas = Image.fromarray(img.pixels, mode="L").convert("RGB")
        draw = ImageDraw.Draw(canvas)
        for c in cs.corners:
            x, y = c.position.x, c.position.y
            draw.line([x - 2, y, x + 2, y], fill=(60, 220, 60))
            draw.line([x, y - 2, x, y + 2], fill=(60, 220, 60))
        canvas.save(args.overlay)
    print(f"{len(cs)} corners")
    return 0


def cmd_estimate_roi(args) -> int:
    cfg = _load_cfg(args)
    img = load_image(args.image)
    corners = detect_top_n(img, cfg.corner.n, cfg.corner.threshold)
    roi = estimate_roi(img, corners, cfg.roi)
    _write_json(args.out, roi_to_dict(roi))
    print(f"roi rows [{roi.top}, {roi.bottom}) cols [{roi.left}, {roi.right})")
    return 0


def cmd_predict(args) -> int:
    cfg = _load_cfg(args)
    img = load_image(args.image)
    sample_id = Path(args.image).stem
    if args.roi:
        roi = roi_from_dict(json.loads(Path(args.roi).read_text()))
    else:
        corners = detect_top_n(img, cfg.corner.n, cfg.corner.threshold)
        roi = estimate_roi(img, corners, cfg.roi)
    crop = roi.crop(img)
    preds = decode_all(predict(crop, cfg.predictor, stem=sample_id))
    payload = {
        "sample_id": sample_id,
        "roi": roi_to_dict(roi),
        "poles": [
            {
                "index": p.pole_index,
                "x": p.position.x + roi.left,
                "y": p.position.y + roi.top,
                "score": p.score,
            }
            for p in preds
        ],
    }
    _write_json(args.out, payload)
    print(f"{len(preds)} poles predicted")
    return 0


def cmd_correct(args) -> int:
    cfg = _load_cfg(args)
    img = load_image(args.image)
    data = json.loads(Path(args.predictions).read_text())
    roi = roi_from_dict(data["roi"])
    crop = roi.crop(img)
    preds = [
        PolePrediction(
            Point2(p["x"] - roi.left, p["y"] - roi.top), p.get("score", 0.0), p["index"]
        )
        for p in data["poles"]
    ]
    corners = detect_top_n(img, cfg.corner.n, cfg.corner.threshold)
    shifted = tuple(
        CornerPoint(
            Point2(c.position.x - roi.left, c.position.y - roi.top),
            c.response,
            c.orientation,
        )
        for c in corners.corners
        if roi.left <= c.position.x < roi.right and roi.top <= c.position.y < roi.bottom
    )
    roi_corners = CornerSet(shifted, (roi.width, roi.height))
    ref = reference_feature(crop, [p.position for p in preds], [], cfg.correction)
    corrected = correct_all(preds, roi_corners, crop, ref, cfg.correction)
    entry = {
        "sample_id": data.get("sample_id", Path(args.image).stem),
        "roi": roi_to_dict(roi),
        "poles": [
            _pole_entry(p, c, (roi.left, roi.top)) for p, c in zip(preds, corrected)
        ],
    }
    _write_json(args.out, [entry])
    print("corrected 1 sample")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _load_cfg(args)
    inputs = _iter_inputs(Path(args.input))
    results = []
    failures = 0
    for sample_id, image_path in inputs:
        try:
            img = load_image(image_path)
            entry = run_pipeline_on_image(img, cfg, sample_id)
        except (PolelocError, FileNotFoundError, ValueError) as exc:
            results.append({"sample_id": sample_id, "error": str(exc)})
            failures += 1
            continue
        results.append(entry)
        if args.overlay_dir:
            out_dir = Path(args.overlay_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            render_overlay(img, entry).save(out_dir / f"{sample_id}.png")
    _write_json(args.out, results)
    done = len(results) - failures
    print(f"processed {done}/{len(results)} samples" + (f" ({failures} failed)" if failures else ""))
    return 0


def cmd_evaluate(args) -> int:
    results = json.loads(Path(args.results).read_text())
    manifest = synth.load_manifest(args.manifest)
    thetas = tuple(args.thetas)
    raw = metrics.evaluate(
        build_sample_results(results, manifest, "raw", args.match), thetas
    )
    corrected = metrics.evaluate(
        build_sample_results(results, manifest, "corrected", args.match), thetas
    )
    gain = metrics.relative_gain(raw, corrected)
    table = metrics.format_table([("raw", raw), ("corrected", corrected)], gain)
    print(table)
    payload = {
        "raw": metrics.report_to_dict(raw),
        "corrected": metrics.report_to_dict(corrected),
        "relative_gain": {
            "nme": gain["nme"],
            "pck": {f"{t:g}": v for t, v in gain["pck"].items()},
            "pcs": {f"{t:g}": v for t, v in gain["pcs"].items()},
        },
    }
    if args.out:
        _write_json(args.out, payload)
    if args.csv:
        _append_csv(Path(args.csv), args.label, thetas, raw, corrected)
    return 0


def _append_csv(path: Path, label: str, thetas, raw, corrected) -> None:
    headers = (
        ["label", "variant", "n_samples", "nme"]
        + [f"pck@{metrics.format_theta(t)}" for t in thetas]
        + [f"pcs@{metrics.format_theta(t)}" for t in thetas]
    )
    new = not path.exists()
    with path.open("a", newline="") as f:
        writer = csv.writer(f)
        if new:
            writer.writerow(headers)
        for variant, rep in (("raw", raw), ("corrected", corrected)):
            writer.writerow(
                [label, variant, rep.n_samples, f"{rep.nme:.6f}"]
                + [f"{rep.pck[t]:.6f}" for t in thetas]
                + [f"{rep.pcs[t]:.6f}" for t in thetas]
            )


def _write_json(path: str | Path | None, payload) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_cfg(args) -> PipelineConfig:
    return load_config(args.config) if args.config else PipelineConfig()


# ---------------------------------------------------------------------------
# Parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="poleloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--spec", help="JSON file overriding generator fields")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect-corners", help="corner detection on one image")
    p.add_argument("image")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--threshold", type=int, default=20)
    p.add_argument("--out", help="corner JSON path (default stdout)")
    p.add_argument("--overlay", help="write an annotated PNG here")
    p.set_defaults(func=cmd_detect_corners)

    p = sub.add_parser("estimate-roi", help="crop-rectangle estimation")
    p.add_argument("image")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate_roi)

    p = sub.add_parser("predict", help="heatmap prediction inside the crop")
    p.add_argument("image")
    p.add_argument("--config")
    p.add_argument("--roi", help="crop JSON (skips estimation)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("correct", help="corner-based position correction")
    p.add_argument("image")
    p.add_argument("--predictions", required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("pipeline", help="full pipeline over an image or manifest")
    p.add_argument("input", help="image file or manifest.json")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--overlay-dir")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("evaluate", help="score results against a manifest")
    p.add_argument("results")
    p.add_argument("manifest")
    p.add_argument("--thetas", type=float, nargs="+", default=list(metrics.DEFAULT_THETAS))
    p.add_argument("--match", choices=("auto", "index"), default="auto")
    p.add_argument("--out")
    p.add_argument("--csv", help="append one row per variant to this CSV")
    p.add_argument("--label", default="run")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PolelocError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # internal fault
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
