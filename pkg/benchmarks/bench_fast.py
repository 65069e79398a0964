#!/usr/bin/env python3
"""Benchmark the corner-detection kernels: compiled extension vs NumPy.

Times the circle-test mask, the score computation for detected pixels,
and the full ranked detection, on synthetic cell images at several
resolutions. Run from the repository root:

    python benchmarks/bench_fast.py
    python benchmarks/bench_fast.py --sizes 512x384 1024x768 --repeats 5
"""

import argparse
import time

import numpy as np

from poleloc import CellSpec, GrayImage, detect_top_n
from poleloc._kernels import available_backends
from poleloc.synth import generate_sample


def parse_size(text):
    w, h = text.lower().split("x")
    return int(w), int(h)


def make_image(size, seed):
    w, h = size
    spec = CellSpec(image_dims=(w, h), seed=seed)
    return generate_sample(spec, 0).image


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(name, mod, img, threshold, repeats):
    pixels = img.pixels
    mask_s = time_call(lambda: mod.segment_mask(pixels, threshold), repeats)
    ys, xs = np.nonzero(mod.segment_mask(pixels, threshold))
    score_s = time_call(lambda: mod.corner_scores(pixels, ys, xs, threshold), repeats)
    return name, mask_s, score_s, int(ys.size)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--sizes",
        nargs="+",
        type=parse_size,
        default=[(256, 192), (512, 384), (1024, 768)],
        metavar="WxH",
    )
    parser.add_argument("--threshold", type=int, default=20)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    backends = available_backends()
    if "cython" not in backends:
        print("note: compiled kernel not built; timing the fallback only")

    print(f"{'size':>10} {'backend':>8} {'mask ms':>10} {'scores ms':>10} {'candidates':>11}")
    speedups = []
    for size in args.sizes:
        img = make_image(size, args.seed)
        rows = {}
        for name, mod in sorted(backends.items()):
            name, mask_s, score_s, n = bench_backend(
                name, mod, img, args.threshold, args.repeats
            )
            rows[name] = (mask_s, score_s)
            print(
                f"{size[0]}x{size[1]:<5} {name:>8} {mask_s * 1e3:>10.2f} "
                f"{score_s * 1e3:>10.2f} {n:>11}"
            )
        if {"cython", "python"} <= rows.keys():
            ratio = (rows["python"][0] + rows["python"][1]) / (
                rows["cython"][0] + rows["cython"][1]
            )
            speedups.append((size, ratio))

    if speedups:
        print()
        for size, ratio in speedups:
            print(f"compiled speedup at {size[0]}x{size[1]}: {ratio:.1f}x")

    print()
    img = make_image(args.sizes[-1], args.seed)
    t = time_call(lambda: detect_top_n(img, 512, args.threshold), args.repeats)
    print(
        f"detect_top_n(512) end-to-end at {args.sizes[-1][0]}x{args.sizes[-1][1]} "
        f"(active backend): {t * 1e3:.1f} ms"
    )


if __name__ == "__main__":
    main()
