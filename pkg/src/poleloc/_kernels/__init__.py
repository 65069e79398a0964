"""Corner-test kernels: compiled extension when available, NumPy otherwise.

Set POLELOC_KERNEL=python to force the fallback (used by the benchmark
and by parity tests). Both backends implement the same two functions and
must return bit-identical results:

    segment_mask(pixels, t)   -> bool (H, W) circle-test mask, border False
    corner_scores(pixels, ys, xs, t) -> int64 max-threshold score per point
    arc_lengths(pixels, ys, xs, t)   -> int64 longest qualifying arc per point
"""

import os

from . import _fast_py

if os.environ.get("POLELOC_KERNEL", "").lower() == "python":
    _impl = _fast_py
else:
    try:
        from . import _fast_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fast_py

BACKEND: str = "cython" if _impl is not _fast_py else "python"

segment_mask = _impl.segment_mask
corner_scores = _impl.corner_scores
arc_lengths = _impl.arc_lengths


def available_backends() -> dict:
    """Name -> module for every importable backend."""
    backends = {"python": _fast_py}
    try:
        from . import _fast_cy

        backends["cython"] = _fast_cy
    except ImportError:
        pass
    return backends
