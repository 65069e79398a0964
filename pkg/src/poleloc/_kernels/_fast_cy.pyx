# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled segment-test kernels; semantics identical to _fast_py."""

import numpy as np

cdef int ARC = 9
cdef int BORDER = 3

cdef int[16] DX
cdef int[16] DY
DX[0] = 0;  DX[1] = 1;  DX[2] = 2;  DX[3] = 3
DX[4] = 3;  DX[5] = 3;  DX[6] = 2;  DX[7] = 1
DX[8] = 0;  DX[9] = -1; DX[10] = -2; DX[11] = -3
DX[12] = -3; DX[13] = -3; DX[14] = -2; DX[15] = -1
DY[0] = -3; DY[1] = -3; DY[2] = -2; DY[3] = -1
DY[4] = 0;  DY[5] = 1;  DY[6] = 2;  DY[7] = 3
DY[8] = 3;  DY[9] = 3;  DY[10] = 2; DY[11] = 1
DY[12] = 0; DY[13] = -1; DY[14] = -2; DY[15] = -3


cdef inline bint _passes(const unsigned char[:, ::1] p, Py_ssize_t y,
                         Py_ssize_t x, int t) noexcept nogil:
    cdef int c = p[y, x]
    cdef int hi = c + t
    cdef int lo = c - t
    cdef int ring[16]
    cdef int k, run, best
    cdef bint any_hi_04 = False, any_hi_812 = False
    cdef bint any_lo_04 = False, any_lo_812 = False

    for k in range(16):
        ring[k] = p[y + DY[k], x + DX[k]]

    # A 9-long arc must include one of {0, 8} and one of {4, 12}.
    any_hi_04 = ring[0] > hi or ring[8] > hi
    any_hi_812 = ring[4] > hi or ring[12] > hi
    any_lo_04 = ring[0] < lo or ring[8] < lo
    any_lo_812 = ring[4] < lo or ring[12] < lo

    if any_hi_04 and any_hi_812:
        run = 0
        best = 0
        for k in range(32):
            if ring[k & 15] > hi:
                run += 1
                if run > best:
                    best = run
                if best >= ARC:
                    return True
            else:
                run = 0
    if any_lo_04 and any_lo_812:
        run = 0
        best = 0
        for k in range(32):
            if ring[k & 15] < lo:
                run += 1
                if run > best:
                    best = run
                if best >= ARC:
                    return True
            else:
                run = 0
    return False


def segment_mask(pixels, int t):
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    cdef const unsigned char[:, ::1] p = pixels
    cdef Py_ssize_t h = p.shape[0]
    cdef Py_ssize_t w = p.shape[1]
    mask = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] m = mask
    cdef Py_ssize_t y, x
    if h < 7 or w < 7:
        return mask.view(bool)
    with nogil:
        for y in range(BORDER, h - BORDER):
            for x in range(BORDER, w - BORDER):
                if _passes(p, y, x, t):
                    m[y, x] = 1
    return mask.view(bool)


cdef inline int _arc_at(const unsigned char[:, ::1] p, Py_ssize_t y,
                        Py_ssize_t x, int t) noexcept nogil:
    cdef int c = p[y, x]
    cdef int hi = c + t
    cdef int lo = c - t
    cdef int ring[16]
    cdef int k, run, best, v
    for k in range(16):
        ring[k] = p[y + DY[k], x + DX[k]]
    best = 0
    run = 0
    for k in range(32):
        if ring[k & 15] > hi:
            run += 1
            if run > best:
                best = run
        else:
            run = 0
    run = 0
    for k in range(32):
        if ring[k & 15] < lo:
            run += 1
            if run > best:
                best = run
        else:
            run = 0
    if best > 16:
        best = 16
    return best


def arc_lengths(pixels, ys, xs, int t):
    """Longest contiguous qualifying arc at threshold t for each (y, x)."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    cdef const unsigned char[:, ::1] p = pixels
    ys64 = np.ascontiguousarray(ys, dtype=np.int64)
    xs64 = np.ascontiguousarray(xs, dtype=np.int64)
    out = np.zeros(ys64.shape[0], dtype=np.int64)
    if ys64.shape[0] == 0:
        return out
    cdef const long long[::1] cy = ys64
    cdef const long long[::1] cx = xs64
    cdef long long[::1] res = out
    cdef Py_ssize_t i, n = ys64.shape[0]
    with nogil:
        for i in range(n):
            res[i] = _arc_at(p, cy[i], cx[i], t)
    return out


def corner_scores(pixels, ys, xs, int t):
    """Max threshold per point, by binary search over the test threshold."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    cdef const unsigned char[:, ::1] p = pixels
    ys64 = np.ascontiguousarray(ys, dtype=np.int64)
    xs64 = np.ascontiguousarray(xs, dtype=np.int64)
    out = np.zeros(ys64.shape[0], dtype=np.int64)
    if ys64.shape[0] == 0:
        return out
    cdef const long long[::1] cy = ys64
    cdef const long long[::1] cx = xs64
    cdef long long[::1] res = out
    cdef Py_ssize_t i, n = ys64.shape[0]
    cdef int lo, hi, mid
    with nogil:
        for i in range(n):
            if not _passes(p, cy[i], cx[i], t):
                # Not a corner even at the detection threshold.
                res[i] = t - 1
                continue
            lo = t
            hi = 254
            while lo < hi:
                mid = (lo + hi + 1) >> 1
                if _passes(p, cy[i], cx[i], mid):
                    lo = mid
                else:
                    hi = mid - 1
            res[i] = lo
    return out
