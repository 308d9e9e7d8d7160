# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid kernels; results match ``_kernels_py`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, INFINITY

cnp.import_array()

from doorscape._kernels_py import REMOVABLE_LUT, INF_SQ as _INF_SQ

cdef long long INF_SQ = _INF_SQ
cdef int RING_R[8]
cdef int RING_C[8]
RING_R[:] = [-1, -1, -1, 0, 1, 1, 1, 0]
RING_C[:] = [-1, 0, 1, 1, 1, 0, -1, -1]


def edt(occupied):
    cdef cnp.uint8_t[:, ::1] occ = np.ascontiguousarray(occupied, dtype=np.uint8)
    cdef Py_ssize_t h = occ.shape[0], w = occ.shape[1]
    cdef cnp.int64_t[:, ::1] row_f = np.empty((h, w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] row_col = np.empty((h, w), dtype=np.int64)
    dist_a = np.empty((h, w), dtype=np.int64)
    wr_a = np.empty((h, w), dtype=np.int64)
    wc_a = np.empty((h, w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] dist = dist_a
    cdef cnp.int64_t[:, ::1] wr = wr_a
    cdef cnp.int64_t[:, ::1] wc = wc_a
    cdef cnp.int64_t[::1] v = np.empty(max(h, 1), dtype=np.int64)
    cdef double[::1] z = np.empty(h + 1, dtype=np.float64)
    cdef Py_ssize_t r, c, q, p, last
    cdef long long d, fq
    cdef Py_ssize_t k
    cdef double s

    # row pass: nearest obstacle column, ties to the smaller column
    for r in range(h):
        last = -1
        for c in range(w):
            if occ[r, c]:
                last = c
            row_col[r, c] = last
        last = -1
        for c in range(w - 1, -1, -1):
            if occ[r, c]:
                last = c
            if last >= 0 and (row_col[r, c] < 0 or last - c < c - row_col[r, c]):
                row_col[r, c] = last
            if row_col[r, c] >= 0:
                d = row_col[r, c] - c
                row_f[r, c] = d * d
            else:
                row_f[r, c] = INF_SQ

    # column pass: lower envelope of parabolas, ties to the smaller row
    for c in range(w):
        k = -1
        for q in range(h):
            fq = row_f[q, c]
            if fq >= INF_SQ:
                continue
            if k < 0:
                k = 0
                v[0] = q
                z[0] = -INFINITY
                z[1] = INFINITY
                continue
            while True:
                p = v[k]
                s = <double>((fq + q * q) - (row_f[p, c] + p * p)) / <double>(2 * q - 2 * p)
                if s <= z[k]:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = INFINITY
        if k < 0:
            for q in range(h):
                dist[q, c] = INF_SQ
                wr[q, c] = -1
                wc[q, c] = -1
            continue
        k = 0
        for q in range(h):
            while z[k + 1] < q:
                k += 1
            p = v[k]
            dist[q, c] = (q - p) * (q - p) + row_f[p, c]
            wr[q, c] = p
            wc[q, c] = row_col[p, c]
    return dist_a, wr_a, wc_a


def ridge_mask(free, dist_sq, wit_r, wit_c, long long min_sep_sq):
    cdef cnp.uint8_t[:, ::1] fr = np.ascontiguousarray(free, dtype=np.uint8)
    cdef cnp.int64_t[:, ::1] d = np.ascontiguousarray(dist_sq, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] wr = np.ascontiguousarray(wit_r, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] wc = np.ascontiguousarray(wit_c, dtype=np.int64)
    cdef Py_ssize_t h = fr.shape[0], w = fr.shape[1]
    out_a = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_a
    cdef int pr[4]
    cdef int pc[4]
    pr[:] = [1, 0, 1, 1]
    pc[:] = [0, 1, 1, -1]
    cdef Py_ssize_t r, c, ar, ac, br, bc
    cdef int i
    cdef long long sep, er, ec
    for r in range(h):
        for c in range(w):
            if not fr[r, c]:
                continue
            for i in range(4):
                ar = r + pr[i]
                ac = c + pc[i]
                br = r - pr[i]
                bc = c - pc[i]
                if ar < 0 or ar >= h or br < 0 or br >= h:
                    continue
                if ac < 0 or ac >= w or bc < 0 or bc >= w:
                    continue
                er = wr[ar, ac] - wr[br, bc]
                ec = wc[ar, ac] - wc[br, bc]
                sep = er * er + ec * ec
                if sep > min_sep_sq and d[r, c] >= d[ar, ac] and d[r, c] >= d[br, bc]:
                    out[r, c] = 1
                    break
    return out_a.astype(bool)


def thin(mask):
    cdef cnp.uint8_t[:, ::1] img = np.pad(np.asarray(mask, dtype=np.uint8), 1)
    cdef cnp.uint8_t[::1] lut = np.ascontiguousarray(REMOVABLE_LUT, dtype=np.uint8)
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t r, c
    cdef int i, code
    cdef bint changed = True
    while changed:
        changed = False
        for r in range(1, h - 1):
            for c in range(1, w - 1):
                if not img[r, c]:
                    continue
                code = 0
                for i in range(8):
                    if img[r + RING_R[i], c + RING_C[i]]:
                        code |= 1 << i
                if lut[code]:
                    img[r, c] = 0
                    changed = True
    return np.asarray(img)[1:-1, 1:-1].astype(bool)


def rasterize(segments, shape, double eps=1e-9):
    cdef double[:, ::1] seg = np.ascontiguousarray(segments, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t h = shape[0], w = shape[1]
    out_a = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_a
    cdef Py_ssize_t i, col, row, c_lo, c_hi, r_lo, r_hi
    cdef double x0, y0, x1, y1, dx, dy, xa, xb, ya, yb, t
    for i in range(seg.shape[0]):
        x0 = seg[i, 0]
        y0 = seg[i, 1]
        x1 = seg[i, 2]
        y1 = seg[i, 3]
        if x0 > x1:
            t = x0; x0 = x1; x1 = t
            t = y0; y0 = y1; y1 = t
        dx = x1 - x0
        dy = y1 - y0
        c_lo = <Py_ssize_t>floor(x0 - eps)
        c_hi = <Py_ssize_t>floor(x1 + eps)
        if c_lo < 0:
            c_lo = 0
        if c_hi > w - 1:
            c_hi = w - 1
        for col in range(c_lo, c_hi + 1):
            xa = min(max(<double>col, x0), x1)
            xb = max(min(<double>(col + 1), x1), x0)
            if dx > 0:
                ya = y0 + (xa - x0) / dx * dy
                yb = y0 + (xb - x0) / dx * dy
            else:
                ya = y0
                yb = y1
            if ya > yb:
                t = ya; ya = yb; yb = t
            r_lo = <Py_ssize_t>floor(ya - eps)
            r_hi = <Py_ssize_t>floor(yb + eps)
            if r_lo < 0:
                r_lo = 0
            if r_hi > h - 1:
                r_hi = h - 1
            for row in range(r_lo, r_hi + 1):
                out[row, col] = 1
    return out_a.astype(bool)
