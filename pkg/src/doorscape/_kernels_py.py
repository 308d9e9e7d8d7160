"""Pure-Python/numpy grid kernels.

Reference implementations of the hot loops. ``_kernels_c`` (Cython) exposes
the same four functions with identical results; ``doorscape.kernels`` picks
one at import time.
"""
import math

import numpy as np

# 8-neighbourhood ring, clockwise from the upper-left cell (row - 1 is "up").
RING = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))
_FOUR = (1, 3, 5, 7)  # ring positions that are 4-adjacent to the centre

INF_SQ = np.iinfo(np.int64).max // 4


def _components(members, adjacent):
    seen = set()
    count = 0
    for m in members:
        if m in seen:
            continue
        count += 1
        stack = [m]
        seen.add(m)
        while stack:
            a = stack.pop()
            for b in members:
                if b not in seen and adjacent(a, b):
                    seen.add(b)
                    stack.append(b)
    return count


def _build_removable_lut():
    """removable[code] for a foreground centre with ring occupancy ``code``.

    A cell may be deleted when it is a border cell (a 4-neighbour is
    background), not an end point (at least two 8-neighbours) and simple for
    (8, 4) topology: one 8-component of foreground in the ring and one
    4-component of ring background touching the centre.
    """
    lut = np.zeros(256, dtype=np.uint8)
    for code in range(256):
        fg = [i for i in range(8) if code >> i & 1]
        bg = [i for i in range(8) if not code >> i & 1]
        if len(fg) < 2 or all(code >> i & 1 for i in _FOUR):
            continue

        def adj8(a, b):
            ra, ca = RING[a]
            rb, cb = RING[b]
            return max(abs(ra - rb), abs(ca - cb)) == 1

        def adj4(a, b):
            ra, ca = RING[a]
            rb, cb = RING[b]
            return abs(ra - rb) + abs(ca - cb) == 1

        fg_comp = _components(fg, adj8)
        # background components counted only if they touch the centre 4-wise
        bg_touching = 0
        seen = set()
        for start in bg:
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                a = stack.pop()
                for b in bg:
                    if b not in comp and adj4(a, b):
                        comp.add(b)
                        stack.append(b)
            seen |= comp
            if comp & set(_FOUR):
                bg_touching += 1
        if fg_comp == 1 and bg_touching == 1:
            lut[code] = 1
    return lut


REMOVABLE_LUT = _build_removable_lut()


def edt(occupied):
    """Exact squared Euclidean distance to the nearest occupied cell.

    Returns ``(dist_sq, witness_row, witness_col)`` as int64 arrays. Among
    equidistant obstacles the witness is the smallest (row, column).
    """
    occ = np.ascontiguousarray(occupied, dtype=bool)
    h, w = occ.shape
    cols = np.arange(w, dtype=np.int64)

    # nearest obstacle within each row; ties go to the left (smaller column)
    far = 2 * w + 1
    left = np.maximum.accumulate(np.where(occ, cols[None, :], -far), axis=1)
    right = np.where(occ, cols[None, :], w + far)
    right = np.minimum.accumulate(right[:, ::-1], axis=1)[:, ::-1]
    dl = cols[None, :] - left
    dr = right - cols[None, :]
    use_left = dl <= dr
    row_col = np.where(use_left, left, right)
    row_d = np.where(use_left, dl, dr)
    row_f = np.where(row_d < w, row_d * row_d, INF_SQ)

    dist = np.empty((h, w), dtype=np.int64)
    wr = np.empty((h, w), dtype=np.int64)
    wc = np.empty((h, w), dtype=np.int64)
    v = [0] * h
    z = [0.0] * (h + 1)
    for c in range(w):
        f = row_f[:, c].tolist()
        rc = row_col[:, c].tolist()
        k = -1
        for q in range(h):
            fq = f[q]
            if fq >= INF_SQ:
                continue
            if k < 0:
                k = 0
                v[0] = q
                z[0] = -math.inf
                z[1] = math.inf
                continue
            while True:
                p = v[k]
                s = ((fq + q * q) - (f[p] + p * p)) / (2 * q - 2 * p)
                if s <= z[k]:
                    k -= 1  # z[0] is -inf, so k never drops below 0
                else:
                    break
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = math.inf
        if k < 0:
            dist[:, c] = INF_SQ
            wr[:, c] = -1
            wc[:, c] = -1
            continue
        k = 0
        for q in range(h):
            while z[k + 1] < q:
                k += 1
            p = v[k]
            dist[q, c] = (q - p) * (q - p) + f[p]
            wr[q, c] = p
            wc[q, c] = rc[p]
    return dist, wr, wc


_PAIRS = ((1, 0), (0, 1), (1, 1), (1, -1))


def ridge_mask(free, dist_sq, wit_r, wit_c, min_sep_sq):
    """Cells on the generalised Voronoi crest of the free space.

    A free cell qualifies when, for some pair of opposite 8-neighbours, the
    neighbours' witness obstacles are more than ``sqrt(min_sep_sq)`` cells
    apart and the cell's clearance is >= both neighbours' clearance.
    """
    free = np.asarray(free, dtype=bool)
    h, w = free.shape
    pad = 1
    d = np.pad(dist_sq, pad, constant_values=-1)
    r = np.pad(wit_r, pad, constant_values=0)
    c = np.pad(wit_c, pad, constant_values=0)
    inb = np.pad(np.ones((h, w), dtype=bool), pad, constant_values=False)
    centre = d[1:-1, 1:-1]
    out = np.zeros((h, w), dtype=bool)
    for dr, dc in _PAIRS:
        ps = (slice(1 + dr, 1 + dr + h), slice(1 + dc, 1 + dc + w))
        qs = (slice(1 - dr, 1 - dr + h), slice(1 - dc, 1 - dc + w))
        ok = inb[ps] & inb[qs]
        sep = (r[ps] - r[qs]) ** 2 + (c[ps] - c[qs]) ** 2
        crest = (centre >= d[ps]) & (centre >= d[qs])
        out |= ok & (sep > min_sep_sq) & crest
    return out & free


def thin(mask):
    """Sequential raster-order thinning to an 8-connected unit-width skeleton."""
    img = np.pad(np.asarray(mask, dtype=np.uint8), 1)
    lut = REMOVABLE_LUT
    h, w = img.shape
    changed = True
    while changed:
        changed = False
        rows, cols = np.nonzero(img)
        for r, c in zip(rows.tolist(), cols.tolist()):
            code = 0
            for i, (dr, dc) in enumerate(RING):
                if img[r + dr, c + dc]:
                    code |= 1 << i
            if lut[code]:
                img[r, c] = 0
                changed = True
    return img[1:-1, 1:-1].astype(bool)


def rasterize(segments, shape, eps=1e-9):
    """Conservatively rasterize segments given in fractional cell units.

    ``segments`` is an (n, 4) array of ``x0, y0, x1, y1`` where x is the
    column axis and y the row axis. Every cell whose closed square the
    segment touches (within ``eps`` cells) is marked.
    """
    h, w = shape
    out = np.zeros((h, w), dtype=bool)
    for x0, y0, x1, y1 in np.asarray(segments, dtype=np.float64).tolist():
        if x0 > x1:
            x0, y0, x1, y1 = x1, y1, x0, y0
        dx = x1 - x0
        dy = y1 - y0
        c_lo = max(math.floor(x0 - eps), 0)
        c_hi = min(math.floor(x1 + eps), w - 1)
        for col in range(c_lo, c_hi + 1):
            xa = min(max(col, x0), x1)
            xb = max(min(col + 1, x1), x0)
            if dx > 0:
                ya = y0 + (xa - x0) / dx * dy
                yb = y0 + (xb - x0) / dx * dy
            else:
                ya, yb = y0, y1
            if ya > yb:
                ya, yb = yb, ya
            r_lo = max(math.floor(ya - eps), 0)
            r_hi = min(math.floor(yb + eps), h - 1)
            if r_lo <= r_hi:
                out[r_lo:r_hi + 1, col] = True
    return out
