"""Static renderings of grids, graphs and poses (SVG or PGM)."""
import math

import numpy as np

from doorscape.errors import UnknownFormat
from doorscape.mesh_grid import FREE, OCCUPIED, PGM_FREE, PGM_OCCUPIED, PGM_UNKNOWN

FORMATS = ("svg", "pgm")

_FILL = {FREE: "#ffffff", OCCUPIED: "#000000"}
_UNKNOWN_FILL = "#cdcdcd"


def _f(v):
    return f"{v:.3f}"


class _Frame:
    """World (metres, y up) to SVG pixel (y down) mapping."""

    def __init__(self, x0, y0, x1, y1, px_per_m):
        self.x0, self.y0, self.x1, self.y1 = x0, y0, x1, y1
        self.s = px_per_m

    @property
    def size(self):
        return (self.x1 - self.x0) * self.s, (self.y1 - self.y0) * self.s

    def pt(self, x, y):
        return (x - self.x0) * self.s, (self.y1 - y) * self.s


def _frame(grid, graph, poses, px_per_m, margin=0.5):
    if grid is not None:
        x0, y0 = grid.origin
        return _Frame(x0, y0, x0 + grid.width * grid.resolution,
                      y0 + grid.height * grid.resolution, px_per_m)
    xs, ys = [], []
    if graph is not None:
        xs += [n.x for n in graph.nodes]
        ys += [n.y for n in graph.nodes]
    if poses:
        xs += [p.x for p in poses]
        ys += [p.y for p in poses]
    if not xs:
        xs, ys = [0.0], [0.0]
    return _Frame(min(xs) - margin, min(ys) - margin, max(xs) + margin, max(ys) + margin, px_per_m)


def _grid_svg(grid, fr):
    out = []
    res_px = grid.resolution * fr.s
    for state in (FREE, OCCUPIED):
        mask = grid.cells == state
        for row in range(grid.height):
            line = mask[row]
            if not line.any():
                continue
            # horizontal runs keep the file small
            edges = np.flatnonzero(np.diff(np.concatenate(([0], line.view(np.int8), [0]))))
            for start, stop in zip(edges[::2], edges[1::2]):
                x, y = fr.pt(grid.origin[0] + start * grid.resolution,
                             grid.origin[1] + (row + 1) * grid.resolution)
                out.append(
                    f'<rect class="cell-{"free" if state == FREE else "occupied"}" '
                    f'x="{_f(x)}" y="{_f(y)}" width="{_f((stop - start) * res_px)}" '
                    f'height="{_f(res_px)}" fill="{_FILL[state]}"/>'
                )
    return out


def _graph_svg(graph, fr):
    out = []
    for e in graph.edges:
        pts = " ".join(
            "{},{}".format(*map(_f, fr.pt(*graph.cell_to_world(r, c)))) for r, c in e.polyline
        )
        out.append(f'<polyline class="edge" points="{pts}" fill="none" stroke="#1f77b4" '
                   f'stroke-width="1.5"/>')
    for n in graph.nodes:
        x, y = fr.pt(n.x, n.y)
        radius = max(2.0, 0.25 * n.clearance * fr.s)
        out.append(f'<circle class="node" cx="{_f(x)}" cy="{_f(y)}" r="{_f(radius)}" '
                   f'fill="#d62728" fill-opacity="0.7"/>')
    return out


def _poses_svg(poses, fr):
    heights = sorted({p.height for p in poses})
    out = []
    for p in poses:
        length = 0.15 * (heights.index(p.height) + 1) * fr.s
        x, y = fr.pt(p.x, p.y)
        a = math.radians(p.yaw)
        tx, ty = x + length * math.cos(a), y - length * math.sin(a)
        out.append(f'<line class="pose" x1="{_f(x)}" y1="{_f(y)}" x2="{_f(tx)}" y2="{_f(ty)}" '
                   f'stroke="#2ca02c" stroke-width="1" marker-end="url(#arrow)"/>')
    return out


def render_svg(grid=None, graph=None, poses=None, px_per_m=50.0):
    """SVG document layering grid, graph and poses, in that order."""
    fr = _frame(grid, graph, poses, px_per_m)
    w, h = fr.size
    body = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(w)}" height="{_f(h)}" '
        f'viewBox="0 0 {_f(w)} {_f(h)}">',
        '<defs><marker id="arrow" viewBox="0 0 6 6" refX="5" refY="3" markerWidth="4" '
        'markerHeight="4" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#2ca02c"/></marker></defs>',
        f'<rect class="bounds" x="0" y="0" width="{_f(w)}" height="{_f(h)}" fill="{_UNKNOWN_FILL}"/>',
    ]
    if grid is not None:
        body += _grid_svg(grid, fr)
    if graph is not None:
        body += _graph_svg(graph, fr)
    if poses:
        body += _poses_svg(poses, fr)
    body.append("</svg>")
    return "\n".join(body) + "\n"


def render_pgm(grid, graph=None, poses=None):
    """Map image with graph cells drawn grey (100), nodes and poses dark (50)."""
    img = np.full(grid.cells.shape, PGM_UNKNOWN, dtype=np.uint8)
    img[grid.cells == FREE] = PGM_FREE
    img[grid.cells == OCCUPIED] = PGM_OCCUPIED
    if graph is not None:
        for e in graph.edges:
            for r, c in e.polyline:
                if grid.in_bounds(r, c):
                    img[r, c] = 100
        for n in graph.nodes:
            if grid.in_bounds(n.row, n.col):
                img[n.row, n.col] = 50
    for p in poses or ():
        r, c = grid.world_to_cell(p.x, p.y)
        if grid.in_bounds(r, c):
            img[r, c] = 50
    pixels = np.flipud(img)
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def check_format(fmt):
    if fmt not in FORMATS:
        raise UnknownFormat(f"unknown render format {fmt!r}; choose from {', '.join(FORMATS)}")
    return fmt
