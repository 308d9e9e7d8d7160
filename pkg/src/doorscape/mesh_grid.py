"""Triangle mesh -> 2D occupancy grid.

Obstacles are collected by cutting the mesh with horizontal planes, projecting
every cut onto the floor plane and rasterizing the union of all cuts. Free
space is whatever non-obstacle area is 4-connected to a seed point.

Grid layout: ``cells[row, col]`` with row growing along +y. Cell centres sit
at ``origin + (col + 0.5, row + 0.5) * resolution``.
"""
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
import yaml
from scipy import ndimage

from doorscape import kernels
from doorscape._io import atomic_write_bytes, atomic_write_text
from doorscape.errors import (
    ConfigError,
    EmptyMesh,
    GridTooLarge,
    MalformedMap,
    MalformedMesh,
    SeedInvalid,
)

FREE = 0
OCCUPIED = 1
UNKNOWN = 2

PGM_OCCUPIED = 0
PGM_FREE = 254
PGM_UNKNOWN = 205

DEFAULT_MAX_CELLS = 50_000_000

_TO_PGM = np.array([PGM_FREE, PGM_OCCUPIED, PGM_UNKNOWN], dtype=np.uint8)


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (n, 3) float64, metres
    triangles: np.ndarray  # (m, 3) int64

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise MalformedMesh("mesh has non-finite vertex coordinates")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MalformedMesh("triangle index out of range")
        v.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    def translated(self, dx, dy, dz=0.0):
        return TriangleMesh(self.vertices + np.array([dx, dy, dz]), self.triangles)


@dataclass(frozen=True)
class SliceConfig:
    z_min: float = 0.1
    z_max: float = 1.8
    z_step: float = 0.1
    resolution: float = 0.05
    padding: int = 2

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ConfigError(f"z_min ({self.z_min}) must be below z_max ({self.z_max})")
        if not self.z_step > 0:
            raise ConfigError("z_step must be positive")
        if not self.resolution > 0:
            raise ConfigError("resolution must be positive")
        if self.padding < 0:
            raise ConfigError("padding must be >= 0")

    def planes(self):
        """Plane heights ``z_min + k * z_step`` that do not exceed ``z_max``."""
        n = int(math.floor((self.z_max - self.z_min) / self.z_step + 1e-9)) + 1
        return [self.z_min + k * self.z_step for k in range(n)]


class Segment2D(NamedTuple):
    a: tuple
    b: tuple


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    cells: np.ndarray  # (height, width) uint8 of FREE / OCCUPIED / UNKNOWN
    resolution: float
    origin: tuple  # world (x, y) of the outer corner of cell (0, 0)

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.uint8, copy=True)
        if cells.ndim != 2:
            raise MalformedMap("occupancy grid must be two-dimensional")
        if cells.size and cells.max() > UNKNOWN:
            raise MalformedMap("unknown cell state in grid")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def height(self):
        return self.cells.shape[0]

    @property
    def width(self):
        return self.cells.shape[1]

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.origin == other.origin
            and self.cells.shape == other.cells.shape
            and bool(np.array_equal(self.cells, other.cells))
        )

    def world_to_cell(self, x, y):
        """(row, col) of the cell containing world point (x, y); may be out of bounds."""
        col = math.floor((x - self.origin[0]) / self.resolution)
        row = math.floor((y - self.origin[1]) / self.resolution)
        return row, col

    def cell_to_world(self, row, col):
        return (
            self.origin[0] + (col + 0.5) * self.resolution,
            self.origin[1] + (row + 0.5) * self.resolution,
        )

    def in_bounds(self, row, col):
        return 0 <= row < self.height and 0 <= col < self.width

    def with_cells(self, cells):
        return OccupancyGrid(cells, self.resolution, self.origin)


def _parse_index(token, n_vertices, lineno):
    head = token.split("/")[0]
    try:
        idx = int(head)
    except ValueError:
        raise MalformedMesh(f"line {lineno}: bad face index {token!r}") from None
    if idx == 0:
        raise MalformedMesh(f"line {lineno}: face index 0 is invalid")
    if idx < 0:
        idx = n_vertices + idx
        if idx < 0:
            raise MalformedMesh(f"line {lineno}: relative index {head} out of range")
        return idx
    return idx - 1


def load_mesh(path):
    """Read the ``v`` and ``f`` records of an ASCII Wavefront OBJ file.

    Faces with more than three corners are fan-triangulated around their
    first corner. Negative indices count back from the vertices read so far.
    """
    vertices = []
    triangles = []
    face_lines = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MalformedMesh(f"{path}: line {lineno}: vertex needs 3 coordinates")
                try:
                    xyz = [float(p) for p in parts[1:4]]
                except ValueError:
                    raise MalformedMesh(f"{path}: line {lineno}: unparsable vertex") from None
                if not all(math.isfinite(c) for c in xyz):
                    raise MalformedMesh(f"{path}: line {lineno}: non-finite vertex")
                vertices.append(xyz)
            elif parts[0] == "f":
                if len(parts) < 4:
                    raise MalformedMesh(f"{path}: line {lineno}: face needs >= 3 vertices")
                try:
                    idx = [_parse_index(p, len(vertices), lineno) for p in parts[1:]]
                except MalformedMesh as exc:
                    raise MalformedMesh(f"{path}: {exc}") from None
                for k in range(1, len(idx) - 1):
                    triangles.append((idx[0], idx[k], idx[k + 1]))
                    face_lines.append(lineno)
    if not triangles:
        raise EmptyMesh(f"{path}: no faces")
    n = len(vertices)
    for tri, lineno in zip(triangles, face_lines):
        if max(tri) >= n:
            raise MalformedMesh(f"{path}: line {lineno}: face index out of range")
    return TriangleMesh(np.array(vertices, dtype=np.float64), np.array(triangles, dtype=np.int64))


def _slice_plane(tri_xyz, z):
    """Segments cut by the plane at height ``z`` from an (m, 3, 3) triangle array."""
    d = tri_xyz[:, :, 2] - z
    above = (d > 0).all(axis=1)
    below = (d < 0).all(axis=1)
    out = []
    for t in np.nonzero(~(above | below))[0].tolist():
        p = tri_xyz[t]
        dz = d[t]
        if dz[0] == 0 and dz[1] == 0 and dz[2] == 0:
            for i, j in ((0, 1), (1, 2), (2, 0)):
                out.append(Segment2D((p[i, 0], p[i, 1]), (p[j, 0], p[j, 1])))
            continue
        pts = []
        for i in range(3):
            if dz[i] == 0:
                pts.append((p[i, 0], p[i, 1]))
        for i, j in ((0, 1), (1, 2), (2, 0)):
            if dz[i] * dz[j] < 0:
                s = dz[i] / (dz[i] - dz[j])
                pts.append((p[i, 0] + s * (p[j, 0] - p[i, 0]), p[i, 1] + s * (p[j, 1] - p[i, 1])))
        if len(pts) == 1:
            out.append(Segment2D(pts[0], pts[0]))
        else:
            out.append(Segment2D(pts[0], pts[1]))
    return out


def slice_mesh(mesh, cfg):
    """Cut ``mesh`` with every plane of ``cfg``; returns one segment list per plane."""
    tri_xyz = mesh.vertices[mesh.triangles]
    return [_slice_plane(tri_xyz, z) for z in cfg.planes()]


def _segments_array(slices):
    rows = [(s.a[0], s.a[1], s.b[0], s.b[1]) for plane in slices for s in plane]
    return np.array(rows, dtype=np.float64).reshape(-1, 4)


def rasterize_slices(slices, resolution, padding, max_cells=DEFAULT_MAX_CELLS):
    """Union of all plane cuts as an Occupied/Unknown grid.

    The grid is centred on the bounding box of all segment endpoints, so an
    endpoint on the box edge lies at a cell centre, and is widened by
    ``padding`` cells on each side.
    """
    if not resolution > 0:
        raise ConfigError("resolution must be positive")
    segs = _segments_array(slices)
    if len(segs) == 0:
        size = 2 * padding + 1
        cells = np.full((size, size), UNKNOWN, dtype=np.uint8)
        half = (padding + 0.5) * resolution
        return OccupancyGrid(cells, resolution, (-half, -half))
    xs = np.concatenate([segs[:, 0], segs[:, 2]])
    ys = np.concatenate([segs[:, 1], segs[:, 3]])
    min_x, max_x = xs.min(), xs.max()
    min_y, max_y = ys.min(), ys.max()
    width = int(math.floor((max_x - min_x) / resolution + 0.5)) + 1 + 2 * padding
    height = int(math.floor((max_y - min_y) / resolution + 0.5)) + 1 + 2 * padding
    if width * height > max_cells:
        raise GridTooLarge(
            f"{width}x{height} cells exceeds the budget of {max_cells}; "
            f"increase the resolution value (currently {resolution} m/cell)"
        )
    ox = min_x - (padding + 0.5) * resolution
    oy = min_y - (padding + 0.5) * resolution
    cell_segs = np.empty_like(segs)
    cell_segs[:, 0] = (segs[:, 0] - ox) / resolution
    cell_segs[:, 1] = (segs[:, 1] - oy) / resolution
    cell_segs[:, 2] = (segs[:, 2] - ox) / resolution
    cell_segs[:, 3] = (segs[:, 3] - oy) / resolution
    occ = kernels.rasterize(cell_segs, (height, width))
    cells = np.where(occ, OCCUPIED, UNKNOWN).astype(np.uint8)
    return OccupancyGrid(cells, resolution, (ox, oy))


_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


def classify_free_space(grid, seed):
    """Mark the non-occupied region 4-connected to world point ``seed`` as Free.

    Every other non-occupied cell becomes Unknown; Occupied cells are kept.
    """
    row, col = grid.world_to_cell(*seed)
    if not grid.in_bounds(row, col):
        raise SeedInvalid(f"seed {tuple(seed)} lies outside the grid")
    if grid.cells[row, col] == OCCUPIED:
        raise SeedInvalid(f"seed {tuple(seed)} lies on an occupied cell ({row}, {col})")
    open_ = grid.cells != OCCUPIED
    labels, _ = ndimage.label(open_, structure=_FOUR_CONNECTED)
    reach = labels == labels[row, col]
    cells = np.where(grid.cells == OCCUPIED, OCCUPIED, np.where(reach, FREE, UNKNOWN))
    return grid.with_cells(cells.astype(np.uint8))


def default_seed(grid):
    """A seed inside the largest non-occupied region not touching the grid border.

    Returns the world centre of that region's first cell in raster order, or
    ``None`` when every open region reaches the border.
    """
    labels, n = ndimage.label(grid.cells != OCCUPIED, structure=_FOUR_CONNECTED)
    if n == 0:
        return None
    border = np.unique(
        np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    )
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    sizes[0] = 0
    sizes[border] = 0
    best = int(np.argmax(sizes))
    if sizes[best] == 0:
        return None
    r, c = np.argwhere(labels == best)[0]
    return grid.cell_to_world(int(r), int(c))


def grid_from_mesh(mesh, cfg, seed=None, max_cells=DEFAULT_MAX_CELLS):
    """Slice, rasterize and classify in one call; ``seed=None`` picks :func:`default_seed`."""
    grid = rasterize_slices(slice_mesh(mesh, cfg), cfg.resolution, cfg.padding, max_cells)
    if seed is None:
        seed = default_seed(grid)
        if seed is None:
            raise SeedInvalid("no enclosed free region found; pass an explicit seed point")
    return classify_free_space(grid, seed)


# -- PGM + YAML map files ---------------------------------------------------

def encode_pgm(grid):
    """Binary P5 image; image row 0 is the top (largest y) of the map."""
    pixels = _TO_PGM[np.flipud(grid.cells)]
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def decode_pgm(data):
    """Parse a P5 image into a (height, width) uint8 array, top row first."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedMap("truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    if tokens[0] != b"P5":
        raise MalformedMap(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedMap("bad PGM header") from None
    if maxval != 255:
        raise MalformedMap(f"unsupported PGM maxval {maxval}")
    body = data[pos:pos + width * height]
    if len(body) != width * height:
        raise MalformedMap("truncated PGM pixel data")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width)


def map_yaml(grid, image_name):
    meta = {
        "image": image_name,
        "resolution": grid.resolution,
        "origin_x": grid.origin[0],
        "origin_y": grid.origin[1],
        # ROS map_server compatible keys
        "origin": [grid.origin[0], grid.origin[1], 0.0],
        "negate": 0,
        "occupied_thresh": 0.65,
        "free_thresh": 0.196,
    }
    return yaml.safe_dump(meta, sort_keys=True)


def save_map(grid, out_dir, stem="map"):
    """Write ``<stem>.pgm`` and ``<stem>.yaml`` into ``out_dir``; returns both paths."""
    out_dir = Path(out_dir)
    pgm = out_dir / f"{stem}.pgm"
    meta = out_dir / f"{stem}.yaml"
    atomic_write_bytes(pgm, encode_pgm(grid))
    atomic_write_text(meta, map_yaml(grid, pgm.name))
    return pgm, meta


def load_map(yaml_path):
    """Read a map written by :func:`save_map` (or any map using the same encoding)."""
    yaml_path = Path(yaml_path)
    try:
        meta = yaml.safe_load(yaml_path.read_text())
    except yaml.YAMLError as exc:
        raise MalformedMap(f"{yaml_path}: {exc}") from None
    if not isinstance(meta, dict):
        raise MalformedMap(f"{yaml_path}: expected a mapping")
    try:
        resolution = float(meta["resolution"])
        if "origin_x" in meta:
            origin = (float(meta["origin_x"]), float(meta["origin_y"]))
        else:
            origin = (float(meta["origin"][0]), float(meta["origin"][1]))
        image = yaml_path.parent / meta.get("image", yaml_path.with_suffix(".pgm").name)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise MalformedMap(f"{yaml_path}: missing or bad field {exc}") from None
    pixels = np.flipud(decode_pgm(Path(image).read_bytes()))
    cells = np.full(pixels.shape, UNKNOWN, dtype=np.uint8)
    cells[pixels == PGM_FREE] = FREE
    cells[pixels == PGM_OCCUPIED] = OCCUPIED
    stray = ~np.isin(pixels, (PGM_FREE, PGM_OCCUPIED, PGM_UNKNOWN))
    if stray.any():
        r, c = np.argwhere(stray)[0]
        raise MalformedMap(f"{image}: pixel value {pixels[r, c]} is not 0, 205 or 254")
    return OccupancyGrid(cells, resolution, origin)
