"""Synthetic meshes used by the tests, the benchmark and the CLI demo."""
from importlib import resources

import numpy as np

from doorscape._io import atomic_write_text
from doorscape.mesh_grid import TriangleMesh

# quad faces of an axis-aligned box, corners indexed by (x, y, z) bits
_BOX_QUADS = (
    (0, 2, 3, 1), (4, 5, 7, 6),  # z- / z+
    (0, 1, 5, 4), (2, 6, 7, 3),  # y- / y+
    (0, 4, 6, 2), (1, 3, 7, 5),  # x- / x+
)


def box(x0, y0, z0, x1, y1, z1):
    """Closed box as (vertices, triangles)."""
    verts = [
        (x1 if i & 1 else x0, y1 if i & 2 else y0, z1 if i & 4 else z0)
        for i in range(8)
    ]
    tris = []
    for a, b, c, d in _BOX_QUADS:
        tris += [(a, b, c), (a, c, d)]
    return verts, tris


def merge(parts):
    verts, tris = [], []
    for v, t in parts:
        base = len(verts)
        verts += v
        tris += [(a + base, b + base, c + base) for a, b, c in t]
    return TriangleMesh(np.array(verts, dtype=np.float64), np.array(tris, dtype=np.int64))


def unit_cube():
    return merge([box(0, 0, 0, 1, 1, 1)])


def two_room_mesh():
    """Two 4 m x 4 m rooms side by side joined by a 1.2 m doorway.

    Walls are 0.1 m thick and 2.5 m tall; the doorway is 2.0 m tall, so the
    lintel above it lies outside the default slicing range. A 0.6 m cabinet
    stands in the right-hand room.
    """
    t, h = 0.1, 2.5
    parts = [
        box(0, 0, -t, 8.2, 4.2, 0),  # floor slab
        box(0, 0, 0, 8.2, t, h),  # south wall
        box(0, 4.1, 0, 8.2, 4.2, h),  # north wall
        box(0, t, 0, t, 4.1, h),  # west wall
        box(8.1, t, 0, 8.2, 4.1, h),  # east wall
        box(4.05, t, 0, 4.15, 1.5, h),  # dividing wall, south of the door
        box(4.05, 2.7, 0, 4.15, 4.1, h),  # dividing wall, north of the door
        box(4.05, 1.5, 2.0, 4.15, 2.7, h),  # lintel
        box(6.4, 2.6, 0, 7.0, 3.2, 0.9),  # cabinet
    ]
    return merge(parts)


def obj_text(mesh):
    lines = ["# doorscape synthetic mesh"]
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles.tolist()]
    return "\n".join(lines) + "\n"


def write_obj(mesh, path):
    atomic_write_text(path, obj_text(mesh))


def bundled_path(name):
    """Path of a file shipped in ``doorscape/data``."""
    return resources.files("doorscape") / "data" / name
