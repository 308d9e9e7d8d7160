"""Spaced viewpoint selection on a navigation graph and camera pose expansion."""
import bisect
import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from doorscape._io import atomic_write_text
from doorscape.errors import ConfigError, PoseSamplerError


@dataclass(frozen=True)
class SamplerConfig:
    min_distance: float = 1.0  # D, metres
    heights: tuple = (0.1, 0.7)
    yaw_count: int = 8
    yaw_start: float = 0.0  # degrees
    rng_seed: int = 0  # only used by shuffle_poses

    def __post_init__(self):
        object.__setattr__(self, "heights", tuple(float(h) for h in self.heights))
        if not self.min_distance > 0:
            raise ConfigError("min_distance must be positive")
        if self.yaw_count < 1:
            raise ConfigError("yaw_count must be >= 1")
        if not self.heights or any(not h > 0 for h in self.heights):
            raise ConfigError("heights must be a non-empty list of positive values")

    def yaws(self):
        step = 360.0 / self.yaw_count
        return [(self.yaw_start + k * step) % 360.0 for k in range(self.yaw_count)]


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    row: int
    col: int
    clearance: float
    node_id: int


@dataclass(frozen=True)
class CameraPose:
    x: float
    y: float
    height: float
    yaw: float  # degrees in [0, 360)
    node_id: int

    def to_dict(self):
        return {"x": self.x, "y": self.y, "height": self.height, "yaw_deg": self.yaw,
                "node_id": self.node_id}


@dataclass(frozen=True)
class Candidate:
    sort_key: tuple
    row: int
    col: int
    clearance: float
    node_id: int


def cell_distance(res, a, b):
    """Metric distance between two cell centres ``(row, col)``."""
    return math.hypot(a[0] - b[0], a[1] - b[1]) * res


def candidate_positions(graph, cfg):
    """All nodes plus edge cells every ``D/2`` of arc length, in greedy order.

    Order: clearance descending, then nodes before edge samples, then node or
    edge index, then arc position along the edge.
    """
    res = graph.resolution
    out = []
    for n in graph.nodes:
        out.append(Candidate((-n.clearance, 0, n.id, 0.0), n.row, n.col, n.clearance, n.id))
    step = cfg.min_distance / 2.0 / res  # in cells
    for i, e in enumerate(graph.edges):
        poly = e.polyline
        arc = [0.0]
        for p, q in zip(poly, poly[1:]):
            arc.append(arc[-1] + math.hypot(q[0] - p[0], q[1] - p[1]))
        total = arc[-1]
        for k in range(int(math.floor(total / step + 1e-9)) + 1):
            t = k * step
            j = bisect.bisect_left(arc, t)
            if j == len(arc) or (j > 0 and t - arc[j - 1] <= arc[j] - t):
                j -= 1
            r, c = poly[j]
            cl = e.clearances[j] if e.clearances else 0.0
            src = e.a if arc[j] <= total / 2 else e.b
            out.append(Candidate((-cl, 1, i, t * res), r, c, cl, src))
    out.sort(key=lambda cand: cand.sort_key)
    return out


def sample_positions(graph, cfg=SamplerConfig()):
    """Greedy maximal set of graph positions that are pairwise >= D apart."""
    if not graph.nodes:
        raise PoseSamplerError("cannot sample an empty graph")
    res = graph.resolution
    accepted = []
    rows = np.empty(0, dtype=np.int64)
    cols = np.empty(0, dtype=np.int64)
    for cand in candidate_positions(graph, cfg):
        if len(rows):
            d = np.hypot(rows - cand.row, cols - cand.col) * res
            if d.min() < cfg.min_distance:
                continue
        rows = np.append(rows, cand.row)
        cols = np.append(cols, cand.col)
        x, y = graph.cell_to_world(cand.row, cand.col)
        accepted.append(Position(x, y, cand.row, cand.col, cand.clearance, cand.node_id))
    return accepted


def enumerate_camera_poses(positions, cfg=SamplerConfig()):
    """Every (position, height, yaw) combination, position-major."""
    if not positions:
        raise PoseSamplerError("no positions to expand")
    yaws = cfg.yaws()
    return [
        CameraPose(p.x, p.y, h, yaw, p.node_id)
        for p in positions
        for h in cfg.heights
        for yaw in yaws
    ]


def shuffle_poses(poses, seed):
    """Deterministically permuted copy of ``poses``, for capture-order randomisation."""
    order = np.random.default_rng(seed).permutation(len(poses))
    return [poses[i] for i in order]


def poses_to_jsonl(poses):
    return "".join(json.dumps(p.to_dict()) + "\n" for p in poses)


def poses_to_csv(poses):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", "height", "yaw_deg", "node_id"])
    for p in poses:
        writer.writerow([repr(p.x), repr(p.y), repr(p.height), repr(p.yaw), p.node_id])
    return buf.getvalue()


def save_poses(poses, path, fmt="jsonl"):
    text = poses_to_csv(poses) if fmt == "csv" else poses_to_jsonl(poses)
    atomic_write_text(path, text)


def load_poses(path):
    poses = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                poses.append(CameraPose(float(d["x"]), float(d["y"]), float(d["height"]),
                                        float(d["yaw_deg"]), int(d["node_id"])))
            except (ValueError, KeyError, TypeError) as exc:
                raise PoseSamplerError(f"{path}: line {lineno}: bad pose record ({exc})") from None
    return poses
