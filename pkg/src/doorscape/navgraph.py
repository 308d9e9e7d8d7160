"""Navigation graph on the generalised Voronoi diagram of the free space.

Obstacle cells act as Voronoi generators. The crest of the clearance field
between two distinct generators is thinned to a one-cell skeleton whose
junctions and end points become graph nodes and whose chains become edges.
"""
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from doorscape import kernels
from doorscape._io import atomic_write_text
from doorscape.errors import ConfigError, EmptyGraph, MalformedGraph, NoObstacles
from doorscape.mesh_grid import FREE, OCCUPIED

# witness obstacles must be more than this many cells apart (squared)
RIDGE_MIN_SEPARATION_SQ = 4

_N8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
_PAIRS = ((1, 0), (0, 1), (1, 1), (1, -1))


@dataclass(frozen=True, eq=False)
class ClearanceField:
    """Per-cell distance to the nearest occupied cell, with that cell as witness."""

    dist_sq: np.ndarray  # squared distance in cells, int64
    witness_row: np.ndarray
    witness_col: np.ndarray
    resolution: float
    origin: tuple = (0.0, 0.0)

    @property
    def shape(self):
        return self.dist_sq.shape

    @property
    def clearance(self):
        """Clearance in metres."""
        return np.sqrt(self.dist_sq.astype(np.float64)) * self.resolution

    def witness(self, row, col):
        return int(self.witness_row[row, col]), int(self.witness_col[row, col])


@dataclass(frozen=True)
class GraphConfig:
    min_clearance: float = 0.3
    spur_prune_length: float = 0.5

    def __post_init__(self):
        if self.min_clearance < 0:
            raise ConfigError("min_clearance must be >= 0")
        if self.spur_prune_length < 0:
            raise ConfigError("spur_prune_length must be >= 0")


@dataclass(frozen=True)
class Node:
    id: int
    row: int
    col: int
    x: float
    y: float
    clearance: float


@dataclass(frozen=True)
class Edge:
    a: int
    b: int
    polyline: tuple  # ((row, col), ...) from node a to node b
    length: float
    clearances: tuple = ()


@dataclass
class NavGraph:
    nodes: list
    edges: list
    resolution: float
    origin: tuple = (0.0, 0.0)
    meta: dict = dc_field(default_factory=dict)

    def node(self, node_id):
        return self.nodes[node_id]

    def adjacency(self):
        adj = {n.id: set() for n in self.nodes}
        for e in self.edges:
            adj[e.a].add(e.b)
            adj[e.b].add(e.a)
        return adj

    def components(self):
        """Node-id sets of the connected components, in order of smallest id."""
        adj = self.adjacency()
        seen = set()
        comps = []
        for n in sorted(adj):
            if n in seen:
                continue
            comp = {n}
            stack = [n]
            while stack:
                for m in adj[stack.pop()]:
                    if m not in comp:
                        comp.add(m)
                        stack.append(m)
            seen |= comp
            comps.append(comp)
        return comps

    def cell_to_world(self, row, col):
        return (
            self.origin[0] + (col + 0.5) * self.resolution,
            self.origin[1] + (row + 0.5) * self.resolution,
        )

    def to_dict(self):
        return {
            "resolution": self.resolution,
            "origin_x": self.origin[0],
            "origin_y": self.origin[1],
            "nodes": [
                {"id": n.id, "cx": n.col, "cy": n.row, "wx": n.x, "wy": n.y, "clearance": n.clearance}
                for n in self.nodes
            ],
            "edges": [
                {
                    "a": e.a,
                    "b": e.b,
                    "length": e.length,
                    "polyline": [[c, r] for r, c in e.polyline],
                    "clearance": list(e.clearances),
                }
                for e in self.edges
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def save(self, path):
        atomic_write_text(path, self.to_json())

    @classmethod
    def from_dict(cls, doc):
        try:
            res = float(doc["resolution"])
            origin = (float(doc.get("origin_x", 0.0)), float(doc.get("origin_y", 0.0)))
            nodes = [
                Node(int(n["id"]), int(n["cy"]), int(n["cx"]), float(n["wx"]), float(n["wy"]),
                     float(n["clearance"]))
                for n in doc["nodes"]
            ]
            edges = []
            for e in doc["edges"]:
                poly = tuple((int(c[1]), int(c[0])) for c in e["polyline"])
                edges.append(Edge(int(e["a"]), int(e["b"]), poly, float(e["length"]),
                                  tuple(float(v) for v in e.get("clearance", ()))))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise MalformedGraph(f"graph document missing or bad field: {exc}") from None
        ids = [n.id for n in nodes]
        if ids != list(range(len(nodes))):
            raise MalformedGraph("node ids must be 0..n-1 in order")
        for i, e in enumerate(edges):
            if not (0 <= e.a < len(nodes) and 0 <= e.b < len(nodes)):
                raise MalformedGraph(f"edge {i} references a missing node")
        return cls(nodes, edges, res, origin)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise MalformedGraph(f"{path}: {exc}") from None
        return cls.from_dict(doc)


def distance_transform(grid):
    """Exact Euclidean clearance of every cell, measured centre to centre."""
    occ = grid.cells == OCCUPIED
    if not occ.any():
        raise NoObstacles("grid has no occupied cells; clearance is undefined")
    d2, wr, wc = kernels.edt(occ)
    return ClearanceField(d2, wr, wc, grid.resolution, grid.origin)


def extract_voronoi_ridge(field, grid):
    """Boolean mask of free cells on the crest between two distinct generators."""
    if field.shape != grid.cells.shape:
        raise ValueError("clearance field and grid differ in shape")
    free = grid.cells == FREE
    return kernels.ridge_mask(free, field.dist_sq, field.witness_row, field.witness_col,
                              RIDGE_MIN_SEPARATION_SQ)


def ridge_generators(field, row, col):
    """The two witness obstacles that qualify ``(row, col)`` as a ridge cell, or None."""
    h, w = field.shape
    d = field.dist_sq
    for dr, dc in _PAIRS:
        a = (row + dr, col + dc)
        b = (row - dr, col - dc)
        if not (0 <= a[0] < h and 0 <= b[0] < h and 0 <= a[1] < w and 0 <= b[1] < w):
            continue
        wa = field.witness(*a)
        wb = field.witness(*b)
        sep = (wa[0] - wb[0]) ** 2 + (wa[1] - wb[1]) ** 2
        if sep > RIDGE_MIN_SEPARATION_SQ and d[row, col] >= d[a] and d[row, col] >= d[b]:
            return wa, wb
    return None


def _neighbours(cell, cells):
    r, c = cell
    return [(r + dr, c + dc) for dr, dc in _N8 if (r + dr, c + dc) in cells]


def _polyline_length(poly):
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(poly, poly[1:]))


def _dedupe(poly):
    out = [poly[0]]
    for p in poly[1:]:
        if p != out[-1]:
            out.append(p)
    return out


def _trace(skeleton):
    """Split a skeleton mask into node cells and chain polylines.

    Returns ``(reps, chains)`` where ``reps`` lists one representative cell
    per node and each chain is ``(node_a, node_b, polyline)`` in cell units.
    """
    cells = set(map(tuple, np.argwhere(skeleton).tolist()))
    deg = {p: len(_neighbours(p, cells)) for p in cells}
    node_cells = {p for p in cells if deg[p] != 2}

    # adjacent non-chain cells collapse into one junction
    cluster_of = {}
    clusters = []
    for p in sorted(node_cells):
        if p in cluster_of:
            continue
        members = [p]
        cluster_of[p] = len(clusters)
        stack = [p]
        while stack:
            for q in _neighbours(stack.pop(), node_cells):
                if q not in cluster_of:
                    cluster_of[q] = len(clusters)
                    members.append(q)
                    stack.append(q)
        clusters.append(sorted(members))

    reps = []
    for members in clusters:
        cr = sum(m[0] for m in members) / len(members)
        cc = sum(m[1] for m in members) / len(members)
        reps.append(min(members, key=lambda m: ((m[0] - cr) ** 2 + (m[1] - cc) ** 2, m)))

    visited = set()
    chains = []
    for k, members in enumerate(clusters):
        for u in members:
            for n in _neighbours(u, cells):
                if n in node_cells or n in visited:
                    continue
                path = [u, n]
                prev, cur = u, n
                while cur not in node_cells:
                    visited.add(cur)
                    nxt = [x for x in _neighbours(cur, cells) if x != prev]
                    prev, cur = cur, nxt[0]
                    path.append(cur)
                    if cur in visited:
                        break
                end = cluster_of.get(path[-1])
                if end is None:
                    continue
                inner = len(path) - 2
                if end == k and inner < 3:
                    continue  # kink hugging a junction, not a real loop
                poly = _dedupe([reps[k]] + path + [reps[end]])
                chains.append((k, end, poly))

    # closed loops without any junction
    for p in sorted(cells - node_cells - visited):
        if p in visited:
            continue
        k = len(reps)
        reps.append(p)
        path = [p]
        visited.add(p)
        prev, cur = p, min(_neighbours(p, cells))
        while cur != p:
            visited.add(cur)
            path.append(cur)
            nxt = [x for x in _neighbours(cur, cells) if x != prev]
            prev, cur = cur, nxt[0]
        path.append(p)
        chains.append((k, k, path))
    return reps, chains


def _prune_and_merge(n_nodes, chains, res, spur_len):
    """Drop short spurs hanging off junctions and fuse chains through degree-2 nodes."""
    edges = {i: [a, b, list(poly), _polyline_length(poly) * res] for i, (a, b, poly) in enumerate(chains)}
    alive = set(range(n_nodes))
    next_id = len(edges)

    def degree():
        deg = {n: 0 for n in alive}
        for a, b, _, _ in edges.values():
            deg[a] += 1
            deg[b] += 1
        return deg

    def merge_pass():
        nonlocal next_id
        changed = True
        while changed:
            changed = False
            deg = degree()
            for n in sorted(alive):
                if deg[n] != 2:
                    continue
                inc = [i for i in sorted(edges) if n in edges[i][:2]]
                if len(inc) != 2:
                    continue  # a self-loop through n
                e1, e2 = edges[inc[0]], edges[inc[1]]
                p1 = e1[2] if e1[1] == n else e1[2][::-1]
                p2 = e2[2] if e2[0] == n else e2[2][::-1]
                x = e1[0] if e1[1] == n else e1[1]
                y = e2[1] if e2[0] == n else e2[0]
                del edges[inc[0]], edges[inc[1]]
                edges[next_id] = [x, y, p1 + p2[1:], e1[3] + e2[3]]
                next_id += 1
                alive.discard(n)
                changed = True
                break

    merge_pass()
    while True:
        deg = degree()
        spurs = []
        for i, (a, b, _, length) in edges.items():
            if a == b or length >= spur_len:
                continue
            if (deg[a] == 1 and deg[b] >= 3) or (deg[b] == 1 and deg[a] >= 3):
                spurs.append((length, i))
        if not spurs:
            break
        _, i = min(spurs)
        a, b, _, _ = edges.pop(i)
        alive.discard(a if deg[a] == 1 else b)
        merge_pass()
    return alive, list(edges.values())


def build_graph(ridge, field, cfg=GraphConfig()):
    """Navigation graph from a ridge mask and its clearance field."""
    ridge = np.asarray(ridge, dtype=bool)
    clearance = field.clearance
    keep = ridge & (clearance >= cfg.min_clearance)
    if not keep.any():
        raise EmptyGraph(
            f"no ridge cell has clearance >= {cfg.min_clearance} m; lower min_clearance"
        )
    skeleton = kernels.thin(keep)
    reps, chains = _trace(skeleton)
    res = field.resolution
    alive, edges = _prune_and_merge(len(reps), chains, res, cfg.spur_prune_length)

    order = sorted(alive, key=lambda k: reps[k])
    new_id = {k: i for i, k in enumerate(order)}
    origin = field.origin
    nodes = []
    for k in order:
        r, c = reps[k]
        nodes.append(Node(new_id[k], r, c, origin[0] + (c + 0.5) * res,
                          origin[1] + (r + 0.5) * res, float(clearance[r, c])))
    out = []
    for a, b, poly, length in edges:
        a, b = new_id[a], new_id[b]
        if a > b or (a == b and poly[::-1] < poly):
            a, b, poly = b, a, poly[::-1]
        cl = tuple(float(clearance[r, c]) for r, c in poly)
        out.append(Edge(a, b, tuple(poly), length, cl))
    out.sort(key=lambda e: (e.a, e.b, e.polyline))
    return NavGraph(nodes, out, res, tuple(origin))


def graph_from_grid(grid, cfg=GraphConfig()):
    field = distance_transform(grid)
    return build_graph(extract_voronoi_ridge(field, grid), field, cfg)
