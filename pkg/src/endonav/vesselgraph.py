"""Vascular centerline graphs: geometry, curvature, and along-vessel distances.

A vessel tree is represented as an undirected graph of 3D centerline nodes
(millimetres) with per-node lumen radii. Along-vessel ("manifold") distance to
a goal node is computed exactly with Dijkstra on curvature-weighted edges and
evaluated at off-node points by linear interpolation along the containing edge.
"""
from __future__ import annotations

import heapq
import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

FORMAT_VERSION = "1"

# Distinct positions must be separated by more than this (mm).
MIN_NODE_SEPARATION = 1e-6


class CenterlineError(ValueError):
    """Malformed centerline document (schema or value errors)."""


class GraphInvariantError(ValueError):
    """Graph violates a structural invariant (connectivity, radii, ...)."""


class ProjectionError(ValueError):
    """Point too far from every centerline edge to be projected."""


class SpacingError(ValueError):
    """Requested resampling spacing is incompatible with the graph."""


# ---------------------------------------------------------------------------
# Basic geometry
# ---------------------------------------------------------------------------

def as_point(x, y, z) -> np.ndarray:
    """Build a finite 3D point (mm) as a float64 array."""
    p = np.array([x, y, z], dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point components must be finite, got {p}")
    return p


def menger_curvature(a, b, c) -> float:
    """Curvature (1/mm) of the circle through three points; 0 if collinear.

    Computed as 4 * triangle area / product of the three side lengths.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    ab = np.linalg.norm(b - a)
    bc = np.linalg.norm(c - b)
    ca = np.linalg.norm(a - c)
    denom = ab * bc * ca
    if denom == 0.0:
        return 0.0
    area2 = np.linalg.norm(np.cross(b - a, c - a))  # 2 * triangle area
    return float(2.0 * area2 / denom)


# ---------------------------------------------------------------------------
# Graph types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CenterlineNode:
    id: int
    position: np.ndarray  # (3,) mm
    radius: float         # mm, > 0
    curvature: float      # 1/mm, >= 0


@dataclass(frozen=True)
class CenterlineEdge:
    id: int
    a: int
    b: int
    length: float  # mm, Euclidean distance between endpoints


class VesselGraph:
    """Immutable undirected centerline graph with per-node curvature.

    Node ids are dense indices 0..n-1. Construction validates all structural
    invariants and precomputes Menger curvature at every interior
    (degree-2) node; terminals and bifurcations get curvature 0.
    """

    def __init__(self, positions, radii, edges, labels=None):
        self.positions = np.array(positions, dtype=np.float64)
        self.radii = np.array(radii, dtype=np.float64)
        self.labels = dict(labels) if labels else {}
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise GraphInvariantError(
                f"positions must be (n, 3), got {self.positions.shape}")
        n = len(self.positions)
        if len(self.radii) != n:
            raise GraphInvariantError("radii length must match node count")
        for i in range(n):
            if not np.all(np.isfinite(self.positions[i])):
                raise GraphInvariantError(f"node {i}: position must be finite")
            if not (self.radii[i] > 0.0 and np.isfinite(self.radii[i])):
                raise GraphInvariantError(
                    f"node {i}: radius must be > 0, got {self.radii[i]}")

        self.edges = []
        self.adjacency = [[] for _ in range(n)]
        seen = set()
        for k, (a, b) in enumerate(edges):
            a, b = int(a), int(b)
            if not (0 <= a < n and 0 <= b < n):
                raise GraphInvariantError(f"edge {k}: endpoint out of range ({a}, {b})")
            if a == b:
                raise GraphInvariantError(f"edge {k}: self-loop at node {a}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise GraphInvariantError(f"edge {k}: duplicate edge {key}")
            seen.add(key)
            length = float(np.linalg.norm(self.positions[b] - self.positions[a]))
            eid = len(self.edges)
            self.edges.append(CenterlineEdge(eid, a, b, length))
            self.adjacency[a].append(eid)
            self.adjacency[b].append(eid)

        if n < 2:
            raise GraphInvariantError("graph needs at least 2 nodes")
        for i in range(n):
            if not self.adjacency[i]:
                raise GraphInvariantError(f"node {i}: not attached to any edge")
        self._check_connected()
        self._check_separation()

        for name, nid in self.labels.items():
            if not (isinstance(nid, int) and 0 <= nid < n):
                raise GraphInvariantError(f"label {name!r}: invalid node id {nid}")

        curv = np.zeros(n)
        for i in range(n):
            if self.degree(i) == 2:
                u, v = (self.other_end(eid, i) for eid in self.adjacency[i])
                curv[i] = menger_curvature(
                    self.positions[u], self.positions[i], self.positions[v])
        self.curvatures = curv
        self.nodes = [
            CenterlineNode(i, self.positions[i], float(self.radii[i]), float(curv[i]))
            for i in range(n)
        ]
        self._segments_cache = None

    # -- structure ----------------------------------------------------------

    def __len__(self):
        return len(self.positions)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def other_end(self, edge_id: int, node: int) -> int:
        e = self.edges[edge_id]
        return e.b if e.a == node else e.a

    def neighbors(self, node: int):
        """(edge id, neighbor node id) pairs, ascending by edge id."""
        return [(eid, self.other_end(eid, node)) for eid in sorted(self.adjacency[node])]

    @property
    def terminals(self):
        return [i for i in range(len(self)) if self.degree(i) == 1]

    @property
    def bifurcations(self):
        return [i for i in range(len(self)) if self.degree(i) >= 3]

    def edge_weight(self, edge_id: int, alpha: float) -> float:
        """Effective edge weight: length * (1 + alpha * mean endpoint curvature)."""
        e = self.edges[edge_id]
        kappa = 0.5 * (self.curvatures[e.a] + self.curvatures[e.b])
        return e.length * (1.0 + alpha * kappa)

    def edge_tangent(self, edge_id: int, from_node: int) -> np.ndarray:
        """Unit vector along the edge, pointing away from `from_node`."""
        to = self.other_end(edge_id, from_node)
        d = self.positions[to] - self.positions[from_node]
        return d / np.linalg.norm(d)

    def bounding_box_diagonal(self) -> float:
        ext = self.positions.max(axis=0) - self.positions.min(axis=0)
        return float(np.linalg.norm(ext))

    def _check_connected(self):
        n = len(self.positions)
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for eid in self.adjacency[u]:
                v = self.other_end(eid, u)
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        if not seen.all():
            missing = int(np.flatnonzero(~seen)[0])
            raise GraphInvariantError(
                f"graph is disconnected (node {missing} unreachable from node 0)")

    def _check_separation(self):
        tree = cKDTree(self.positions)
        pairs = tree.query_pairs(MIN_NODE_SEPARATION)
        if pairs:
            a, b = sorted(pairs)[0]
            raise GraphInvariantError(
                f"nodes {a} and {b} are closer than {MIN_NODE_SEPARATION} mm")

    def _segments(self):
        """Cached per-edge arrays (starts, unit dirs, lengths) for projections."""
        if self._segments_cache is None:
            starts = np.array([self.positions[e.a] for e in self.edges])
            ends = np.array([self.positions[e.b] for e in self.edges])
            lengths = np.array([e.length for e in self.edges])
            dirs = (ends - starts) / lengths[:, None]
            self._segments_cache = (starts, dirs, lengths)
        return self._segments_cache


# ---------------------------------------------------------------------------
# Centerline document I/O
# ---------------------------------------------------------------------------

_TOP_KEYS = {"format_version", "unit", "nodes", "edges", "labels"}
_NODE_KEYS = {"id", "x", "y", "z", "radius"}


def load_centerline(document) -> VesselGraph:
    """Parse a centerline document (JSON text or mapping) into a VesselGraph."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise CenterlineError(f"invalid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise CenterlineError("document root must be an object")

    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise CenterlineError(f"unknown document keys: {sorted(unknown)}")
    for key in ("format_version", "unit", "nodes", "edges"):
        if key not in doc:
            raise CenterlineError(f"missing required key {key!r}")
    if doc["format_version"] != FORMAT_VERSION:
        raise CenterlineError(
            f"unsupported format_version {doc['format_version']!r} "
            f"(expected {FORMAT_VERSION!r})")
    if doc["unit"] != "mm":
        raise CenterlineError(f"unsupported unit {doc['unit']!r} (expected 'mm')")

    raw_nodes = doc["nodes"]
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise CenterlineError("'nodes' must be a non-empty array")
    by_id = {}
    for k, nd in enumerate(raw_nodes):
        if not isinstance(nd, dict):
            raise CenterlineError(f"nodes[{k}] must be an object")
        bad = set(nd) - _NODE_KEYS
        if bad:
            raise CenterlineError(f"nodes[{k}]: unknown keys {sorted(bad)}")
        missing = _NODE_KEYS - set(nd)
        if missing:
            raise CenterlineError(f"nodes[{k}]: missing keys {sorted(missing)}")
        nid = nd["id"]
        if not isinstance(nid, int) or nid < 0:
            raise CenterlineError(f"nodes[{k}]: id must be a non-negative integer")
        if nid in by_id:
            raise CenterlineError(f"duplicate node id {nid}")
        by_id[nid] = nd
    n = len(by_id)
    if set(by_id) != set(range(n)):
        raise CenterlineError("node ids must be dense 0..n-1")

    positions = np.zeros((n, 3))
    radii = np.zeros(n)
    for nid in range(n):
        nd = by_id[nid]
        try:
            positions[nid] = as_point(nd["x"], nd["y"], nd["z"])
        except (TypeError, ValueError) as exc:
            raise CenterlineError(f"node {nid}: bad position ({exc})") from exc
        try:
            radii[nid] = float(nd["radius"])
        except (TypeError, ValueError) as exc:
            raise CenterlineError(f"node {nid}: bad radius ({exc})") from exc

    raw_edges = doc["edges"]
    if not isinstance(raw_edges, list):
        raise CenterlineError("'edges' must be an array")
    edges = []
    for k, pair in enumerate(raw_edges):
        if (not isinstance(pair, (list, tuple)) or len(pair) != 2
                or not all(isinstance(x, int) for x in pair)):
            raise CenterlineError(f"edges[{k}] must be a pair of node ids")
        edges.append((pair[0], pair[1]))

    labels = doc.get("labels", {})
    if not isinstance(labels, dict):
        raise CenterlineError("'labels' must be an object mapping name -> node id")

    return VesselGraph(positions, radii, edges, labels=labels)


def load_centerline_file(path) -> VesselGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return load_centerline(fh.read())


def centerline_document(graph: VesselGraph) -> dict:
    """Serialize a VesselGraph to a schema-conforming document mapping."""
    return {
        "format_version": FORMAT_VERSION,
        "unit": "mm",
        "nodes": [
            {"id": nd.id, "x": float(nd.position[0]), "y": float(nd.position[1]),
             "z": float(nd.position[2]), "radius": nd.radius}
            for nd in graph.nodes
        ],
        "edges": [[e.a, e.b] for e in graph.edges],
        "labels": {k: graph.labels[k] for k in sorted(graph.labels)},
    }


def save_centerline_file(graph: VesselGraph, path):
    text = json.dumps(centerline_document(graph), indent=1, sort_keys=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Curvature and geodesics
# ---------------------------------------------------------------------------

def node_curvature(graph: VesselGraph, node: int) -> float:
    """Menger curvature at a degree-2 node; 0 at terminals and bifurcations."""
    return float(graph.curvatures[node])


@dataclass(frozen=True)
class GeodesicField:
    """Single-source along-vessel distances (mm) from every node to `goal`."""
    goal: int
    alpha: float
    dist: np.ndarray  # (n,) mm


def geodesic_from(graph: VesselGraph, goal: int, alpha: float = 0.0) -> GeodesicField:
    """Exact single-source shortest path distances to `goal` via Dijkstra.

    Edge weights are length * (1 + alpha * mean endpoint curvature), so
    alpha = 0 recovers pure arc length along the centerline.
    """
    if not (0 <= goal < len(graph)):
        raise GraphInvariantError(f"goal node {goal} does not exist")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    n = len(graph)
    dist = np.full(n, np.inf)
    dist[goal] = 0.0
    done = np.zeros(n, dtype=bool)
    heap = [(0.0, goal)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for eid in graph.adjacency[u]:
            v = graph.other_end(eid, u)
            nd = d + graph.edge_weight(eid, alpha)
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return GeodesicField(goal=goal, alpha=float(alpha), dist=dist)


def manifold_distance(field: GeodesicField, graph: VesselGraph, point) -> float:
    """Along-vessel distance (mm) from a point on the centerline to the goal.

    The point is projected onto the nearest edge (it must lie within one
    local node spacing, i.e. one edge length, of some edge) and the two
    endpoint distances are blended linearly by arc-length fraction.
    """
    p = np.asarray(point, dtype=np.float64)
    starts, dirs, lengths = graph._segments()
    rel = p[None, :] - starts
    t = np.clip(np.einsum("ij,ij->i", rel, dirs) / lengths, 0.0, 1.0)
    proj = starts + (t * lengths)[:, None] * dirs
    d = np.linalg.norm(p[None, :] - proj, axis=1)
    ok = d <= lengths
    if not ok.any():
        raise ProjectionError(
            f"point {p.tolist()} is farther than one node spacing from every edge")
    d_masked = np.where(ok, d, np.inf)
    eid = int(np.argmin(d_masked))  # ties resolve to the smallest edge id
    e = graph.edges[eid]
    frac = float(t[eid])
    return float((1.0 - frac) * field.dist[e.a] + frac * field.dist[e.b])


def nearest_node(graph: VesselGraph, point) -> int:
    """Id of the node closest to `point`; ties go to the smallest id."""
    p = np.asarray(point, dtype=np.float64)
    d2 = np.einsum("ij,ij->i", graph.positions - p, graph.positions - p)
    return int(np.argmin(d2))


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def _chains(graph: VesselGraph):
    """Decompose into maximal paths between nodes of degree != 2.

    Each chain is a node id list [s, ..., e] with only degree-2 interiors.
    Pure degree-2 cycles are anchored at their smallest node id.
    """
    special = sorted(i for i in range(len(graph)) if graph.degree(i) != 2)
    visited = set()
    chains = []

    def walk(start, first_eid):
        chain = [start]
        eid = first_eid
        node = start
        while True:
            visited.add(eid)
            node = graph.other_end(eid, node)
            chain.append(node)
            if graph.degree(node) != 2 or node == chain[0]:
                return chain
            e1, e2 = sorted(graph.adjacency[node])
            eid = e2 if e1 == eid else e1

    for s in special:
        for eid in sorted(graph.adjacency[s]):
            if eid not in visited:
                chains.append(walk(s, eid))
    # leftover pure cycles (no special node on them)
    for eid in range(len(graph.edges)):
        if eid not in visited:
            e = graph.edges[eid]
            anchor = min(e.a, e.b)
            first = min(a for a in graph.adjacency[anchor] if a not in visited)
            chains.append(walk(anchor, first))
    return chains


def resample(graph: VesselGraph, spacing: float) -> VesselGraph:
    """Rebuild the graph with edges of roughly uniform length ~ `spacing`.

    Terminal and bifurcation nodes keep their exact positions. Each degree-2
    chain whose edges already lie in (spacing/2, 1.5*spacing] is kept
    unchanged (so the operation is idempotent); other chains are re-sampled
    at equal arc-length intervals along their polyline. For smooth inputs
    (bend radius large against the spacing) every output edge length lies in
    (spacing/2, 1.5*spacing].
    """
    if not spacing > 0:
        raise ValueError(f"spacing must be > 0, got {spacing}")
    chains = _chains(graph)

    new_pos = []
    new_rad = []
    new_edges = []
    id_map = {}

    def keep(old_id):
        if old_id not in id_map:
            id_map[old_id] = len(new_pos)
            new_pos.append(graph.positions[old_id])
            new_rad.append(float(graph.radii[old_id]))
        return id_map[old_id]

    for chain in chains:
        pts = graph.positions[chain]
        rads = graph.radii[chain]
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        total = float(seg.sum())
        in_window = np.all((seg > 0.5 * spacing) & (seg <= 1.5 * spacing))
        head = keep(chain[0])
        tail = keep(chain[-1])
        if in_window:
            prev = head
            for old in chain[1:-1]:
                cur = keep(old)
                new_edges.append((prev, cur))
                prev = cur
            new_edges.append((prev, tail))
            continue
        pieces = max(1, math.floor(total / spacing + 0.5))
        if pieces == 1 and total * 2.0 <= spacing:
            raise SpacingError(
                f"spacing {spacing} mm too large for a branch of length {total:.6g} mm "
                f"(chain {chain[0]}..{chain[-1]})")
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        prev = head
        for i in range(1, pieces):
            s = total * i / pieces
            k = int(np.searchsorted(cum, s, side="right") - 1)
            k = min(k, len(seg) - 1)
            frac = (s - cum[k]) / seg[k]
            pos = pts[k] + frac * (pts[k + 1] - pts[k])
            rad = rads[k] + frac * (rads[k + 1] - rads[k])
            cur = len(new_pos)
            new_pos.append(pos)
            new_rad.append(float(rad))
            new_edges.append((prev, cur))
            prev = cur
        new_edges.append((prev, tail))

    labels = {}
    for name, nid in graph.labels.items():
        if nid not in id_map:
            raise GraphInvariantError(
                f"label {name!r} refers to node {nid}, which resampling removed")
        labels[name] = id_map[nid]
    return VesselGraph(np.array(new_pos), np.array(new_rad), new_edges, labels=labels)
