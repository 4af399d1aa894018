"""Centerline-constrained guidewire kinematics.

The wire tip slides along the vessel tree polyline. Its only degrees of
freedom are inserted length and axial roll; a fixed-angle bent tip plus the
roll decide which branch is entered at a bifurcation. An orthonormal
(tangent, normal, binormal) frame is transported along the traversed path
with rotation-minimizing corner rotations, so it stays well defined on
straight segments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .vesselgraph import VesselGraph

TWO_PI = 2.0 * math.pi
_EPS = 1e-9  # mm; slack for "landed exactly on a node" comparisons


@dataclass(frozen=True)
class GuidewireConfig:
    tip_bend: float = 0.52             # rad, fixed bend of the distal tip
    step_period: float = 0.1           # s, wall time per environment step
    max_step_translation: float = 2.0  # mm per step
    max_step_rotation: float = 0.3     # rad per step
    branch_noise_sigma: float = 0.0    # stddev of Gaussian noise on branch scores

    def __post_init__(self):
        if not 0.0 < self.tip_bend < math.pi / 2:
            raise ValueError(f"tip_bend must be in (0, pi/2), got {self.tip_bend}")
        if self.step_period <= 0:
            raise ValueError("step_period must be > 0")
        if self.max_step_translation <= 0 or self.max_step_rotation <= 0:
            raise ValueError("step bounds must be > 0")
        if self.branch_noise_sigma < 0:
            raise ValueError("branch_noise_sigma must be >= 0")


@dataclass(frozen=True)
class WireEvent:
    kind: str  # "none" | "branch_taken" | "reached_terminal" | "wall_collision"
    node: int | None = None
    edge: int | None = None


EVENT_NONE = WireEvent("none")


@dataclass(frozen=True)
class GuidewireState:
    inserted_length: float
    roll: float                        # rad in [0, 2*pi)
    path: tuple                        # ((edge id, forward), ...) from the start
    tip: np.ndarray                    # (3,) mm
    prev_tip: np.ndarray
    velocity: np.ndarray               # (3,) mm/s
    frame: np.ndarray                  # rows (tangent, normal, binormal)


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

def _initial_frame(tangent: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal frame: the normal is seeded from the
    coordinate axis least aligned with the tangent."""
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(tangent)))] = 1.0
    normal = axis - np.dot(axis, tangent) * tangent
    normal /= np.linalg.norm(normal)
    binormal = np.cross(tangent, normal)
    return np.array([tangent, normal, binormal])


def _cross3(a, b):
    # np.cross has high call overhead for single 3-vectors; same float ops
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def _norm3(v) -> float:
    # same multiply/left-to-right-sum order as np.linalg.norm on a 3-vector
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def _dot3(a, b) -> float:
    return float(a[0] * b[0] + a[1] * b[1] + a[2] * b[2])


def _rotate_frame(frame: np.ndarray, new_tangent: np.ndarray) -> np.ndarray:
    """Minimal rotation carrying frame[0] onto new_tangent (applied to all rows),
    followed by re-orthonormalization against the exact new tangent."""
    t = frame[0]
    axis = _cross3(t, new_tangent)
    s = _norm3(axis)
    c = _dot3(t, new_tangent)
    if s < 1e-15:
        if c > 0:
            n = frame[1]
        else:
            # tangent reversal: flip around the normal
            n = frame[1]
            new_tangent = new_tangent / _norm3(new_tangent)
    else:
        k = axis / s
        angle = math.atan2(s, c)
        n = (frame[1] * math.cos(angle) + _cross3(k, frame[1]) * math.sin(angle)
             + k * _dot3(k, frame[1]) * (1.0 - math.cos(angle)))
    n = n - _dot3(n, new_tangent) * new_tangent
    n /= _norm3(n)
    return np.array([new_tangent, n, _cross3(new_tangent, n)])


def _heading(frame: np.ndarray, roll: float, tip_bend: float) -> np.ndarray:
    t, n, b = frame
    lateral = math.cos(roll) * n + math.sin(roll) * b
    return math.cos(tip_bend) * t + math.sin(tip_bend) * lateral


def heading(state: GuidewireState, config: GuidewireConfig) -> np.ndarray:
    """Unit direction of the bent tip: the tangent tilted by tip_bend toward
    the roll-selected lateral direction."""
    return _heading(state.frame, state.roll, config.tip_bend)


# ---------------------------------------------------------------------------
# Path bookkeeping
# ---------------------------------------------------------------------------

def _edge_nodes(graph, eid, forward):
    e = graph.edges[eid]
    return (e.a, e.b) if forward else (e.b, e.a)


def _path_length(graph, path) -> float:
    return sum(graph.edges[eid].length for eid, _ in path)


def _tip_at(graph, path, inserted_length) -> np.ndarray:
    eid, fwd = path[-1]
    elen = graph.edges[eid].length
    offset = inserted_length - (_path_length(graph, path) - elen)
    src, _ = _edge_nodes(graph, eid, fwd)
    return graph.positions[src] + graph.edge_tangent(eid, src) * offset


def reset_wire(graph: VesselGraph, start: int, config: GuidewireConfig) -> GuidewireState:
    """Wire fully retracted at a terminal node, tangent pointing into the vessel."""
    if graph.degree(start) != 1:
        raise ValueError(f"start node {start} is not a terminal (degree "
                         f"{graph.degree(start)})")
    eid = graph.adjacency[start][0]
    e = graph.edges[eid]
    forward = (e.a == start)
    tangent = graph.edge_tangent(eid, start)
    pos = graph.positions[start].copy()
    return GuidewireState(
        inserted_length=0.0,
        roll=0.0,
        path=((eid, forward),),
        tip=pos,
        prev_tip=pos.copy(),
        velocity=np.zeros(3),
        frame=_initial_frame(tangent),
    )


# ---------------------------------------------------------------------------
# Motion
# ---------------------------------------------------------------------------

def rotate(state: GuidewireState, delta: float) -> GuidewireState:
    """Roll the wire about its axis; the tip does not move."""
    return replace(
        state,
        roll=(state.roll + delta) % TWO_PI,
        prev_tip=state.tip.copy(),
        velocity=np.zeros(3),
    )


def _choose_branch(graph, node, in_eid, head, sigma, rng):
    """Branch with the largest <heading, branch tangent> score; ties and the
    argmax under zero noise resolve to the smallest edge id."""
    best_eid = None
    best_score = -np.inf
    for eid, other in graph.neighbors(node):
        if eid == in_eid:
            continue
        score = float(np.dot(head, graph.edge_tangent(eid, node)))
        if sigma > 0.0 and rng is not None:
            score += sigma * rng.standard_normal()
        if score > best_score:
            best_score = score
            best_eid = eid
    return best_eid


def advance(state: GuidewireState, graph: VesselGraph, config: GuidewireConfig,
            delta: float, rng=None):
    """Slide the tip by `delta` mm along the tree (negative retracts).

    Returns (new state, event). Overrunning a terminal freezes the tip there
    and reports a wall collision; retraction silently clamps at length 0.
    """
    path = list(state.path)
    length = state.inserted_length
    frame = state.frame
    event = EVENT_NONE

    if delta > 0.0:
        residual = delta
        total = _path_length(graph, path)
        while residual > 0.0:
            eid, fwd = path[-1]
            elen = graph.edges[eid].length
            room = total - length
            if residual <= room + _EPS:
                length = min(length + residual, total)
                residual = 0.0
                break
            # cross the far node of the last edge
            residual -= room
            length = total
            node = _edge_nodes(graph, eid, fwd)[1]
            candidates = [x for x in graph.neighbors(node) if x[0] != eid]
            if not candidates:
                event = WireEvent("wall_collision", node=node)
                break
            if len(candidates) == 1:
                next_eid = candidates[0][0]
            else:
                head = _heading(frame, state.roll, config.tip_bend)
                next_eid = _choose_branch(graph, node, eid,
                                          head, config.branch_noise_sigma, rng)
                event = WireEvent("branch_taken", node=node, edge=next_eid)
            forward = (graph.edges[next_eid].a == node)
            path.append((next_eid, forward))
            total += graph.edges[next_eid].length
            frame = _rotate_frame(frame, graph.edge_tangent(next_eid, node))
        if event.kind == "none":
            eid, fwd = path[-1]
            node = _edge_nodes(graph, eid, fwd)[1]
            if graph.degree(node) == 1 and length >= _path_length(graph, path) - _EPS:
                event = WireEvent("reached_terminal", node=node)
    elif delta < 0.0:
        length = max(0.0, length + delta)
        while len(path) > 1:
            last_len = graph.edges[path[-1][0]].length
            below = _path_length(graph, path) - last_len
            if length > below + _EPS:
                break
            eid, fwd = path.pop()
            node = _edge_nodes(graph, eid, fwd)[0]
            prev_eid, prev_fwd = path[-1]
            prev_src = _edge_nodes(graph, prev_eid, prev_fwd)[0]
            frame = _rotate_frame(frame, graph.edge_tangent(prev_eid, prev_src))

    tip = _tip_at(graph, path, length)
    return replace(
        state,
        inserted_length=length,
        path=tuple(path),
        tip=tip,
        prev_tip=state.tip.copy(),
        velocity=(tip - state.tip) / config.step_period,
        frame=frame,
    ), event


def step_wire(state: GuidewireState, graph: VesselGraph, config: GuidewireConfig,
              action, rng=None):
    """One environment step: clip the action, roll, then translate."""
    dd = float(np.clip(action[0], -config.max_step_translation,
                       config.max_step_translation))
    dth = float(np.clip(action[1], -config.max_step_rotation,
                        config.max_step_rotation))
    mid = rotate(state, dth)
    return advance(mid, graph, config, dd, rng=rng)
