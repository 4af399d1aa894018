"""Procedural vascular phantoms used for training and evaluation tasks.

Both generators emit labelled centerline graphs ("start", "endpoint_a",
"endpoint_b") sampled at a uniform node spacing, with deterministic geometry
given the parameters.
"""
from __future__ import annotations

import math

import numpy as np

from .vesselgraph import VesselGraph


def _n_pieces(length: float, spacing: float) -> int:
    return max(1, math.floor(length / spacing + 0.5))


class _Builder:
    """Accumulates polyline branches into one node/edge soup."""

    def __init__(self, radius):
        self.radius = radius
        self.positions = []
        self.edges = []
        self.labels = {}

    def add_node(self, pos) -> int:
        self.positions.append(np.asarray(pos, dtype=np.float64))
        return len(self.positions) - 1

    def straight(self, from_id, direction, length, spacing) -> int:
        """Append a straight run from an existing node; returns the far node id."""
        d = np.asarray(direction, dtype=np.float64)
        d = d / np.linalg.norm(d)
        start = self.positions[from_id]
        n = _n_pieces(length, spacing)
        prev = from_id
        for i in range(1, n + 1):
            cur = self.add_node(start + d * (length * i / n))
            self.edges.append((prev, cur))
            prev = cur
        return prev

    def arc(self, from_id, tangent, turn_axis, radius, angle, spacing) -> int:
        """Append a circular arc starting tangent to `tangent`, bending about
        `turn_axis`; returns the far node id."""
        t = np.asarray(tangent, dtype=np.float64)
        t = t / np.linalg.norm(t)
        k = np.asarray(turn_axis, dtype=np.float64)
        k = k / np.linalg.norm(k)
        inward = np.cross(k, t)  # unit vector from start toward arc center
        center = self.positions[from_id] + radius * inward
        n = _n_pieces(radius * angle, spacing)
        prev = from_id
        for i in range(1, n + 1):
            phi = angle * i / n
            # rotate the center->start vector by phi about the turn axis
            v = -inward
            rot = (v * math.cos(phi) + np.cross(k, v) * math.sin(phi)
                   + k * float(np.dot(k, v)) * (1.0 - math.cos(phi)))
            cur = self.add_node(center + radius * rot)
            self.edges.append((prev, cur))
            prev = cur
        return prev

    def build(self) -> VesselGraph:
        n = len(self.positions)
        radii = np.full(n, self.radius)
        return VesselGraph(np.array(self.positions), radii, self.edges,
                           labels=self.labels)


def generate_simplified_phantom(branch_angle: float = 0.5,
                                trunk_length: float = 100.0,
                                branch_length: float = 80.0,
                                radius: float = 3.0,
                                spacing: float = 2.0) -> VesselGraph:
    """Y-shaped vessel tree: straight trunk along +z splitting into two planar
    branches tilted by +-branch_angle toward +-x.

    Labels: "start" at the origin, "endpoint_a" on the +x branch,
    "endpoint_b" on the -x branch.
    """
    if min(trunk_length, branch_length, radius, spacing) <= 0:
        raise ValueError("all lengths must be > 0")
    if not 0 < branch_angle < math.pi / 2:
        raise ValueError(f"branch_angle must be in (0, pi/2), got {branch_angle}")
    if spacing > trunk_length / 2:
        raise ValueError("spacing must be <= trunk_length / 2")

    b = _Builder(radius)
    start = b.add_node((0.0, 0.0, 0.0))
    fork = b.straight(start, (0.0, 0.0, 1.0), trunk_length, spacing)
    s, c = math.sin(branch_angle), math.cos(branch_angle)
    end_a = b.straight(fork, (s, 0.0, c), branch_length, spacing)
    end_b = b.straight(fork, (-s, 0.0, c), branch_length, spacing)
    b.labels = {"start": start, "endpoint_a": end_a, "endpoint_b": end_b}
    return b.build()


def generate_complex_phantom(inlet_length: float = 30.0,
                             arch_radius: float = 40.0,
                             arch_angle: float = math.pi / 2,
                             link_length: float = 20.0,
                             branch_angle_a: float = 0.6,
                             branch_length_a: float = 35.0,
                             mid_length: float = 30.0,
                             branch_angle_b: float = 0.6,
                             branch_length_b: float = 35.0,
                             tail_length: float = 25.0,
                             radius: float = 2.5,
                             spacing: float = 1.0) -> VesselGraph:
    """Curved phantom: inlet, circular arch, then two successive bifurcations.

    The main channel runs +z, bends through `arch_angle` onto +x, and forks
    twice. "endpoint_a" hangs off the first fork (shorter path), "endpoint_b"
    off the second (strictly longer path with defaults); the main channel
    ends at "endpoint_c".
    """
    lengths = (inlet_length, arch_radius, link_length, branch_length_a,
               mid_length, branch_length_b, tail_length, radius, spacing)
    if min(lengths) <= 0:
        raise ValueError("all lengths must be > 0")
    if not 0 < arch_angle <= math.pi:
        raise ValueError(f"arch_angle must be in (0, pi], got {arch_angle}")
    for name, ang in (("branch_angle_a", branch_angle_a),
                      ("branch_angle_b", branch_angle_b)):
        if not 0 < ang < math.pi / 2:
            raise ValueError(f"{name} must be in (0, pi/2), got {ang}")

    def xz_dir(theta):
        # polar angle measured from +z toward +x, everything in the xz plane
        return np.array([math.sin(theta), 0.0, math.cos(theta)])

    b = _Builder(radius)
    start = b.add_node((0.0, 0.0, 0.0))
    p = b.straight(start, (0.0, 0.0, 1.0), inlet_length, spacing)
    # bend from +z toward +x (turning about +y keeps the arc in the xz plane)
    p = b.arc(p, (0.0, 0.0, 1.0), (0.0, 1.0, 0.0), arch_radius, arch_angle, spacing)
    out_dir = xz_dir(arch_angle)
    fork1 = b.straight(p, out_dir, link_length, spacing)

    end_a = b.straight(fork1, xz_dir(arch_angle - branch_angle_a),
                       branch_length_a, spacing)
    fork2 = b.straight(fork1, out_dir, mid_length, spacing)
    end_b = b.straight(fork2, xz_dir(arch_angle + branch_angle_b),
                       branch_length_b, spacing)
    end_c = b.straight(fork2, out_dir, tail_length, spacing)

    b.labels = {"start": start, "endpoint_a": end_a, "endpoint_b": end_b,
                "endpoint_c": end_c}
    return b.build()
