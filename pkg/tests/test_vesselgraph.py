import json
import math

import numpy as np
import pytest

from endonav import (
    CenterlineError,
    GraphInvariantError,
    ProjectionError,
    SpacingError,
    VesselGraph,
    centerline_document,
    generate_simplified_phantom,
    geodesic_from,
    load_centerline,
    manifold_distance,
    menger_curvature,
    nearest_node,
    node_curvature,
    resample,
)
from helpers import enumerate_geodesics, random_connected_graph, straight_graph


def make_doc(nodes, edges, labels=None):
    doc = {
        "format_version": "1",
        "unit": "mm",
        "nodes": [{"id": i, "x": x, "y": y, "z": z, "radius": r}
                  for i, (x, y, z, r) in enumerate(nodes)],
        "edges": edges,
    }
    if labels:
        doc["labels"] = labels
    return doc


# ---------------------------------------------------------------------------
# Document loading
# ---------------------------------------------------------------------------

class TestLoadCenterline:
    def test_three_node_straight_segment(self):
        doc = make_doc([(0, 0, 0, 2.0), (0, 0, 5, 2.0), (0, 0, 10, 2.0)],
                       [[0, 1], [1, 2]])
        g = load_centerline(json.dumps(doc))
        assert len(g.edges) == 2
        assert sorted(g.terminals) == [0, 2]

    def test_zero_radius_names_node(self):
        nodes = [(0, 0, i * 3.0, 2.0) for i in range(6)]
        nodes[4] = (0, 0, 12.0, 0.0)
        doc = make_doc(nodes, [[i, i + 1] for i in range(5)])
        with pytest.raises(GraphInvariantError, match="node 4"):
            load_centerline(doc)

    def test_six_node_y_document(self):
        # trunk 0-1-2, branches 2-3-4 and 2-5
        nodes = [(0, 0, 0, 2), (0, 0, 5, 2), (0, 0, 10, 2),
                 (3, 0, 14, 2), (6, 0, 18, 2), (-3, 0, 14, 2)]
        doc = make_doc(nodes, [[0, 1], [1, 2], [2, 3], [3, 4], [2, 5]])
        g = load_centerline(doc)
        assert g.bifurcations == [2]
        assert sorted(g.terminals) == [0, 4, 5]

    def test_rejects_unknown_format_version(self):
        doc = make_doc([(0, 0, 0, 1), (0, 0, 1, 1)], [[0, 1]])
        doc["format_version"] = "2"
        with pytest.raises(CenterlineError, match="format_version"):
            load_centerline(doc)

    def test_rejects_unknown_keys(self):
        doc = make_doc([(0, 0, 0, 1), (0, 0, 1, 1)], [[0, 1]])
        doc["extra"] = 1
        with pytest.raises(CenterlineError, match="extra"):
            load_centerline(doc)

    def test_rejects_wrong_unit(self):
        doc = make_doc([(0, 0, 0, 1), (0, 0, 1, 1)], [[0, 1]])
        doc["unit"] = "cm"
        with pytest.raises(CenterlineError, match="unit"):
            load_centerline(doc)

    def test_rejects_disconnected(self):
        doc = make_doc([(0, 0, 0, 1), (0, 0, 1, 1), (5, 0, 0, 1), (5, 0, 1, 1)],
                       [[0, 1], [2, 3]])
        with pytest.raises(GraphInvariantError, match="disconnected"):
            load_centerline(doc)

    def test_rejects_sparse_ids(self):
        doc = {
            "format_version": "1", "unit": "mm",
            "nodes": [{"id": 0, "x": 0, "y": 0, "z": 0, "radius": 1},
                      {"id": 2, "x": 0, "y": 0, "z": 1, "radius": 1}],
            "edges": [[0, 2]],
        }
        with pytest.raises(CenterlineError, match="dense"):
            load_centerline(doc)

    def test_rejects_duplicate_edge(self):
        doc = make_doc([(0, 0, 0, 1), (0, 0, 1, 1)], [[0, 1], [1, 0]])
        with pytest.raises(GraphInvariantError, match="duplicate"):
            load_centerline(doc)

    def test_round_trip(self):
        g = generate_simplified_phantom()
        g2 = load_centerline(json.dumps(centerline_document(g)))
        assert np.array_equal(g.positions, g2.positions)
        assert g.labels == g2.labels
        assert [(e.a, e.b) for e in g.edges] == [(e.a, e.b) for e in g2.edges]


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------

class TestCurvature:
    def test_collinear_is_zero(self):
        assert menger_curvature((0, 0, 0), (0, 0, 1), (0, 0, 2.5)) == 0.0

    def test_circle_samples(self):
        r = 50.0
        pts = [(r * math.cos(t), r * math.sin(t), 0.0)
               for t in (0.1, 0.2, 0.3)]
        assert menger_curvature(*pts) == pytest.approx(1.0 / r, abs=1e-9)

    def test_right_angle_corner(self):
        # legs of 1 mm: 4 * area / (a*b*c) = 4*0.5 / sqrt(2)
        k = menger_curvature((0, 1, 0), (0, 0, 0), (1, 0, 0))
        assert k == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_rigid_motion_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            pts = rng.uniform(-10, 10, size=(3, 3))
            k0 = menger_curvature(*pts)
            # random rotation via QR, plus translation
            q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
            shift = rng.uniform(-100, 100, size=3)
            moved = [q @ p + shift for p in pts]
            assert abs(menger_curvature(*moved) - k0) < 1e-9

    def test_node_curvature_conventions(self):
        g = generate_simplified_phantom()
        fork = g.bifurcations[0]
        assert node_curvature(g, fork) == 0.0
        for t in g.terminals:
            assert node_curvature(g, t) == 0.0
        # straight trunk interior
        assert node_curvature(g, 10) == 0.0


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------

class TestGeodesic:
    def test_goal_distance_zero(self):
        g = straight_graph()
        f = geodesic_from(g, 0, 0.0)
        assert f.dist[0] == 0.0

    def test_straight_vessel_matches_euclidean(self):
        g = straight_graph(length=100, spacing=2)
        goal = g.labels["end"]
        f = geodesic_from(g, goal, 0.0)
        for i in range(len(g)):
            expected = np.linalg.norm(g.positions[goal] - g.positions[i])
            assert abs(f.dist[i] - expected) < 1e-9

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            g = random_connected_graph(rng)
            goal = int(rng.integers(0, len(g)))
            alpha = float(rng.uniform(0, 2))
            f = geodesic_from(g, goal, alpha)
            oracle = enumerate_geodesics(g, goal, alpha)
            assert np.max(np.abs(f.dist - oracle)) < 1e-9

    def test_triangle_property(self):
        rng = np.random.default_rng(3)
        g = random_connected_graph(rng, n_nodes=15, extra_chords=3)
        f = geodesic_from(g, 0, 0.7)
        for e in g.edges:
            w = g.edge_weight(e.id, 0.7)
            assert abs(f.dist[e.a] - f.dist[e.b]) <= w + 1e-12

    def test_alpha_increases_weighted_distance(self):
        g = generate_simplified_phantom()
        goal = g.labels["endpoint_a"]
        d0 = geodesic_from(g, goal, 0.0).dist
        d1 = geodesic_from(g, goal, 2.0).dist
        assert np.all(d1 >= d0 - 1e-12)

    def test_goal_must_exist(self):
        g = straight_graph()
        with pytest.raises(GraphInvariantError):
            geodesic_from(g, 999, 0.0)


class TestManifoldDistance:
    def test_goal_point_is_zero(self):
        g = generate_simplified_phantom()
        goal = g.labels["endpoint_a"]
        f = geodesic_from(g, goal, 0.0)
        assert manifold_distance(f, g, g.positions[goal]) == 0.0

    def test_midpoint_interpolation(self):
        g = straight_graph(length=20, spacing=2)
        f = geodesic_from(g, g.labels["end"], 0.0)
        # edge between nodes at 8 mm and 10 mm: endpoint dists 12 and 10
        assert f.dist[4] == pytest.approx(12.0)
        assert f.dist[5] == pytest.approx(10.0)
        mid = (g.positions[4] + g.positions[5]) / 2
        assert manifold_distance(f, g, mid) == pytest.approx(11.0, abs=1e-12)

    def test_decreasing_along_trunk(self):
        g = generate_simplified_phantom()
        f = geodesic_from(g, g.labels["endpoint_a"], 0.0)
        zs = np.linspace(0.0, 99.0, 34)
        vals = [manifold_distance(f, g, np.array([0.0, 0.0, z])) for z in zs]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_projection_error_far_from_graph(self):
        g = straight_graph(length=20, spacing=2)
        f = geodesic_from(g, 0, 0.0)
        with pytest.raises(ProjectionError):
            manifold_distance(f, g, np.array([50.0, 50.0, 0.0]))


class TestNearestNode:
    def test_exact_position(self):
        g = generate_simplified_phantom()
        assert nearest_node(g, g.positions[37]) == 37

    def test_tie_breaks_to_smaller_id(self):
        # zig-zag path where nodes 3 and 7 are both exactly 1 mm from origin
        pts = np.array([(4, 0, 0), (3, 0, 0), (2, 0, 0), (1, 0, 0),
                        (1.5, 1.5, 0), (1.5, 2.5, 0), (0.5, 2, 0), (0, 1, 0)],
                       dtype=float)
        g = VesselGraph(pts, np.full(8, 1.0), [(i, i + 1) for i in range(7)])
        assert nearest_node(g, np.zeros(3)) == 3

    def test_scan_oracle(self):
        rng = np.random.default_rng(11)
        g = random_connected_graph(rng, n_nodes=15)
        for _ in range(50):
            p = rng.uniform(0, 100, size=3)
            expect = min(range(len(g)),
                         key=lambda i: (np.linalg.norm(g.positions[i] - p), i))
            assert nearest_node(g, p) == expect


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

class TestResample:
    def test_straight_segment(self):
        g = VesselGraph(np.array([[0, 0, 0], [0, 0, 100.0]]), [3.0, 3.0],
                        [(0, 1)])
        r = resample(g, 2.0)
        assert len(r) == 51
        for e in r.edges:
            assert e.length == pytest.approx(2.0, abs=1e-9)

    def test_idempotent_on_conforming_graph(self):
        g = generate_simplified_phantom()
        r = resample(g, 2.0)
        assert len(r) == len(g)

    def test_quarter_circle_length_preserved(self):
        radius = 40.0
        thetas = np.linspace(0.0, math.pi / 2, 361)
        pts = np.stack([radius * np.sin(thetas), np.zeros_like(thetas),
                        radius * (1 - np.cos(thetas))], axis=1)
        g = VesselGraph(pts, np.full(len(pts), 2.0),
                        [(i, i + 1) for i in range(len(pts) - 1)])
        r = resample(g, 1.0)
        total = sum(e.length for e in r.edges)
        analytic = math.pi / 2 * radius
        assert abs(total - analytic) / analytic < 0.005

    def test_edge_lengths_in_window(self):
        # smooth helix sampled finely, then resampled at several spacings
        t = np.linspace(0, 4 * math.pi, 800)
        pts = np.stack([20 * np.cos(t), 20 * np.sin(t), 8 * t], axis=1)
        g = VesselGraph(pts, np.full(len(pts), 2.0),
                        [(i, i + 1) for i in range(len(pts) - 1)])
        for spacing in (1.0, 3.0, 7.5):
            r = resample(g, spacing)
            for e in r.edges:
                assert spacing / 2 < e.length <= 1.5 * spacing + 1e-12

    def test_preserves_topology_and_labels(self):
        g = generate_simplified_phantom()
        r = resample(g, 3.0)
        assert len(r.terminals) == 3
        assert len(r.bifurcations) == 1
        for name in ("start", "endpoint_a", "endpoint_b"):
            assert np.allclose(r.positions[r.labels[name]],
                               g.positions[g.labels[name]])

    def test_spacing_too_large(self):
        g = VesselGraph(np.array([[0, 0, 0], [0, 0, 1.0]]), [1.0, 1.0],
                        [(0, 1)])
        with pytest.raises(SpacingError):
            resample(g, 4.0)
