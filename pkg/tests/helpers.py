"""Shared test utilities: independent oracles and random-graph generation."""
from __future__ import annotations

import math

import numpy as np

from endonav import VesselGraph


def enumerate_geodesics(graph, goal, alpha):
    """Exhaustive simple-path enumeration from the goal outward.

    Accumulates path weight in the same order Dijkstra does (goal first), so
    agreement should be bit-exact on most graphs. No pruning: every simple
    path is visited.
    """
    best = [math.inf] * len(graph)
    best[goal] = 0.0

    def dfs(u, d, visited):
        for eid in graph.adjacency[u]:
            v = graph.other_end(eid, u)
            if v in visited:
                continue
            nd = d + graph.edge_weight(eid, alpha)
            if nd < best[v]:
                best[v] = nd
            dfs(v, nd, visited | {v})

    dfs(goal, 0.0, {goal})
    return np.array(best)


def random_connected_graph(rng, n_nodes=None, extra_chords=None):
    """Random tree plus a few chords, with well-separated random positions."""
    n = n_nodes if n_nodes is not None else int(rng.integers(4, 21))
    positions = rng.uniform(0.0, 100.0, size=(n, 3))
    radii = rng.uniform(1.0, 4.0, size=n)
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    present = {(min(a, b), max(a, b)) for a, b in edges}
    k = extra_chords if extra_chords is not None else int(rng.integers(0, 4))
    tries = 0
    while k > 0 and tries < 50:
        tries += 1
        a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
        key = (min(a, b), max(a, b))
        if a != b and key not in present:
            present.add(key)
            edges.append(key)
            k -= 1
    return VesselGraph(positions, radii, edges)


def straight_graph(length=100.0, spacing=2.0, direction=(0.0, 0.0, 1.0)):
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    n = int(round(length / spacing))
    positions = np.array([d * (length * i / n) for i in range(n + 1)])
    radii = np.full(n + 1, 3.0)
    edges = [(i, i + 1) for i in range(n)]
    return VesselGraph(positions, radii, edges, labels={"start": 0, "end": n})


def scripted_actions(n_steps):
    """Deterministic action script shared by protocol-conformance tests."""
    acts = []
    for k in range(n_steps):
        dd = 2.0 * math.cos(0.13 * k)
        dth = 0.3 * math.sin(0.29 * k)
        acts.append((dd, dth))
    return acts
