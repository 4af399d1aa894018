"""Deterministic 2D projections of vessel trees and recorded trajectories.

Figures are written as SVG with a pinned hash salt and no embedded date, so
identical inputs produce byte-identical files.
"""
from __future__ import annotations

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

PLANES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}

_AXIS_NAMES = "xyz"


def _vessel_segments(graph, ix, iy):
    """Single NaN-separated polyline covering every edge."""
    xs, ys = [], []
    for e in graph.edges:
        a, b = graph.positions[e.a], graph.positions[e.b]
        xs.extend([a[ix], b[ix], np.nan])
        ys.extend([a[iy], b[iy], np.nan])
    return xs, ys


def _trajectory_polyline(rows, ix, iy):
    """NaN-separated tip path, broken between episodes."""
    xs, ys = [], []
    last_ep = None
    for row in rows:
        if last_ep is not None and row["episode"] != last_ep:
            xs.append(np.nan)
            ys.append(np.nan)
        p = (row["px"], row["py"], row["pz"])
        xs.append(p[ix])
        ys.append(p[iy])
        last_ep = row["episode"]
    return xs, ys


def plot_trajectory(rows, plane: str, out_path, graph=None, title=None):
    """Render trajectory rows (and optionally the vessel) to a vector file."""
    if plane not in PLANES:
        raise ValueError(f"plane must be one of {sorted(PLANES)}, got {plane!r}")
    if not rows:
        raise ValueError("trajectory log is empty")
    ix, iy = PLANES[plane]

    with plt.rc_context({"svg.hashsalt": "endonav"}):
        fig, ax = plt.subplots(figsize=(6, 6))
        if graph is not None:
            xs, ys = _vessel_segments(graph, ix, iy)
            ax.plot(xs, ys, color="0.75", linewidth=3.0, solid_capstyle="round",
                    label="vessel", zorder=1)
        txs, tys = _trajectory_polyline(rows, ix, iy)
        ax.plot(txs, tys, color="crimson", linewidth=1.2, label="tip path",
                zorder=2)
        ax.plot(txs[:1], tys[:1], marker="o", color="black", markersize=4,
                linestyle="none", label="first step", zorder=3)
        ax.set_xlabel(f"{_AXIS_NAMES[ix]} (mm)")
        ax.set_ylabel(f"{_AXIS_NAMES[iy]} (mm)")
        ax.set_aspect("equal")
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        tmp = f"{out_path}.tmp"
        fig.savefig(tmp, format="svg", metadata={"Date": None})
        plt.close(fig)
    os.replace(tmp, out_path)
