"""Canonical navigation tasks on the procedural phantoms."""
from __future__ import annotations

import dataclasses

from .env import TaskSpec
from .guidewire import GuidewireConfig
from .phantoms import generate_simplified_phantom
from .reward import RewardConfig
from .vesselgraph import VesselGraph

EVAL_STEP_BUDGET = 300


def greedy_eval_task(task: TaskSpec, max_steps: int = EVAL_STEP_BUDGET) -> TaskSpec:
    """Evaluation twin of a training task: same dynamics, but the episode
    budget is capped at the standard allowance in case the training task
    uses a larger one."""
    return dataclasses.replace(task, max_steps=min(task.max_steps, max_steps))


def straight_task(length: float = 40.0, spacing: float = 2.0,
                  mode: str = "shaped_manifold", max_steps: int = 100) -> TaskSpec:
    """Trivial warm-up task: straight vessel, goal at the far end."""
    import numpy as np
    n = int(round(length / spacing))
    positions = np.zeros((n + 1, 3))
    positions[:, 2] = np.linspace(0.0, length, n + 1)
    radii = np.full(n + 1, 3.0)
    edges = [(i, i + 1) for i in range(n)]
    graph = VesselGraph(positions, radii, edges,
                        labels={"start": 0, "goal": n})
    return TaskSpec(graph=graph, start=0, goal=n,
                    reward=RewardConfig(mode=mode), max_steps=max_steps)


def simplified_task(goal_label: str, mode: str = "shaped_manifold",
                    branch_noise_sigma: float = 0.0,
                    alpha: float = 0.0, max_steps: int = 300) -> TaskSpec:
    """Navigation on the default Y phantom toward one of its endpoints.

    `goal_label` is "endpoint_a" (task A) or "endpoint_b" (task B).
    """
    graph = generate_simplified_phantom()
    if goal_label not in graph.labels:
        raise ValueError(f"unknown endpoint label {goal_label!r}")
    return TaskSpec(
        graph=graph,
        start=graph.labels["start"],
        goal=graph.labels[goal_label],
        reward=RewardConfig(mode=mode),
        wire=GuidewireConfig(branch_noise_sigma=branch_noise_sigma),
        alpha=alpha,
        max_steps=max_steps,
    )
