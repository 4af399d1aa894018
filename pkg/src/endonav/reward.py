"""Step rewards for goal-directed navigation along the vessel tree.

Three modes share one terminal rule (goal within threshold beats failure):

* ``shaped_manifold``   - progress along the vessel: (d_last - d_current)/scale
* ``shaped_euclidean``  - same formula on straight-line distances (ablation)
* ``negative_distance`` - plain -d_current

A goal bonus is added when the current distance is within the threshold, a
failure penalty when the wire collided or ran out of steps.
"""
from __future__ import annotations

from dataclasses import dataclass

MODES = ("shaped_manifold", "negative_distance", "shaped_euclidean")

TERMINAL_GOAL = "goal"
TERMINAL_FAILURE = "failure"
TERMINAL_NONE = "none"


@dataclass(frozen=True)
class RewardConfig:
    mode: str = "shaped_manifold"
    goal_threshold: float = 1.0   # mm
    goal_bonus: float = 100.0
    fail_penalty: float = -100.0
    dist_scale: float = 100.0     # divisor for shaped progress terms

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown reward mode {self.mode!r}, expected one of {MODES}")
        if self.goal_threshold <= 0:
            raise ValueError("goal_threshold must be > 0")
        if self.dist_scale <= 0:
            raise ValueError("dist_scale must be > 0")


@dataclass(frozen=True)
class StepOutcome:
    d_last: float      # mm, distance to goal before the step
    d_current: float   # mm, distance to goal after the step
    collided: bool = False
    out_of_steps: bool = False


def compute_reward(outcome: StepOutcome, config: RewardConfig):
    """Scalar reward and terminal status ("goal" | "failure" | "none")."""
    if outcome.d_last < 0 or outcome.d_current < 0:
        raise ValueError(
            f"distances must be >= 0, got ({outcome.d_last}, {outcome.d_current})")

    if config.mode == "negative_distance":
        reward = -outcome.d_current
    else:
        reward = (outcome.d_last - outcome.d_current) / config.dist_scale

    if outcome.d_current <= config.goal_threshold:
        return reward + config.goal_bonus, TERMINAL_GOAL
    if outcome.collided or outcome.out_of_steps:
        return reward + config.fail_penalty, TERMINAL_FAILURE
    return reward, TERMINAL_NONE
