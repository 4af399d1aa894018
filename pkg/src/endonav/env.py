"""Episodic navigation environment: reset/step over a vessel tree task.

Observations are the raw tip position and velocity (mm, mm/s) serialized as
a flat 6-vector. Episodes end on goal proximity, wall collision, or step
exhaustion. All randomness flows through one seeded generator per instance,
so identical seeds give bit-identical rollouts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .guidewire import GuidewireConfig, GuidewireState, WireEvent, reset_wire, step_wire
from .reward import RewardConfig, StepOutcome, TERMINAL_NONE, compute_reward
from .vesselgraph import VesselGraph, geodesic_from, manifold_distance


class EpisodeDoneError(RuntimeError):
    """Raised when stepping an environment whose episode already ended."""


@dataclass(frozen=True)
class TaskSpec:
    graph: VesselGraph
    start: int
    goal: int
    reward: RewardConfig = field(default_factory=RewardConfig)
    wire: GuidewireConfig = field(default_factory=GuidewireConfig)
    alpha: float = 0.0
    max_steps: int = 300

    def __post_init__(self):
        n = len(self.graph)
        if not (0 <= self.start < n):
            raise ValueError(f"start node {self.start} does not exist")
        if not (0 <= self.goal < n):
            raise ValueError(f"goal node {self.goal} does not exist")
        if self.start == self.goal:
            raise ValueError("start and goal must differ")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class Observation:
    p: np.ndarray  # (3,) mm
    v: np.ndarray  # (3,) mm/s

    @property
    def vector(self) -> np.ndarray:
        """Flat layout (p.x, p.y, p.z, v.x, v.y, v.z)."""
        return np.concatenate([self.p, self.v])

    @staticmethod
    def from_vector(vec) -> "Observation":
        vec = np.asarray(vec, dtype=np.float64)
        return Observation(p=vec[:3].copy(), v=vec[3:6].copy())


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    steps: int
    sim_time: float       # s, steps * step_period
    episode_return: float
    final_distance: float  # mm


class Env:
    """One guidewire navigation episode at a time over a fixed task."""

    def __init__(self, task: TaskSpec, seed: int):
        self.task = task
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.field = geodesic_from(task.graph, task.goal, task.alpha)
        self.goal_position = task.graph.positions[task.goal].copy()
        self._state: GuidewireState | None = None
        self._steps = 0
        self._done = True
        self._d_current = math.nan

    # -- distances -----------------------------------------------------------

    def _distance(self, tip) -> float:
        if self.task.reward.mode == "shaped_euclidean":
            return float(np.linalg.norm(tip - self.goal_position))
        return manifold_distance(self.field, self.task.graph, tip)

    @property
    def action_bounds(self) -> np.ndarray:
        """Per-dimension (low, high) for (translation mm, rotation rad)."""
        w = self.task.wire
        return np.array([[-w.max_step_translation, w.max_step_translation],
                         [-w.max_step_rotation, w.max_step_rotation]])

    @property
    def observation_dim(self) -> int:
        return 6

    # -- episode API ----------------------------------------------------------

    def reset(self):
        """Start a fresh episode; returns (Observation, info)."""
        self._state = reset_wire(self.task.graph, self.task.start, self.task.wire)
        self._steps = 0
        self._done = False
        self._d_current = self._distance(self._state.tip)
        obs = Observation(p=self._state.tip.copy(), v=self._state.velocity.copy())
        return obs, self._info(WireEvent("none"))

    def step(self, action):
        """Apply (translation mm, rotation rad); returns (obs, reward, done, info)."""
        if self._done or self._state is None:
            raise EpisodeDoneError("episode is done; call reset() first")
        d_last = self._d_current
        self._state, event = step_wire(self._state, self.task.graph,
                                       self.task.wire, action, rng=self.rng)
        self._steps += 1
        d_current = self._distance(self._state.tip)
        outcome = StepOutcome(
            d_last=d_last,
            d_current=d_current,
            collided=(event.kind == "wall_collision"),
            out_of_steps=(self._steps >= self.task.max_steps),
        )
        reward, terminal = compute_reward(outcome, self.task.reward)
        self._d_current = d_current
        self._done = terminal != TERMINAL_NONE
        obs = Observation(p=self._state.tip.copy(), v=self._state.velocity.copy())
        return obs, reward, self._done, self._info(event)

    def _info(self, event: WireEvent) -> dict:
        return {"d_current": self._d_current, "event": event.kind,
                "step": self._steps}

    @property
    def done(self) -> bool:
        return self._done


def make_env(task: TaskSpec, seed: int) -> Env:
    """Environment with its own deterministic random stream and a geodesic
    field precomputed once for the task goal."""
    return Env(task, seed)


# ---------------------------------------------------------------------------
# Rollouts
# ---------------------------------------------------------------------------

def run_episode(env: Env, policy, max_steps: int | None = None,
                on_step=None) -> EpisodeResult:
    """Roll a policy (Observation -> action) until the episode ends.

    `on_step(step, obs, action, reward, info, done)` is invoked after every
    transition when provided (used for trajectory logging).
    """
    obs, info = env.reset()
    total = 0.0
    steps = 0
    limit = env.task.max_steps if max_steps is None else min(max_steps, env.task.max_steps)
    done = False
    while not done and steps < limit:
        action = policy(obs)
        obs, reward, done, info = env.step(action)
        steps += 1
        total += reward
        if on_step is not None:
            on_step(steps, obs, action, reward, info, done)
    final_distance = info["d_current"]
    success = done and final_distance <= env.task.reward.goal_threshold
    return EpisodeResult(
        success=success,
        steps=steps,
        sim_time=steps * env.task.wire.step_period,
        episode_return=total,
        final_distance=final_distance,
    )


@dataclass(frozen=True)
class EvalSummary:
    success_rate: float
    mean_sim_time: float  # over successful episodes; nan if none succeeded
    episodes: tuple


def evaluate(env: Env, policy, n_episodes: int, on_step=None) -> EvalSummary:
    """Success rate and mean completion time over repeated rollouts.

    Completion time is averaged over successful episodes only.
    """
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    results = []
    for ep in range(n_episodes):
        cb = None
        if on_step is not None:
            cb = (lambda e: lambda *args: on_step(e, *args))(ep)
        results.append(run_episode(env, policy, on_step=cb))
    wins = [r for r in results if r.success]
    mean_time = (sum(r.sim_time for r in wins) / len(wins)) if wins else math.nan
    return EvalSummary(
        success_rate=len(wins) / n_episodes,
        mean_sim_time=mean_time,
        episodes=tuple(results),
    )


def format_success_rate(successes: int, total: int) -> str:
    """Match the reporting style '80% (8/10)'."""
    return f"{100.0 * successes / total:g}% ({successes}/{total})"


# ---------------------------------------------------------------------------
# Trajectory logs (delimited text, one row per step)
# ---------------------------------------------------------------------------

TRAJECTORY_HEADER = ("episode,step,px,py,pz,vx,vy,vz,dd,dtheta,"
                     "reward,d_current,event,done")


def format_trajectory_row(episode: int, step: int, obs: Observation, action,
                          reward: float, info: dict, done: bool) -> str:
    vals = [repr(float(x)) for x in obs.vector]
    acts = [repr(float(action[0])), repr(float(action[1]))]
    return ",".join([str(episode), str(step)] + vals + acts +
                    [repr(float(reward)), repr(float(info["d_current"])),
                     info["event"], str(int(done))])


def parse_trajectory(text: str):
    """Rows of a trajectory log as dicts; rejects unknown headers."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise ValueError("not a trajectory log (bad or missing header)")
    cols = TRAJECTORY_HEADER.split(",")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(cols):
            raise ValueError(f"malformed trajectory row: {ln!r}")
        row = dict(zip(cols, parts))
        for key in cols:
            if key in ("episode", "step", "done"):
                row[key] = int(row[key])
            elif key != "event":
                row[key] = float(row[key])
        rows.append(row)
    return rows
