"""Deterministic-policy actor-critic trainer built on the hand-rolled nets.

The actor maps normalized observations to bounded actions, the critic scores
(observation, action) pairs, targets track the online nets by Polyak
averaging, and transitions are replayed uniformly from a FIFO ring buffer.
Every random draw comes from generators derived from one seed, so a full
training run is bit-reproducible.
"""
from __future__ import annotations

import json
import math
import os
from collections import deque
from dataclasses import dataclass, field, asdict

import numpy as np

from .env import Env, Observation, evaluate
from .nets import Adam, Mlp, soft_update


class DivergenceError(RuntimeError):
    """A network parameter became non-finite during training."""


@dataclass(frozen=True)
class DdpgConfig:
    gamma: float = 0.99
    tau: float = 0.005
    lr: float = 1e-4            # both networks
    batch: int = 100
    noise_sigma: float = 0.1    # fraction of each action bound
    warmup_steps: int = 2000    # uniform-random actions before learning
    total_steps: int = 100_000
    update_interval: int = 1
    eval_episodes: int = 10
    eval_interval: int = 5000   # env steps between greedy evaluations
    log_interval: int = 50
    seed: int = 0
    hidden: tuple = (64, 64)
    buffer_capacity: int = 1_000_000
    critic_weight_decay: float = 0.0   # optional L2 on critic weights
    actor_reg: float = 1e-3    # L2 pull on the actor's pre-squash output,
                               # keeps the bounded output from saturating
    action_grad_clip: float = 1.0  # per-sample cap on |dQ/da| in the actor
                                   # update; 0 disables
    critic_grad_clip: float = 10.0  # global-norm cap on the critic gradient;
                                    # 0 disables

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must be in (0, 1]")
        if self.batch > self.buffer_capacity:
            raise ValueError("batch must be <= buffer_capacity")
        if self.warmup_steps < 0 or self.total_steps < 0:
            raise ValueError("step counts must be >= 0")


@dataclass(frozen=True)
class LogRecord:
    step: int
    mean_return: float
    success_rate: float
    critic_loss: float
    actor_objective: float


@dataclass(frozen=True)
class EvalRecord:
    step: int
    success_rate: float
    mean_return: float
    mean_sim_time: float

    def score(self):
        return (self.success_rate, self.mean_return)


@dataclass
class TrainingLog:
    records: list = field(default_factory=list)
    evals: list = field(default_factory=list)

    LOG_HEADER = "step,mean_return,success_rate,critic_loss,actor_objective"

    def to_csv(self) -> str:
        lines = [self.LOG_HEADER]
        for r in self.records:
            lines.append(",".join([
                str(r.step), repr(r.mean_return), repr(r.success_rate),
                repr(r.critic_loss), repr(r.actor_objective)]))
        return "\n".join(lines) + "\n"


class ReplayBuffer:
    """FIFO ring of transitions with uniform sampling; storage grows on
    demand up to the configured capacity."""

    def __init__(self, capacity: int = 1_000_000, obs_dim: int = 6,
                 action_dim: int = 2):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self._alloc = 0
        self._next = 0
        self.size = 0
        self.obs = self.actions = self.rewards = None
        self.next_obs = self.dones = None

    def __len__(self):
        return self.size

    def _grow(self):
        new_alloc = min(self.capacity, max(1024, self._alloc * 2))
        def grown(arr, shape):
            out = np.zeros(shape)
            if arr is not None:
                out[:self.size] = arr[:self.size]
            return out
        self.obs = grown(self.obs, (new_alloc, self.obs_dim))
        self.actions = grown(self.actions, (new_alloc, self.action_dim))
        self.rewards = grown(self.rewards, (new_alloc,))
        self.next_obs = grown(self.next_obs, (new_alloc, self.obs_dim))
        self.dones = grown(self.dones, (new_alloc,))
        self._alloc = new_alloc

    def add(self, obs, action, reward, next_obs, done):
        if self._next >= self._alloc and self._alloc < self.capacity:
            self._grow()
        i = self._next
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self._next = (self._next + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng, batch: int):
        idx = rng.integers(0, self.size, size=batch)
        return (self.obs[idx], self.actions[idx], self.rewards[idx],
                self.next_obs[idx], self.dones[idx])


# ---------------------------------------------------------------------------
# Policy = observation normalizer + actor net
# ---------------------------------------------------------------------------

class Policy:
    """Greedy policy: normalize the raw observation, run the actor, emit an
    action already scaled to the environment bounds."""

    def __init__(self, actor: Mlp, p_scale: float, v_scale: float, bounds):
        self.actor = actor
        self.p_scale = float(p_scale)
        self.v_scale = float(v_scale)
        self.bounds = np.asarray(bounds, dtype=np.float64)  # (2,) half-widths

    def normalize(self, vec6):
        vec6 = np.asarray(vec6, dtype=np.float64)
        out = vec6.copy()
        out[..., :3] /= self.p_scale
        out[..., 3:] /= self.v_scale
        return out

    def __call__(self, obs):
        vec = obs.vector if isinstance(obs, Observation) else np.asarray(obs)
        return self.actor.forward(self.normalize(vec))


def act(policy: Policy, obs, noise_sigma: float, rng) -> np.ndarray:
    """Policy action plus per-dimension Gaussian noise scaled by the action
    bounds, clipped back into bounds."""
    a = policy(obs)
    if noise_sigma > 0.0:
        a = a + noise_sigma * policy.bounds * rng.standard_normal(a.shape)
    return np.clip(a, -policy.bounds, policy.bounds)


# ---------------------------------------------------------------------------
# Updates
# ---------------------------------------------------------------------------

def update(batch, policy: Policy, critic: Mlp, target_actor: Mlp,
           target_critic: Mlp, actor_opt: Adam, critic_opt: Adam,
           config: DdpgConfig):
    """One critic + actor gradient step from a sampled batch; soft-updates
    both target nets. Mutates the nets in place and returns
    (critic_loss, actor_objective)."""
    obs, actions, rewards, next_obs, dones = batch
    n = len(obs)
    o = policy.normalize(obs)
    o2 = policy.normalize(next_obs)
    a_unit = actions / policy.bounds

    # critic target: r + gamma * (1 - done) * Q'(s', mu'(s'))
    a2 = target_actor.forward(o2) / policy.bounds
    q2 = target_critic.forward(np.concatenate([o2, a2], axis=1))[:, 0]
    y = rewards + config.gamma * (1.0 - dones) * q2

    x_critic = np.concatenate([o, a_unit], axis=1)
    q, acts_c = critic._forward_cached(x_critic)
    td = q[:, 0] - y
    critic_loss = float(np.mean(td ** 2))
    grads_c, _ = critic.backward(acts_c, (2.0 / n) * td[:, None])
    if config.critic_weight_decay > 0.0:
        for k in range(0, len(grads_c), 2):  # weights only, not biases
            grads_c[k] = grads_c[k] + 2.0 * config.critic_weight_decay * critic.weights[k // 2]
    if config.critic_grad_clip > 0.0:
        total = math.sqrt(sum(float(np.sum(g * g)) for g in grads_c))
        if total > config.critic_grad_clip:
            scale = config.critic_grad_clip / total
            grads_c = [g * scale for g in grads_c]
    critic_opt.step(critic, grads_c)

    # actor ascends mean Q(s, mu(s)) through the updated critic; a small L2
    # pull on the pre-squash output keeps tanh gradients alive
    a_pred, acts_a = policy.actor._forward_cached(o)
    x2 = np.concatenate([o, a_pred / policy.bounds], axis=1)
    q_pred, acts_c2 = critic._forward_cached(x2)
    actor_objective = float(np.mean(q_pred))
    _, grad_in = critic.backward(acts_c2, np.ones((n, 1)))
    grad_action = grad_in[:, o.shape[1]:] / policy.bounds
    if config.action_grad_clip > 0.0:
        norms = np.linalg.norm(grad_action, axis=1, keepdims=True)
        scale = np.minimum(1.0, config.action_grad_clip / np.maximum(norms, 1e-12))
        grad_action = grad_action * scale
    pre_reg = (2.0 * config.actor_reg / n) * acts_a[-1]
    grads_a, _ = policy.actor.backward(acts_a, -grad_action / n,
                                       preactivation_grad=pre_reg)
    actor_opt.step(policy.actor, grads_a)

    soft_update(target_critic, critic, config.tau)
    soft_update(target_actor, policy.actor, config.tau)
    return critic_loss, actor_objective


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def _child_seed(seed_seq) -> int:
    return int(seed_seq.generate_state(1, dtype=np.uint64)[0])


def build_policy(env: Env, config: DdpgConfig, rng) -> Policy:
    """Fresh actor scaled to the env action bounds, observations normalized
    by the graph extent and the top attainable tip speed."""
    bounds = env.action_bounds[:, 1]
    p_scale = env.task.graph.bounding_box_diagonal()
    v_scale = env.task.wire.max_step_translation / env.task.wire.step_period
    actor = Mlp([6, *config.hidden, 2], rng=rng, out_activation="tanh",
                out_scale=bounds, final_init_scale=3e-3)
    return Policy(actor, p_scale, v_scale, bounds)


def train(env_factory, config: DdpgConfig, eval_env_factory=None):
    """Run the full training protocol; returns (final Policy, TrainingLog).

    `env_factory(seed)` must build a fresh environment. Greedy evaluations
    run periodically on a separate instance from `eval_env_factory`
    (defaults to `env_factory`) and are recorded in the log, including one
    at the last step. Raises DivergenceError if any parameter goes
    non-finite.
    """
    root = np.random.SeedSequence(config.seed)
    s_init, s_act, s_env, s_eval = root.spawn(4)
    rng_init = np.random.default_rng(s_init)
    rng_act = np.random.default_rng(s_act)

    env = env_factory(_child_seed(s_env))
    eval_factory = eval_env_factory if eval_env_factory is not None else env_factory
    eval_env = eval_factory(_child_seed(s_eval))

    policy = build_policy(env, config, rng_init)
    critic = Mlp([6 + 2, *config.hidden, 1], rng=rng_init,
                 out_activation="identity", final_init_scale=3e-3)
    target_actor = policy.actor.copy()
    target_critic = critic.copy()
    actor_opt = Adam(policy.actor, lr=config.lr)
    critic_opt = Adam(critic, lr=config.lr)
    buffer = ReplayBuffer(config.buffer_capacity)

    log = TrainingLog()
    recent = deque(maxlen=10)  # (episode return, success) of finished episodes
    bounds = policy.bounds
    threshold = env.task.reward.goal_threshold
    obs, _ = env.reset()
    ep_return = 0.0
    critic_loss = math.nan
    actor_objective = math.nan

    for step in range(1, config.total_steps + 1):
        if step <= config.warmup_steps:
            action = rng_act.uniform(-bounds, bounds)
        else:
            action = act(policy, obs, config.noise_sigma, rng_act)
        next_obs, reward, done, info = env.step(action)
        buffer.add(obs.vector, action, reward, next_obs.vector, done)
        ep_return += reward
        obs = next_obs
        if done:
            recent.append((ep_return, info["d_current"] <= threshold))
            obs, _ = env.reset()
            ep_return = 0.0

        if (step > config.warmup_steps and len(buffer) >= config.batch
                and step % config.update_interval == 0):
            batch = buffer.sample(rng_act, config.batch)
            critic_loss, actor_objective = update(
                batch, policy, critic, target_actor, target_critic,
                actor_opt, critic_opt, config)
            if not math.isfinite(critic_loss):
                raise DivergenceError(f"critic loss became {critic_loss} at step {step}")
            if step % 1000 == 0 and not (policy.actor.all_finite()
                                         and critic.all_finite()):
                raise DivergenceError(f"non-finite parameter at step {step}")

        if step % config.log_interval == 0:
            if recent:
                mean_ret = sum(r for r, _ in recent) / len(recent)
                succ = sum(1.0 for _, s in recent if s) / len(recent)
            else:
                mean_ret = math.nan
                succ = math.nan
            log.records.append(LogRecord(step, mean_ret, succ,
                                         critic_loss, actor_objective))
        if (config.eval_interval and step % config.eval_interval == 0
                and step > config.warmup_steps):
            log.evals.append(_greedy_eval(eval_env, policy, config, step))

    if not log.evals or log.evals[-1].step != config.total_steps:
        log.evals.append(_greedy_eval(eval_env, policy, config,
                                      config.total_steps))
    if not (policy.actor.all_finite() and critic.all_finite()):
        raise DivergenceError("non-finite parameter at end of training")
    return policy, log


def _greedy_eval(eval_env, policy, config, step) -> EvalRecord:
    summary = evaluate(eval_env, policy, config.eval_episodes)
    mean_ret = sum(r.episode_return for r in summary.episodes) / len(summary.episodes)
    return EvalRecord(step=step, success_rate=summary.success_rate,
                      mean_return=mean_ret, mean_sim_time=summary.mean_sim_time)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = "1"


def checkpoint_document(policy: Policy, config: DdpgConfig) -> dict:
    cfg = asdict(config)
    cfg["hidden"] = list(config.hidden)
    return {
        "format_version": CHECKPOINT_VERSION,
        "kind": "ddpg_policy",
        "obs_dim": policy.actor.layer_sizes[0],
        "action_dim": policy.actor.layer_sizes[-1],
        "layer_sizes": policy.actor.layer_sizes,
        "action_bounds": policy.bounds.tolist(),
        "normalization": {"p_scale": policy.p_scale, "v_scale": policy.v_scale},
        "weights": [w.tolist() for w in policy.actor.weights],
        "biases": [b.tolist() for b in policy.actor.biases],
        "config": cfg,
        "seed": config.seed,
    }


def save_checkpoint(path, policy: Policy, config: DdpgConfig):
    text = json.dumps(checkpoint_document(policy, config), sort_keys=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    os.replace(tmp, path)


def load_checkpoint(path):
    """Returns (Policy, checkpoint document)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version "
                         f"{doc.get('format_version')!r}")
    if doc.get("kind") != "ddpg_policy":
        raise ValueError(f"not a policy checkpoint: kind={doc.get('kind')!r}")
    sizes = doc["layer_sizes"]
    bounds = np.asarray(doc["action_bounds"], dtype=np.float64)
    actor = Mlp(sizes, out_activation="tanh", out_scale=bounds)
    actor.weights = [np.array(w, dtype=np.float64) for w in doc["weights"]]
    actor.biases = [np.array(b, dtype=np.float64) for b in doc["biases"]]
    for w, b, n_in, n_out in zip(actor.weights, actor.biases,
                                 sizes[:-1], sizes[1:]):
        if w.shape != (n_out, n_in) or b.shape != (n_out,):
            raise ValueError("checkpoint parameter shapes do not match layer_sizes")
    norm = doc["normalization"]
    return Policy(actor, norm["p_scale"], norm["v_scale"], bounds), doc
