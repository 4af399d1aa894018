"""Command line interface: phantom generation, geodesic queries, training,
evaluation, plotting, and the remote-environment server."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import __version__
from .config import (ConfigError, build_phantom, load_run_config_file,
                     load_task_file, resolve_node)
from .ddpg import load_checkpoint, save_checkpoint, train
from .env import (TRAJECTORY_HEADER, evaluate, format_success_rate,
                  format_trajectory_row, make_env, parse_trajectory)
from .plotting import PLANES, plot_trajectory
from .server import serve_stdio, serve_tcp
from .tasks import greedy_eval_task
from .vesselgraph import geodesic_from, load_centerline_file, manifold_distance, save_centerline_file


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _write_text(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _parse_params(pairs):
    params = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--param expects name=value, got {item!r}")
        key, _, value = item.partition("=")
        try:
            params[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"--param {key}: not a number: {value!r}") from exc
    return params


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_phantom(args) -> int:
    params = _parse_params(args.param)
    graph = build_phantom({"generator": args.kind, "params": params})
    save_centerline_file(graph, args.out)
    print(f"wrote {args.out}: {len(graph)} nodes, {len(graph.edges)} edges, "
          f"{len(graph.terminals)} terminals, {len(graph.bifurcations)} bifurcations")
    return 0


def cmd_geodesic(args) -> int:
    graph = load_centerline_file(args.centerline)
    goal_ref = int(args.goal) if args.goal.lstrip("-").isdigit() else args.goal
    goal = resolve_node(graph, goal_ref, "goal")
    field = geodesic_from(graph, goal, args.alpha)
    if args.query is not None:
        point = [float(x) for x in args.query.split(",")]
        if len(point) != 3:
            return _fail("--query expects x,y,z")
        print(repr(manifold_distance(field, graph, point)))
        return 0
    lines = ["node,distance"]
    for i in range(len(graph)):
        lines.append(f"{i},{float(field.dist[i])!r}")
    report = "\n".join(lines) + "\n"
    if args.out:
        _write_text(args.out, report)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(report)
    return 0


def cmd_train(args) -> int:
    task, task_seed, ddpg_cfg = load_run_config_file(args.config)
    if args.seed is not None:
        ddpg_cfg = dataclasses.replace(ddpg_cfg, seed=args.seed)
    env_seed = task_seed if task_seed is not None else ddpg_cfg.seed
    eval_task = greedy_eval_task(task)
    policy, log = train(
        lambda seed: make_env(task, seed),
        ddpg_cfg,
        eval_env_factory=lambda seed: make_env(eval_task, seed),
    )
    os.makedirs(args.out, exist_ok=True)
    ckpt_path = os.path.join(args.out, "checkpoint.json")
    save_checkpoint(ckpt_path, policy, ddpg_cfg)
    _write_text(os.path.join(args.out, "training_log.csv"), log.to_csv())
    meta = {
        "command": "train",
        "config_file": os.path.basename(args.config),
        "ddpg": {**dataclasses.asdict(ddpg_cfg),
                 "hidden": list(ddpg_cfg.hidden)},
        "task_seed": env_seed,
        "evaluations": [dataclasses.asdict(e) for e in log.evals],
        "best_eval": dataclasses.asdict(
            max(log.evals, key=lambda e: (e.score(), -e.step))),
        "notes": {
            "completion_time": "mean over successful episodes only",
            "policy_selection": "best periodic greedy evaluation",
        },
        "version": __version__,
    }
    _write_text(os.path.join(args.out, "metadata.json"),
                json.dumps(meta, sort_keys=True, indent=1) + "\n")
    best = meta["best_eval"]
    print(f"wrote {ckpt_path}")
    print(f"best greedy eval: success "
          f"{format_success_rate(round(best['success_rate'] * ddpg_cfg.eval_episodes), ddpg_cfg.eval_episodes)} "
          f"at step {best['step']}")
    return 0


def cmd_eval(args) -> int:
    policy, doc = load_checkpoint(args.checkpoint)
    task, task_seed = load_task_file(args.task)
    env = make_env(task, args.seed if args.seed is not None
                   else (task_seed if task_seed is not None else 0))
    if doc["obs_dim"] != env.observation_dim:
        return _fail(f"checkpoint obs_dim {doc['obs_dim']} != environment "
                     f"{env.observation_dim}")
    if doc["action_dim"] != 2:
        return _fail(f"checkpoint action_dim {doc['action_dim']} != 2")
    if args.episodes < 1:
        return _fail("--episodes must be >= 1")

    traj_rows = [TRAJECTORY_HEADER]

    def on_step(episode, step, obs, action, reward, info, done):
        traj_rows.append(format_trajectory_row(episode, step, obs, action,
                                               reward, info, done))

    summary = evaluate(env, policy, args.episodes, on_step=on_step)
    wins = round(summary.success_rate * args.episodes)
    print(f"success rate: {format_success_rate(wins, args.episodes)}")
    print(f"mean completion time over successful episodes: "
          f"{summary.mean_sim_time!r} s")

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        lines = ["episode,success,steps,sim_time,return,final_distance"]
        for i, r in enumerate(summary.episodes):
            lines.append(f"{i},{int(r.success)},{r.steps},{r.sim_time!r},"
                         f"{r.episode_return!r},{r.final_distance!r}")
        _write_text(os.path.join(args.out, "results.csv"),
                    "\n".join(lines) + "\n")
        _write_text(os.path.join(args.out, "trajectories.csv"),
                    "\n".join(traj_rows) + "\n")
        if args.plot:
            rows = parse_trajectory("\n".join(traj_rows) + "\n")
            fig_path = os.path.join(args.out, f"trajectories_{args.plane}.svg")
            plot_trajectory(rows, args.plane, fig_path, graph=task.graph,
                            title=f"{args.episodes} episodes")
            print(f"wrote {fig_path}")
        print(f"wrote {args.out}/results.csv and trajectories.csv")
    return 0


def cmd_plot(args) -> int:
    with open(args.log, "r", encoding="utf-8") as fh:
        rows = parse_trajectory(fh.read())
    graph = load_centerline_file(args.centerline) if args.centerline else None
    plot_trajectory(rows, args.plane, args.out, graph=graph)
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    task, task_seed = load_task_file(args.task)
    seed = args.seed if args.seed is not None else (
        task_seed if task_seed is not None else 0)
    if args.transport == "stdio":
        serve_stdio(task, seed)
        return 0
    def ready(addr):
        print(f"listening on {addr[0]}:{addr[1]}", file=sys.stderr, flush=True)
    serve_tcp(task, seed, args.port, ready_callback=ready)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="endonav",
        description="Vascular centerline navigation: phantoms, geodesic "
                    "rewards, DDPG training, and a remote environment server.")
    p.add_argument("--version", action="version", version=f"endonav {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("phantom", help="generate a phantom centerline file")
    sp.add_argument("--kind", choices=("simplified", "complex"), required=True)
    sp.add_argument("--param", action="append", metavar="NAME=VALUE",
                    help="generator parameter override (repeatable)")
    sp.add_argument("--out", required=True, help="output centerline JSON path")
    sp.set_defaults(fn=cmd_phantom)

    sp = sub.add_parser("geodesic", help="per-node or point distance report")
    sp.add_argument("--centerline", required=True)
    sp.add_argument("--goal", required=True, help="goal label or node id")
    sp.add_argument("--alpha", type=float, default=0.0,
                    help="curvature weight coefficient (default 0)")
    sp.add_argument("--query", help="x,y,z point to evaluate instead of the table")
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.set_defaults(fn=cmd_geodesic)

    sp = sub.add_parser("train", help="train a policy from a run config")
    sp.add_argument("--config", required=True, help="run config JSON")
    sp.add_argument("--seed", type=int, help="override the config seed")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a checkpoint on a task")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--task", required=True, help="task document JSON")
    sp.add_argument("--episodes", "-n", type=int, default=10)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="directory for results/trajectory logs")
    sp.add_argument("--plot", action="store_true",
                    help="also render the trajectories to SVG")
    sp.add_argument("--plane", choices=sorted(PLANES), default="xz")
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("plot", help="render a trajectory log to SVG")
    sp.add_argument("--log", required=True, help="trajectory CSV")
    sp.add_argument("--centerline", help="overlay this vessel file")
    sp.add_argument("--plane", choices=sorted(PLANES), default="xz")
    sp.add_argument("--out", required=True, help="output SVG path")
    sp.set_defaults(fn=cmd_plot)

    sp = sub.add_parser("serve", help="serve environments over the wire protocol")
    sp.add_argument("--task", required=True, help="task document JSON")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--transport", choices=("stdio", "tcp"), default="stdio")
    sp.add_argument("--port", type=int, default=7865)
    sp.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
