"""Golden-transcript conformance check for wire-protocol servers.

Replays a deterministic action script through a server and emits one
canonical JSON line per (obs, reward, done) triple. With --expected, the
emitted transcript is compared byte-for-byte against a stored golden file
and the exit code reports the verdict.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from .client import RemoteEnv, SubprocessTransport


def scripted_actions(n_steps):
    """The shared conformance script: smooth, deterministic, branch-crossing."""
    return [(2.0 * math.cos(0.13 * k), 0.3 * math.sin(0.29 * k))
            for k in range(n_steps)]


def transcript_line(obs, reward, done) -> str:
    return json.dumps({"obs": obs, "reward": reward, "done": done},
                      sort_keys=True, separators=(",", ":"))


def replay(env: RemoteEnv, n_steps: int):
    """Reset, run the script (resetting after terminal steps), yield lines."""
    lines = []
    obs, _ = env.reset()
    for action in scripted_actions(n_steps):
        obs, reward, done, _ = env.step(action)
        lines.append(transcript_line(obs, reward, done))
        if done:
            obs, _ = env.reset()
    return lines


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="endonav-client-conformance",
        description="Replay the scripted action sequence against a server "
                    "and print (or verify) the canonical transcript.")
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--server-cmd",
                       help="command to launch a stdio server, e.g. "
                            "'endonav serve --task task.json --transport stdio'")
    group.add_argument("--tcp", metavar="HOST:PORT",
                       help="connect to a running TCP server")
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--expected",
                        help="golden transcript to compare against")
    args = parser.parse_args(argv)

    if args.server_cmd:
        env = RemoteEnv.connect(SubprocessTransport(args.server_cmd))
    else:
        host, _, port = args.tcp.rpartition(":")
        env = RemoteEnv.connect((host, int(port)))
    with env:
        lines = replay(env, args.steps)

    if args.expected:
        with open(args.expected, "r", encoding="utf-8") as fh:
            golden = fh.read().splitlines()
        if lines == golden:
            print(f"conformance OK: {len(lines)} steps match {args.expected}")
            return 0
        for i, (got, want) in enumerate(zip(lines, golden)):
            if got != want:
                print(f"mismatch at step {i}:\n  got:      {got}\n"
                      f"  expected: {want}", file=sys.stderr)
                return 1
        print(f"length mismatch: got {len(lines)}, expected {len(golden)}",
              file=sys.stderr)
        return 1
    for line in lines:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
