"""Line-delimited JSON protocol for driving environments remotely.

One message per line; every request gets exactly one response, in order.
Requests:  {"type":"hello","version":"1"} | {"type":"reset"}
           | {"type":"step","action":[dd,dtheta]} | {"type":"close"}
Responses: hello_ok{version,obs_dim,action_bounds}
           | state{obs,reward,done,info{d_current,event,step}}
           | error{code,message}
A close request and any error end the session; each connection gets its own
independent environment built from the same task and seed. Floats are
serialized with repr digits, so values round-trip exactly.
"""
from __future__ import annotations

import json
import socketserver
import sys

from .env import EpisodeDoneError, make_env

PROTOCOL_VERSION = "1"


def _err(code, message):
    return {"type": "error", "code": code, "message": message}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class EnvSession:
    """Protocol state machine for one connection."""

    def __init__(self, task, seed):
        self.env = make_env(task, seed)
        self.greeted = False
        self.has_state = False

    def handle_line(self, line: str):
        """Returns (response dict or None, keep_going). None response only
        for a clean close."""
        line = line.strip()
        if not line:
            return _err("bad_message", "empty message"), False
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            return _err("bad_message", f"invalid JSON: {exc}"), False
        if not isinstance(msg, dict) or "type" not in msg:
            return _err("bad_message", "message must be an object with 'type'"), False
        kind = msg["type"]

        if kind == "close":
            return None, False
        if not self.greeted:
            if kind != "hello":
                return _err("expected_hello", "first message must be hello"), False
            version = msg.get("version")
            if version != PROTOCOL_VERSION:
                return _err("bad_version",
                            f"unsupported version {version!r} "
                            f"(server speaks {PROTOCOL_VERSION!r})"), False
            self.greeted = True
            return {
                "type": "hello_ok",
                "version": PROTOCOL_VERSION,
                "obs_dim": self.env.observation_dim,
                "action_bounds": self.env.action_bounds.tolist(),
            }, True

        if kind == "hello":
            return _err("bad_message", "duplicate hello"), False
        if kind == "reset":
            obs, info = self.env.reset()
            self.has_state = True
            return self._state(obs, 0.0, False, info), True
        if kind == "step":
            if not self.has_state:
                return _err("not_reset", "step before reset"), False
            action = msg.get("action")
            if (not isinstance(action, (list, tuple)) or len(action) != 2
                    or not all(isinstance(x, (int, float)) for x in action)):
                return _err("bad_message",
                            "step needs action: [translation, rotation]"), False
            try:
                obs, reward, done, info = self.env.step(action)
            except EpisodeDoneError:
                return _err("episode_done", "episode is done; send reset"), False
            return self._state(obs, reward, done, info), True
        return _err("bad_message", f"unknown message type {kind!r}"), False

    @staticmethod
    def _state(obs, reward, done, info):
        return {
            "type": "state",
            "obs": [float(x) for x in obs.vector],
            "reward": float(reward),
            "done": bool(done),
            "info": {"d_current": float(info["d_current"]),
                     "event": info["event"], "step": info["step"]},
        }


def serve_stdio(task, seed, instream=None, outstream=None):
    """Speak the protocol over stdin/stdout until close, error, or EOF."""
    instream = instream if instream is not None else sys.stdin
    outstream = outstream if outstream is not None else sys.stdout
    session = EnvSession(task, seed)
    for line in instream:
        response, keep_going = session.handle_line(line)
        if response is not None:
            outstream.write(_dumps(response) + "\n")
            outstream.flush()
        if not keep_going:
            break


def serve_tcp(task, seed, port, host="127.0.0.1", ready_callback=None):
    """Accept connections forever; each speaks its own isolated session."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            session = EnvSession(task, seed)
            for raw in self.rfile:
                response, keep_going = session.handle_line(raw.decode("utf-8"))
                if response is not None:
                    self.wfile.write((_dumps(response) + "\n").encode("utf-8"))
                    self.wfile.flush()
                if not keep_going:
                    break

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    with Server((host, port), Handler) as server:
        if ready_callback is not None:
            ready_callback(server.server_address)
        server.serve_forever()
