"""Thin client for the endonav line-delimited JSON environment protocol.

The client is a strict protocol consumer: values arrive as JSON numbers and
are handed to the caller untouched, and outgoing actions are serialized with
repr digits, so nothing is lost or rounded on the way through. Only the
standard library is used.
"""
from __future__ import annotations

import json
import shlex
import socket
import subprocess

PROTOCOL_VERSION = "1"


class ProtocolError(RuntimeError):
    """The server said something the protocol does not allow here."""


class RemoteEnvError(RuntimeError):
    """An error response from the server."""

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class VersionMismatchError(RemoteEnvError):
    pass


# ---------------------------------------------------------------------------
# Transports
# ---------------------------------------------------------------------------

class TcpTransport:
    def __init__(self, host, port, timeout=10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")

    def send_line(self, line):
        self._file.write(line + "\n")
        self._file.flush()

    def recv_line(self):
        return self._file.readline()

    def close(self):
        try:
            self._file.close()
        finally:
            self._sock.close()


class PipeTransport:
    """Talk over existing text streams (e.g. a subprocess's stdin/stdout)."""

    def __init__(self, writer, reader):
        self._writer = writer
        self._reader = reader

    def send_line(self, line):
        self._writer.write(line + "\n")
        self._writer.flush()

    def recv_line(self):
        return self._reader.readline()

    def close(self):
        try:
            self._writer.close()
        except OSError:
            pass


class SubprocessTransport(PipeTransport):
    """Spawn a server command and talk to it over stdio."""

    def __init__(self, command):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc = subprocess.Popen(argv, stdin=subprocess.PIPE,
                                      stdout=subprocess.PIPE, text=True)
        super().__init__(self._proc.stdin, self._proc.stdout)

    def close(self):
        super().close()
        try:
            self._proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self._proc.kill()


# ---------------------------------------------------------------------------
# Remote environment
# ---------------------------------------------------------------------------

class RemoteEnv:
    """reset/step interface over a wire-protocol transport.

    Construct via `connect` (handshake included). After `close`, calls fail.
    """

    def __init__(self, transport):
        self._transport = transport
        self._closed = False
        self.version = None
        self.obs_dim = None
        self.action_bounds = None

    @classmethod
    def connect(cls, endpoint):
        """`endpoint` is a transport, a "tcp://host:port" string, or a
        (host, port) pair."""
        if isinstance(endpoint, str):
            if not endpoint.startswith("tcp://"):
                raise ValueError(f"unsupported endpoint {endpoint!r}")
            host, _, port = endpoint[len("tcp://"):].rpartition(":")
            transport = TcpTransport(host, int(port))
        elif isinstance(endpoint, tuple):
            transport = TcpTransport(endpoint[0], int(endpoint[1]))
        else:
            transport = endpoint
        env = cls(transport)
        env._handshake()
        return env

    def _handshake(self):
        reply = self._rpc({"type": "hello", "version": PROTOCOL_VERSION},
                          during_handshake=True)
        if reply["type"] != "hello_ok":
            raise ProtocolError(f"expected hello_ok, got {reply['type']!r}")
        self.version = reply["version"]
        self.obs_dim = reply["obs_dim"]
        self.action_bounds = reply["action_bounds"]

    def _rpc(self, message, during_handshake=False):
        if self._closed:
            raise ProtocolError("handle is closed")
        self._transport.send_line(json.dumps(message, sort_keys=True,
                                             separators=(",", ":")))
        raw = self._transport.recv_line()
        if not raw:
            self._closed = True
            raise ProtocolError("connection closed by server")
        try:
            reply = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable server line: {raw!r}") from exc
        if not isinstance(reply, dict) or "type" not in reply:
            raise ProtocolError(f"malformed server message: {reply!r}")
        if reply["type"] == "error":
            self._closed = True  # server closes after any error
            code = reply.get("code", "unknown")
            if during_handshake and code == "bad_version":
                raise VersionMismatchError(code, reply.get("message", ""))
            raise RemoteEnvError(code, reply.get("message", ""))
        return reply

    def _expect_state(self, reply):
        if reply["type"] != "state":
            raise ProtocolError(f"expected state, got {reply['type']!r}")
        return (reply["obs"], reply["reward"], reply["done"], reply["info"])

    def reset(self):
        """Returns (obs, info); obs is the server's 6-number list, untouched."""
        obs, _, _, info = self._expect_state(self._rpc({"type": "reset"}))
        return obs, info

    def step(self, action):
        """Returns (obs, reward, done, info) exactly as the server sent them."""
        msg = {"type": "step", "action": [action[0], action[1]]}
        return self._expect_state(self._rpc(msg))

    def close(self):
        if not self._closed:
            try:
                self._transport.send_line(json.dumps({"type": "close"}))
            except (OSError, ValueError):
                pass
            self._closed = True
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
