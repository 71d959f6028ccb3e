"""Line-based client/server split between a game and a learner.

The game side (client) reports what it observes and the learner side
(server) answers with the action to take. Records are single lines of
space-separated fields::

    client                                   server
    HELLO catan-dqn 1 <n_features> <n_actions>
                                             HELLO catan-dqn 1 OK
    STATE <reward> <terminal> <mask> <x_1> ... <x_n>
                                             ACTION <index>      (terminal 0)
                                             ACK                 (terminal 1)
    BYE                                      BYE

``mask`` is a string of 0/1 characters, one per action. Reals are written
with ``repr`` so they survive the round trip bit for bit. Any violation is
answered with ``ERROR <diagnostic>`` and the session is closed.
"""

from __future__ import annotations

import socket
import socketserver
import threading
from typing import Callable

import numpy as np

from .actions import N_ACTIONS
from .features import N_FEATURES

PROTOCOL = "catan-dqn"
VERSION = 1


class ProtocolError(RuntimeError):
    pass


def encode_state(x, mask, reward: float, terminal: bool) -> str:
    bits = "".join("1" if m else "0" for m in mask)
    return " ".join(["STATE", repr(float(reward)), "1" if terminal else "0", bits, *(repr(float(v)) for v in x)])


def decode_state(line: str, n_features: int = N_FEATURES, n_actions: int = N_ACTIONS):
    fields = line.split()
    if not fields or fields[0] != "STATE":
        raise ProtocolError(f"expected STATE record, got {line[:40]!r}")
    if len(fields) != 4 + n_features:
        raise ProtocolError(f"STATE needs {n_features} features, got {len(fields) - 4}")
    try:
        reward = float(fields[1])
    except ValueError:
        raise ProtocolError(f"bad reward {fields[1]!r}") from None
    if fields[2] not in ("0", "1"):
        raise ProtocolError(f"bad terminal flag {fields[2]!r}")
    bits = fields[3]
    if len(bits) != n_actions or set(bits) - {"0", "1"}:
        raise ProtocolError(f"mask must be {n_actions} binary digits")
    try:
        x = np.array([float(v) for v in fields[4:]])
    except ValueError:
        raise ProtocolError("non-numeric feature") from None
    if not (np.isfinite(x).all() and np.isfinite(reward)):
        raise ProtocolError("non-finite value")
    mask = np.frombuffer(bits.encode(), dtype=np.uint8) == ord("1")
    terminal = fields[2] == "1"
    if not terminal and not mask.any():
        raise ProtocolError("non-terminal state with empty mask")
    return x, mask, reward, terminal


class Session:
    """Server-side state machine for one connection (one seat)."""

    def __init__(self, agent, n_features: int = N_FEATURES, n_actions: int = N_ACTIONS):
        self.agent = agent
        self.n_features = n_features
        self.n_actions = n_actions
        self.phase = "hello"
        self.error: str | None = None

    @property
    def closed(self) -> bool:
        return self.phase == "closed"

    def handle(self, line: str) -> str:
        try:
            return self._handle(line.strip())
        except ProtocolError as exc:
            self.phase = "closed"
            self.error = str(exc)
            return f"ERROR {exc}"

    def _handle(self, line: str) -> str:
        kind = line.split(" ", 1)[0]
        if self.phase == "closed":
            raise ProtocolError("session closed")
        if self.phase == "hello":
            expected = f"HELLO {PROTOCOL} {VERSION} {self.n_features} {self.n_actions}"
            if line != expected:
                raise ProtocolError(f"expected handshake {expected!r}")
            self.phase = "ready"
            return f"HELLO {PROTOCOL} {VERSION} OK"
        if kind == "BYE":
            self.phase = "closed"
            return "BYE"
        if kind != "STATE":
            raise ProtocolError(f"unexpected {kind or 'empty'} record")
        x, mask, reward, terminal = decode_state(line, self.n_features, self.n_actions)
        action = self.agent.observe(x, mask, reward, terminal)
        if terminal:
            return "ACK"
        return f"ACTION {action}"


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = Session(self.server.agent_for_session())
        for raw in self.rfile:
            reply = session.handle(raw.decode("utf-8", "replace"))
            self.wfile.write((reply + "\n").encode())
            self.wfile.flush()
            if session.closed:
                if session.error is not None:
                    self.server.errors.append(session.error)
                break


class ProtocolServer(socketserver.ThreadingTCPServer):
    """TCP server; ``agent_for_session`` supplies the learner for each connection."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, agent_for_session: Callable, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.agent_for_session = agent_for_session
        self.errors: list[str] = []

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


class RemoteAgent:
    """Client stub with the same ``observe`` signature as the local learner."""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.rfile = self.sock.makefile("rb")
        self.transcript: list[str] = []
        reply = self._call(f"HELLO {PROTOCOL} {VERSION} {N_FEATURES} {N_ACTIONS}")
        if reply != f"HELLO {PROTOCOL} {VERSION} OK":
            raise ProtocolError(f"handshake refused: {reply}")

    def _call(self, line: str) -> str:
        self.sock.sendall((line + "\n").encode())
        reply = self.rfile.readline().decode().strip()
        self.transcript.append(reply)
        if not reply:
            raise ProtocolError("server closed the connection")
        if reply.startswith("ERROR"):
            raise ProtocolError(reply)
        return reply

    def observe(self, x, mask, reward: float, terminal: bool) -> int | None:
        reply = self._call(encode_state(x, mask, reward, terminal))
        if terminal:
            if reply != "ACK":
                raise ProtocolError(f"expected ACK, got {reply}")
            return None
        kind, _, value = reply.partition(" ")
        if kind != "ACTION":
            raise ProtocolError(f"expected ACTION, got {reply}")
        return int(value)

    def close(self) -> None:
        try:
            self._call("BYE")
        finally:
            self.rfile.close()
            self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
