from __future__ import annotations

import socket

import numpy as np
import pytest

from catan_trade.agent import AgentConfig, DQNAgent
from catan_trade.protocol import (
    ProtocolError,
    ProtocolServer,
    RemoteAgent,
    Session,
    decode_state,
    encode_state,
)

from wire import loopback_mismatches

HELLO = "HELLO catan-dqn 1 160 73"


def state_line(reward=0.5, terminal=False, mask=None, x=None):
    mask = np.ones(73, bool) if mask is None else mask
    x = np.linspace(0, 1, 160) if x is None else x
    return encode_state(x, mask, reward, terminal)


def ready_session():
    session = Session(DQNAgent(AgentConfig(hidden=(4,))).frozen())
    assert session.handle(HELLO) == "HELLO catan-dqn 1 OK"
    return session


def test_encoding_round_trips_bit_for_bit():
    rng = np.random.default_rng(0)
    x = rng.random(160)
    mask = rng.random(73) < 0.5
    mask[0] = True
    got_x, got_mask, reward, terminal = decode_state(encode_state(x, mask, 0.1 + 0.2, False))
    assert np.array_equal(got_x, x) and np.array_equal(got_mask, mask)
    assert reward == 0.1 + 0.2 and terminal is False


def test_handshake_and_actions():
    session = ready_session()
    mask = np.zeros(73, bool)
    mask[71] = True
    assert session.handle(state_line(mask=mask)) == "ACTION 71"
    assert session.handle(state_line(terminal=True, mask=np.zeros(73, bool))) == "ACK"
    assert session.handle("BYE") == "BYE" and session.closed


@pytest.mark.parametrize("line", [
    "HELLO catan-dqn 2 160 73",
    "HELLO catan-dqn 1 159 73",
    "STATE 0 0",
])
def test_bad_handshake(line):
    session = Session(None)
    assert session.handle(line).startswith("ERROR")
    assert session.closed and session.handle(HELLO).startswith("ERROR")


@pytest.mark.parametrize("line", [
    "STATE 0 0 " + "1" * 73 + " 0.5" * 159,
    "STATE x 0 " + "1" * 73 + " 0.5" * 160,
    "STATE 0 2 " + "1" * 73 + " 0.5" * 160,
    "STATE 0 0 " + "1" * 72 + " 0.5" * 160,
    "STATE 0 0 " + "2" * 73 + " 0.5" * 160,
    "STATE 0 0 " + "0" * 73 + " 0.5" * 160,
    "STATE 0 0 " + "1" * 73 + " nan" * 160,
    "STATE 0 0 " + "1" * 73 + " a" * 160,
    "ACTION 3",
    "",
])
def test_malformed_records_close_the_session(line):
    session = ready_session()
    reply = session.handle(line)
    assert reply.startswith("ERROR") and session.closed


def test_decode_rejects_other_records():
    with pytest.raises(ProtocolError):
        decode_state("HELLO")


def test_server_reports_errors_over_tcp():
    server = ProtocolServer(lambda: DQNAgent(AgentConfig(hidden=(4,))).frozen())
    server.start()
    try:
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as sock:
            f = sock.makefile("rwb")
            f.write(b"STATE 0 0\n")
            f.flush()
            assert f.readline().startswith(b"ERROR")
            assert f.readline() == b""
        with RemoteAgent("127.0.0.1", server.port) as remote:
            mask = np.zeros(73, bool)
            mask[5] = True
            assert remote.observe(np.zeros(160), mask, 0.0, False) == 5
            assert remote.observe(np.zeros(160), np.zeros(73, bool), 1.0, True) is None
    finally:
        server.shutdown()
        server.server_close()
    assert len(server.errors) == 1


def test_loopback_matches_in_process():
    assert loopback_mismatches(3, seed=1, cfg=AgentConfig(batch_size=16)) == []
