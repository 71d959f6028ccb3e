"""Loopback comparison of wire-protocol play against in-process play."""

from __future__ import annotations

import numpy as np

from catan_trade.agent import AgentConfig, DQNAgent, DRLPolicy
from catan_trade.baselines import RandomPolicy
from catan_trade.loop import play_game
from catan_trade.protocol import ProtocolServer, RemoteAgent


class Recording:
    """Wraps a local learner and writes the replies a server would send."""

    def __init__(self, agent):
        self.agent = agent
        self.cfg = agent.cfg
        self.transcript: list[str] = []

    def observe(self, x, mask, reward, terminal):
        action = self.agent.observe(x, mask, reward, terminal)
        self.transcript.append("ACK" if terminal else f"ACTION {action}")
        return action


def _seats(g: int, learner):
    return [learner] + [RandomPolicy(g * 4 + i) for i in range(1, 4)]


def loopback_mismatches(n_games: int, seed: int = 0, cfg: AgentConfig | None = None) -> list[str]:
    """Play ``n_games`` both ways with identically seeded learners.

    Returns a description of every game whose action transcript, event log
    or learner state differs; an empty list means the runs are identical.
    """
    cfg = cfg or AgentConfig()
    local = Recording(DQNAgent(cfg, seed=seed))
    served = DQNAgent(cfg, seed=seed)
    server = ProtocolServer(lambda: served)
    server.start()
    problems = []
    try:
        with RemoteAgent("127.0.0.1", server.port) as remote:
            for g in range(n_games):
                start_local, start_remote = len(local.transcript), len(remote.transcript)
                a = play_game(seed * 10_000 + g, _seats(g, DRLPolicy(local, cfg)))
                b = play_game(seed * 10_000 + g, _seats(g, DRLPolicy(remote, cfg)))
                if local.transcript[start_local:] != remote.transcript[start_remote:]:
                    problems.append(f"game {g}: transcripts differ")
                if a.log != b.log:
                    problems.append(f"game {g}: event logs differ")
                if local.agent.steps != served.steps:
                    problems.append(f"game {g}: learner step counts differ")
    finally:
        server.shutdown()
        server.server_close()
    if server.errors:
        problems.extend(f"server: {e}" for e in server.errors)
    same = all(np.array_equal(p, q) for p, q in zip(local.agent.net.params(), served.net.params()))
    if not same:
        problems.append("final weights differ")
    return problems
