"""Deep Q-learning trader with experience replay and constrained action sets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .actions import N_ACTIONS, OFFERS, EmptyMask, Reply, legal_indices, masked_argmax
from .features import N_FEATURES, featurize
from .loop import Policy
from .qnet import SGD, Batch, QNetwork, TargetNetwork, init_weights, sync_target, train_minibatch
from . import qnet

OFFER = "offer"
REPLY = "reply"


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.7
    learning_rate: float = 0.001
    batch_size: int = 64
    replay_size: int = 30_000
    epsilon_start: float = 1.0
    epsilon_min: float = 0.05
    anneal_steps: int = 50_000
    target_sync: int = 100
    reply_weights: tuple[float, float] = (1.0, 0.1)
    offer_weights: tuple[float, float] = (0.1, 0.01)
    momentum: float = 0.0
    td_clip: float | None = None
    hidden: tuple[int, ...] = (50, 50)

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0 <= self.epsilon_min <= self.epsilon_start <= 1:
            raise ValueError("need 0 <= epsilon_min <= epsilon_start <= 1")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.replay_size < 1:
            raise ValueError("learning_rate, batch_size and replay_size must be positive")
        if self.target_sync < 1 or self.anneal_steps < 0:
            raise ValueError("target_sync must be >= 1 and anneal_steps >= 0")
        object.__setattr__(self, "reply_weights", tuple(self.reply_weights))
        object.__setattr__(self, "offer_weights", tuple(self.offer_weights))
        object.__setattr__(self, "hidden", tuple(self.hidden))

    @property
    def sizes(self) -> tuple[int, ...]:
        return (N_FEATURES, *self.hidden, N_ACTIONS)


def compute_reward(kind: str, gained: int, total: int, cfg: AgentConfig = AgentConfig()) -> float:
    """Gained points if any were gained since the last decision, else a share of the score."""
    if total < 0:
        raise ValueError("total points cannot be negative")
    w_gp, w_tp = cfg.reply_weights if kind == REPLY else cfg.offer_weights
    return gained * w_gp if gained > 0 else total * w_tp


class Experience(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool
    next_mask: np.ndarray


class ReplayMemory:
    """Fixed-capacity FIFO ring buffer sampled uniformly with replacement."""

    def __init__(self, capacity: int, n_features: int = N_FEATURES, n_actions: int = N_ACTIONS):
        self.capacity = capacity
        self.states = np.zeros((capacity, n_features))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, n_features))
        self.terminals = np.zeros(capacity, dtype=bool)
        self.next_masks = np.zeros((capacity, n_actions), dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, e: Experience) -> None:
        i = self.cursor
        self.states[i] = e.state
        self.actions[i] = e.action
        self.rewards[i] = e.reward
        self.next_states[i] = e.next_state
        self.terminals[i] = e.terminal
        self.next_masks[i] = e.next_mask
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def __getitem__(self, k: int) -> Experience:
        """The k-th oldest stored experience."""
        if not 0 <= k < self.size:
            raise IndexError(k)
        i = (self.cursor - self.size + k) % self.capacity
        return Experience(
            self.states[i].copy(), int(self.actions[i]), float(self.rewards[i]),
            self.next_states[i].copy(), bool(self.terminals[i]), self.next_masks[i].copy(),
        )

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.size, size=n)

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        idx = self.sample_indices(n, rng)
        return Batch(
            self.states[idx], self.actions[idx], self.rewards[idx],
            self.next_states[idx], self.terminals[idx], self.next_masks[idx],
        )


def select_action(net: QNetwork, x, mask, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over the legal actions only."""
    legal = legal_indices(mask)
    if epsilon > 0 and rng.random() < epsilon:
        return int(legal[rng.integers(len(legal))])
    return masked_argmax(net.forward(x), mask)


class DQNAgent:
    """Online Q-learner: one minibatch update per stored transition.

    ``observe`` is the whole interface the environment needs: it receives the
    current features, the legal mask, the reward earned by the previous
    decision and whether the episode just ended, and returns the next action.
    """

    def __init__(self, cfg: AgentConfig = AgentConfig(), seed: int = 0, net: QNetwork | None = None):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.net = net if net is not None else init_weights(self.rng, cfg.sizes)
        self.target = TargetNetwork(self.net)
        self.memory = ReplayMemory(cfg.replay_size, self.net.sizes[0], self.net.sizes[-1])
        self.optimizer = SGD(cfg.learning_rate, cfg.momentum)
        self.steps = 0
        self.train_steps = 0
        self.training = True
        self.budget: int | None = None
        self.losses: list[float] = []
        self._prev: tuple[np.ndarray, int] | None = None

    @property
    def learning(self) -> bool:
        return self.training and (self.budget is None or self.steps < self.budget)

    def epsilon(self) -> float:
        if not self.training:
            return 0.0
        cfg = self.cfg
        if cfg.anneal_steps == 0:
            return cfg.epsilon_min
        if self.steps >= cfg.anneal_steps:
            return cfg.epsilon_min
        frac = self.steps / cfg.anneal_steps
        return cfg.epsilon_start + frac * (cfg.epsilon_min - cfg.epsilon_start)

    def act(self, x, mask) -> int:
        return select_action(self.net, x, mask, self.epsilon(), self.rng)

    def step_and_learn(self, transition: Experience) -> DQNAgent:
        self.memory.add(transition)
        self.steps += 1
        cfg = self.cfg
        if len(self.memory) >= cfg.batch_size:
            batch = self.memory.sample(cfg.batch_size, self.rng)
            loss = train_minibatch(self.net, self.target, batch, cfg.gamma, self.optimizer, cfg.td_clip)
            self.losses.append(loss)
            self.train_steps += 1
            if self.target.steps_since_sync >= cfg.target_sync:
                sync_target(self.net, self.target)
        return self

    def observe(self, x, mask, reward: float, terminal: bool) -> int | None:
        if self._prev is not None and self.learning:
            s, a = self._prev
            self.step_and_learn(Experience(s, a, reward, x, terminal, np.asarray(mask, dtype=bool)))
        if terminal:
            self._prev = None
            return None
        a = self.act(x, mask)
        self._prev = (x, a)
        return a

    def end_episode(self) -> None:
        self._prev = None

    def frozen(self) -> DQNAgent:
        """Greedy copy sharing no mutable state with this agent."""
        clone = DQNAgent(self.cfg, seed=0, net=self.net.copy())
        clone.steps = self.steps
        clone.training = False
        return clone

    # checkpoints: a directory with the weight file and a JSON sidecar

    def save(self, path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        qnet.save(self.net, path / "weights.txt")
        meta = {"format": "dqn-agent", "version": 1, "config": asdict(self.cfg),
                "steps": self.steps, "train_steps": self.train_steps}
        (path / "agent.json").write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def load(cls, path, training: bool = False) -> DQNAgent:
        path = Path(path)
        meta = json.loads((path / "agent.json").read_text())
        if meta.get("format") != "dqn-agent" or meta.get("version") != 1:
            raise ValueError(f"{path} is not an agent checkpoint")
        agent = cls(AgentConfig(**meta["config"]), net=qnet.load(path / "weights.txt"))
        agent.steps = meta["steps"]
        agent.train_steps = meta["train_steps"]
        agent.training = training
        return agent


class DRLPolicy(Policy):
    """Connects a Q-learner (local or remote) to the game loop.

    Offers and replies share one 73-way output. Each decision's reward is
    computed at the next decision point (or at game end) from the change in
    the player's victory points.
    """

    name = "DRL"

    def __init__(self, agent, cfg: AgentConfig | None = None):
        self.agent = agent
        self.cfg = cfg or getattr(agent, "cfg", AgentConfig())
        self.rewards: list[float] = []
        self._kind: str | None = None
        self._points = 0

    def start_game(self, state, player):
        self._kind = None
        self._points = state.players[player].victory_points
        self.rewards = []

    def _reward(self, state, player) -> float:
        points = state.players[player].victory_points
        if self._kind is None:
            reward = 0.0
        else:
            reward = compute_reward(self._kind, points - self._points, points, self.cfg)
            self.rewards.append(reward)
        self._points = points
        return reward

    def _decide(self, state, player, mask, kind) -> int:
        if not mask.any():
            raise EmptyMask("no legal action")
        x = featurize(state, player)
        reward = self._reward(state, player)
        action = self.agent.observe(x, mask, reward, False)
        self._kind = kind
        return action

    def offer(self, state, player, mask):
        return OFFERS[self._decide(state, player, mask, OFFER)]

    def counteroffer(self, state, player, pending, mask):
        return self.offer(state, player, mask)

    def reply(self, state, player, pending, mask):
        return Reply(self._decide(state, player, mask, REPLY))

    def game_over(self, state, player):
        if self._kind is None:
            return
        x = featurize(state, player)
        reward = self._reward(state, player)
        self.agent.observe(x, np.zeros(N_ACTIONS, dtype=bool), reward, True)
        self._kind = None
