"""Turn loop with trading negotiations plugged in.

Each turn: optional knight, dice roll, up to ``offer_cap`` offers broadcast
to the three opponents, then the built-in build phase. Opponents answer in
turn order and the first acceptance closes the offer. A counteroffer goes
back to the original proposer only, who may accept or reject it but not
counter again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actions import (
    N_OFFERS,
    OfferTemplate,
    Reply,
    execute_offer,
    legal_offer_mask,
    reply_mask,
)
from .core import (
    N_PLAYERS,
    GameConfig,
    GameState,
    build_phase,
    is_terminal,
    new_game,
    play_knight_if_useful,
    roll_and_produce,
)


class PolicyError(RuntimeError):
    pass


class Policy:
    """Base trading policy; subclasses override the decisions they make."""

    name = "policy"

    def start_game(self, state: GameState, player: int) -> None:
        pass

    def offer(self, state: GameState, player: int, mask: np.ndarray) -> OfferTemplate | None:
        return None

    def reply(self, state: GameState, player: int, pending: OfferTemplate, mask: np.ndarray) -> Reply:
        return Reply.REJECT

    def counteroffer(
        self, state: GameState, player: int, pending: OfferTemplate, mask: np.ndarray
    ) -> OfferTemplate:
        chosen = self.offer(state, player, mask)
        if chosen is None:
            raise PolicyError(f"{self.name} chose to counteroffer but has no offer")
        return chosen

    def game_over(self, state: GameState, player: int) -> None:
        pass


@dataclass
class Tally:
    offers: int = 0
    successful: int = 0
    trades: int = 0
    built: int = 0
    bought: int = 0
    replies: int = 0
    accepts: int = 0


@dataclass
class GameResult:
    seed: int
    winner: int | None
    turns: int
    points: list[int]
    tallies: list[Tally]
    state: GameState = field(repr=False)

    @property
    def log(self) -> list[str]:
        return self.state.log


def _check(mask: np.ndarray, index: int, who: Policy) -> None:
    if not mask[index]:
        raise PolicyError(f"{who.name} chose illegal action {index}")


def negotiate(state: GameState, policies, proposer: int, offer: OfferTemplate, tallies) -> bool:
    """Broadcast one offer; returns True if any trade resulted."""
    state.emit("OFFER", proposer, offer.mnemonic)
    tallies[proposer].offers += 1
    for k in range(1, N_PLAYERS):
        responder = (proposer + k) % N_PLAYERS
        mask = reply_mask(state, responder, offer)
        answer = Reply(policies[responder].reply(state, responder, offer, mask))
        _check(mask, answer, policies[responder])
        state.emit("REPLY", responder, proposer, answer.name)
        tallies[responder].replies += 1
        if answer == Reply.ACCEPT:
            tallies[responder].accepts += 1
            execute_offer(state, proposer, responder, offer)
            state.emit("TRADE", proposer, responder, offer.mnemonic, "offer")
            tallies[proposer].successful += 1
            tallies[proposer].trades += 1
            tallies[responder].trades += 1
            return True
        if answer == Reply.COUNTER:
            own = legal_offer_mask(state, responder)
            counter = policies[responder].counteroffer(state, responder, offer, own)
            _check(own, counter.index, policies[responder])
            state.emit("COUNTER", responder, proposer, counter.mnemonic)
            back = reply_mask(state, proposer, counter, allow_counter=False)
            answer = Reply(policies[proposer].reply(state, proposer, counter, back))
            _check(back, answer, policies[proposer])
            state.emit("REPLY", proposer, responder, answer.name)
            tallies[proposer].replies += 1
            if answer == Reply.ACCEPT:
                tallies[proposer].accepts += 1
                execute_offer(state, responder, proposer, counter)
                state.emit("TRADE", responder, proposer, counter.mnemonic, "counter")
                tallies[proposer].trades += 1
                tallies[responder].trades += 1
                return True
    return False


def play_turn(state: GameState, policies, tallies) -> None:
    p = state.current
    state.emit("TURN", state.turn, p)
    play_knight_if_useful(state, p)
    if is_terminal(state).winner is None:
        roll_and_produce(state)
        for _ in range(state.config.offer_cap):
            mask = legal_offer_mask(state, p)
            if not mask[:N_OFFERS].any():
                break
            offer = policies[p].offer(state, p, mask)
            if offer is None:
                break
            _check(mask, offer.index, policies[p])
            negotiate(state, policies, p, offer, tallies)
        before = len(state.log)
        build_phase(state, p)
        for line in state.log[before:]:
            if line.startswith("BUILD"):
                tallies[p].built += 1
            elif line.startswith("BUYDEV"):
                tallies[p].bought += 1
    state.turn += 1
    state.current = (p + 1) % N_PLAYERS


def play_game(seed: int, policies, config: GameConfig | None = None) -> GameResult:
    """Play one full game; ``policies[i]`` trades for player ``i``."""
    if len(policies) != N_PLAYERS:
        raise ValueError("exactly four policies are required")
    state = new_game(seed, config)
    tallies = [Tally() for _ in range(N_PLAYERS)]
    for p, pol in enumerate(policies):
        pol.start_game(state, p)
    while True:
        outcome = is_terminal(state)
        if outcome.done:
            break
        play_turn(state, policies, tallies)
    state.emit("END", -1 if outcome.winner is None else outcome.winner, state.turn)
    for p, pol in enumerate(policies):
        pol.game_over(state, p)
    return GameResult(
        seed=seed,
        winner=outcome.winner,
        turns=state.turn,
        points=[pl.victory_points for pl in state.players],
        tallies=tallies,
        state=state,
    )
