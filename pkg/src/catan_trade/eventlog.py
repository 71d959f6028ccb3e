"""Game event log: format, replay and per-seat metrics.

One record per line, event kind first, fields space separated. Resource
fields are canonical indices (0 Clay, 1 Ore, 2 Sheep, 3 Wheat, 4 Wood);
hand vectors are five counts in that order.

==========  ==================================================
kind        fields
==========  ==================================================
GAME        seed turn_cap offer_cap literal_costs
SETUP       player node edge
GRANT       player clay ore sheep wheat wood
TURN        turn player
KNIGHT      player hex victim stolen   (victim/stolen -1 if none)
ROLL        player total
PRODUCE     player resource amount
DISCARD     player clay ore sheep wheat wood
ROBBER      player hex victim stolen
OFFER       player mnemonic
REPLY       player to ACCEPT|REJECT|COUNTER
COUNTER     player to mnemonic
TRADE       proposer acceptor mnemonic offer|counter
BANK        player give receive
BUILD       player ROAD|SETTLEMENT|CITY location
BUYDEV      player KNIGHT|VICTORY_POINT|FILLER
END         winner turns           (winner -1 when the turn cap hit)
==========  ==================================================

Replaying a log re-creates the board and deck from the GAME seed and then
applies every recorded effect without consulting any random draws.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import core
from .actions import execute_offer, parse_offer
from .core import BuildKind, DevCard, GameConfig, GameState, Resource


class ReplayError(ValueError):
    pass


def _ints(fields) -> list[int]:
    return [int(v) for v in fields]


def replay(lines) -> GameState:
    """Rebuild the final game state from its event log."""
    lines = [ln for ln in lines if ln.strip()]
    if not lines or not lines[0].startswith("GAME "):
        raise ReplayError("log must start with a GAME record")
    seed, cap, offer_cap, literal = _ints(lines[0].split()[1:])
    state = core.blank_state(seed, GameConfig(cap, offer_cap, bool(literal)))
    for number, line in enumerate(lines[1:], start=2):
        kind, *f = line.split()
        try:
            _apply(state, kind, f)
        except (core.GameError, ValueError, IndexError) as exc:
            raise ReplayError(f"line {number}: {line!r}: {exc}") from exc
    state.log = list(lines)
    return state


def _apply(state: GameState, kind: str, f: list[str]) -> None:
    players = state.players
    if kind == "SETUP":
        p, node, edge = _ints(f)
        core.place_setup(state, p, node, edge)
    elif kind in ("GRANT", "DISCARD"):
        p, *counts = _ints(f)
        sign = 1 if kind == "GRANT" else -1
        for r in range(5):
            players[p].resources[r] += sign * counts[r]
    elif kind == "TURN":
        state.turn, state.current = _ints(f)
    elif kind == "PRODUCE":
        p, r, n = _ints(f)
        players[p].resources[r] += n
    elif kind in ("ROBBER", "KNIGHT"):
        p, hex_, victim, stolen = _ints(f)
        if kind == "KNIGHT":
            pl = players[p]
            idx = next(i for i, (c, t) in enumerate(pl.dev_cards) if c == DevCard.KNIGHT and t < state.turn)
            pl.dev_cards.pop(idx)
            pl.knights_played += 1
        state.robber = hex_
        if victim >= 0:
            players[victim].resources[stolen] -= 1
            players[p].resources[stolen] += 1
        if kind == "KNIGHT":
            core._refresh_army(state)
            core._refresh_scores(state)
    elif kind == "TRADE":
        proposer, acceptor = int(f[0]), int(f[1])
        execute_offer(state, proposer, acceptor, parse_offer(f[2]))
    elif kind == "BANK":
        p, give, recv = _ints(f)
        core.bank_trade(state, p, Resource(give), Resource(recv))
    elif kind == "BUILD":
        core.apply_build(state, int(f[0]), (BuildKind[f[1]], int(f[2])))
    elif kind == "BUYDEV":
        expected = DevCard[f[1]]
        if state.deck[-1] != expected:
            raise ReplayError(f"deck top is {state.deck[-1].name}, log says {expected.name}")
        core.apply_build(state, int(f[0]), (BuildKind.DEV_CARD, None))
    elif kind == "END":
        state.turn = int(f[1])
        state.current = state.turn % core.N_PLAYERS
    elif kind in ("ROLL", "OFFER", "REPLY", "COUNTER"):
        pass
    else:
        raise ReplayError(f"unknown event kind {kind}")
    # the log is not re-recorded during replay
    state.log.clear()


@dataclass
class GameMetrics:
    won: bool
    victory_points: int
    offers_made: int
    successful_offers: int
    total_trades: int
    pieces_built: int
    cards_bought: int
    turns: int
    replies: int = 0
    accepts: int = 0


def metrics_from_log(lines, player: int) -> GameMetrics:
    """Recompute one player's metrics from the event stream alone."""
    offers = successful = trades = built = bought = replies = accepts = 0
    winner, turns = None, 0
    for line in lines:
        kind, *f = line.split()
        if kind == "OFFER" and int(f[0]) == player:
            offers += 1
        elif kind == "TRADE":
            proposer, acceptor = int(f[0]), int(f[1])
            if player in (proposer, acceptor):
                trades += 1
            if proposer == player and f[3] == "offer":
                successful += 1
        elif kind == "REPLY" and int(f[0]) == player:
            replies += 1
            accepts += f[2] == "ACCEPT"
        elif kind == "BUILD" and int(f[0]) == player:
            built += 1
        elif kind == "BUYDEV" and int(f[0]) == player:
            bought += 1
        elif kind == "END":
            winner, turns = int(f[0]), int(f[1])
    state = replay(lines)
    return GameMetrics(
        won=winner == player,
        victory_points=state.players[player].victory_points,
        offers_made=offers,
        successful_offers=successful,
        total_trades=trades,
        pieces_built=built,
        cards_bought=bought,
        turns=turns,
        replies=replies,
        accepts=accepts,
    )
