"""Baseline traders: random, deficit-driven heuristic and random-forest supervised."""

from __future__ import annotations

import csv
import io
import random
from pathlib import Path

import numpy as np

from .actions import (
    N_OFFERS,
    OFFERS,
    EmptyMask,
    OfferTemplate,
    Reply,
    legal_indices,
    legal_offer_mask,
    reply_mask,
)
from .board import TOPOLOGY, Terrain
from .core import RESOURCES, TERRAIN_RESOURCE, GameState, Plan, build_plan
from .forest import RandomForest, train_forest
from .loop import Policy, play_game


class RandomPolicy(Policy):
    """Uniform choice over whatever is legal, offers and replies alike."""

    name = "Ran"

    def __init__(self, seed=None):
        self.rng = random.Random(seed)

    def choose(self, mask) -> int:
        return int(self.rng.choice(legal_indices(mask)))

    def offer(self, state, player, mask):
        return OFFERS[self.choose(mask[:N_OFFERS])]

    def reply(self, state, player, pending, mask):
        return Reply(self.choose(mask))

    def counteroffer(self, state, player, pending, mask):
        return self.offer(state, player, mask)


def random_policy(state: GameState, player: int, phase, rng: random.Random):
    """Functional form: ``phase`` is None for offers or the pending offer for replies."""
    mask = legal_offer_mask(state, player) if phase is None else reply_mask(state, player, phase)
    index = int(rng.choice(legal_indices(mask)))
    return OFFERS[index] if index < N_OFFERS else Reply(index)


def production(state: GameState, player: int) -> list[int]:
    """Pip-weighted income per resource, ignoring the robber."""
    key = ("income", player)
    if key not in state.cache:
        state.cache[key] = _production(state, player)
    return state.cache[key]


def _production(state: GameState, player: int) -> list[int]:
    out = [0] * 5
    for n, owner in enumerate(state.node_owner):
        if owner != player:
            continue
        for h in TOPOLOGY.node_hexes[n]:
            terrain = state.board.terrain[h]
            if terrain != Terrain.DESERT:
                out[TERRAIN_RESOURCE[terrain]] += state.node_level[n] * state.board.hex_pips(h)
    return out


def _fits(template: OfferTemplate, surplus) -> bool:
    return all(c <= s for c, s in zip(template.counts, surplus))


def heuristic_offer(
    state: GameState, player: int, mask, plan: Plan | None = None, wanted=None, skip=()
) -> OfferTemplate | None:
    """Surplus cards for the scarcest missing resource; single givables first."""
    plan = plan or build_plan(state, player)
    if plan is None:
        return None
    income = production(state, player)
    hand = state.players[player].resources
    best, best_key = None, None
    for i in np.flatnonzero(mask[:N_OFFERS]):
        t = OFFERS[i]
        if i in skip or not plan.need[t.receivable] or not _fits(t, plan.surplus):
            continue
        if wanted is not None and t.receivable not in wanted:
            continue
        key = (income[t.receivable], len(t.givables), -min(hand[g] for g in t.givables), i)
        if best_key is None or key < best_key:
            best, best_key = t, key
    return best


def heuristic_accepts(plan: Plan | None, pending: OfferTemplate) -> bool:
    """Take the deal if it gives a needed card and only costs a surplus one."""
    if plan is None:
        return False
    helps = any(plan.need[g] for g in pending.givables)
    return helps and plan.surplus[pending.receivable] >= 1


class HeuristicPolicy(Policy):
    """Deficit-driven trader standing in for the rule-based bot."""

    name = "Heu"

    def __init__(self):
        self._turn = -1
        self._tried: set[int] = set()

    def offer(self, state, player, mask):
        if state.turn != self._turn:
            self._turn, self._tried = state.turn, set()
        chosen = heuristic_offer(state, player, mask, skip=self._tried)
        if chosen is not None:
            self._tried.add(chosen.index)
        return chosen

    def reply(self, state, player, pending, mask):
        return heuristic_reply(state, player, pending, mask)

    def counteroffer(self, state, player, pending, mask):
        chosen = _counter_candidate(state, player, pending, mask)
        if chosen is None:
            raise EmptyMask("no counteroffer available")
        return chosen


def _counter_candidate(state, player, pending, mask) -> OfferTemplate | None:
    plan = build_plan(state, player)
    if plan is None:
        return None
    wanted = {g for g in pending.givables if plan.need[g]}
    if not wanted:
        return None
    return heuristic_offer(state, player, mask, plan=plan, wanted=wanted)


def heuristic_reply(state: GameState, player: int, pending: OfferTemplate, mask) -> Reply:
    plan = build_plan(state, player)
    if mask[Reply.ACCEPT] and heuristic_accepts(plan, pending):
        return Reply.ACCEPT
    if mask[Reply.COUNTER]:
        own = legal_offer_mask(state, player)
        if _counter_candidate(state, player, pending, own) is not None:
            return Reply.COUNTER
    return Reply.REJECT


def heuristic_policy(state: GameState, player: int, phase):
    """Functional form: ``phase`` is None for offers or the pending offer for replies."""
    if phase is None:
        mask = legal_offer_mask(state, player)
        if not mask.any():
            raise EmptyMask("no legal offer")
        return heuristic_offer(state, player, mask)
    return heuristic_reply(state, player, phase, reply_mask(state, player, phase))


# ---------------------------------------------------------------------------
# supervised trader
# ---------------------------------------------------------------------------

EVIDENCE_FIELDS = ("clay", "ore", "sheep", "wheat", "wood", "roads", "settlements", "cities", "receivable")


def evidence(state: GameState, player: int, receivable: int) -> tuple[int, ...]:
    pl = state.players[player]
    return (*pl.resources, pl.roads, pl.settlements, pl.cities, int(receivable))


def wanted_resource(state: GameState, player: int) -> int:
    plan = build_plan(state, player)
    income = production(state, player)
    hand = state.players[player].resources
    if plan is not None and any(plan.need):
        return min((r for r in RESOURCES if plan.need[r]), key=lambda r: (income[r], r))
    return min(RESOURCES, key=lambda r: (hand[r], r))


def supervised_offer(forest: RandomForest, state: GameState, player: int, mask) -> OfferTemplate:
    legal = [OFFERS[i] for i in np.flatnonzero(mask[:N_OFFERS])]
    if not legal:
        raise EmptyMask("no legal offer")
    receivable = wanted_resource(state, player)
    pool = [t for t in legal if t.receivable == receivable] or legal
    candidates = {g for t in pool for g in t.givables}
    posterior = forest.predict(evidence(state, player, receivable))
    y = max(candidates, key=lambda g: (posterior[g], -g))
    using = [t for t in pool if y in t.givables]
    return min(using, key=lambda t: (len(t.givables), t.index))


class SupervisedPolicy(Policy):
    """Forest-predicted givable for offers; heuristic replies."""

    name = "Sup"

    def __init__(self, forest: RandomForest):
        self.forest = forest

    def offer(self, state, player, mask):
        return supervised_offer(self.forest, state, player, mask)

    def reply(self, state, player, pending, mask):
        return heuristic_reply(state, player, pending, mask)

    def counteroffer(self, state, player, pending, mask):
        chosen = _counter_candidate(state, player, pending, mask)
        if chosen is None:
            raise EmptyMask("no counteroffer available")
        return chosen


def supervised_policy(forest: RandomForest, state: GameState, player: int, phase):
    if phase is None:
        return supervised_offer(forest, state, player, legal_offer_mask(state, player))
    return heuristic_reply(state, player, phase, reply_mask(state, player, phase))


# ---------------------------------------------------------------------------
# synthetic corpus
# ---------------------------------------------------------------------------


class _Recorder(HeuristicPolicy):
    def __init__(self, rows):
        super().__init__()
        self.rows = rows
        self.pending = []

    def offer(self, state, player, mask):
        chosen = super().offer(state, player, mask)
        if chosen is not None:
            row = evidence(state, player, chosen.receivable)
            self.pending.append((row, chosen, len(state.log)))
        return chosen


def generate_synthetic_corpus(n_games: int, seed: int = 0) -> list[tuple[tuple[int, ...], int]]:
    """Heuristic self-play; each executed offer yields (evidence, givable)."""
    if n_games < 1:
        raise ValueError("need at least one game")
    rows: list[tuple[tuple[int, ...], int]] = []
    for g in range(n_games):
        recorders = [_Recorder(rows) for _ in range(4)]
        result = play_game(seed * 100_003 + g, recorders)
        log = result.log
        for rec in recorders:
            for row, template, at in rec.pending:
                # the OFFER event sits at index ``at``; a TRADE closing it follows
                # before the next OFFER
                for line in log[at + 1 :]:
                    if line.startswith("OFFER"):
                        break
                    if line.startswith("TRADE") and line.endswith(" offer"):
                        rows.append((row, int(template.givables[0])))
                        break
    return rows


def write_corpus(rows, path=None) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(EVIDENCE_FIELDS + ("givable",))
    for row, label in rows:
        w.writerow((*row, label))
    text = out.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_corpus(source) -> list[tuple[tuple[int, ...], int]]:
    text = Path(source).read_text() if not isinstance(source, str) or "\n" not in source else source
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != EVIDENCE_FIELDS + ("givable",):
        raise ValueError(f"unexpected corpus header {header}")
    return [(tuple(int(v) for v in r[:-1]), int(r[-1])) for r in reader if r]


def train_supervised(n_games: int = 32, seed: int = 0, n_trees: int = 100) -> RandomForest:
    rows = generate_synthetic_corpus(n_games, seed)
    return train_forest(rows, np.random.default_rng(seed), n_trees=n_trees)
