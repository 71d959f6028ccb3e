"""The 73-way trading action space: 70 offer templates plus 3 replies.

Offer indices follow the trading footnote's listing, which is exactly the
ASCII sort of the mnemonics (givable letters in canonical resource order,
then ``4``, then the receivable letter). Replies take indices 70-72.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .core import LETTERS, RESOURCES, GameState, IllegalTrade, Resource, execute_trade

N_OFFERS = 70
N_ACTIONS = 73


class EmptyMask(ValueError):
    pass


class Reply(IntEnum):
    ACCEPT = 70
    REJECT = 71
    COUNTER = 72


@dataclass(frozen=True)
class OfferTemplate:
    givables: tuple[Resource, ...]
    receivable: Resource

    def __post_init__(self):
        if not 1 <= len(self.givables) <= 2:
            raise ValueError("an offer gives one or two cards")
        if self.receivable in self.givables:
            raise ValueError("receivable cannot also be given")

    @property
    def counts(self) -> tuple[int, ...]:
        c = [0] * 5
        for r in self.givables:
            c[r] += 1
        return tuple(c)

    @property
    def mnemonic(self) -> str:
        return "".join(LETTERS[r] for r in self.givables) + "4" + LETTERS[self.receivable]

    @property
    def index(self) -> int:
        return OFFER_INDEX[self]

    def __str__(self) -> str:
        return self.mnemonic


def parse_offer(text: str) -> OfferTemplate:
    give, sep, recv = text.partition("4")
    if not sep or len(recv) != 1 or not 1 <= len(give) <= 2:
        raise ValueError(f"bad offer mnemonic {text!r}")
    try:
        givables = tuple(sorted(Resource(LETTERS.index(ch)) for ch in give))
        receivable = Resource(LETTERS.index(recv))
    except ValueError:
        raise ValueError(f"bad offer mnemonic {text!r}") from None
    template = OfferTemplate(givables, receivable)
    if template.mnemonic != text:
        raise ValueError(f"non-canonical offer mnemonic {text!r}")
    return template


def enumerate_offers() -> list[OfferTemplate]:
    out = []
    for n in (1, 2):
        for givables in combinations_with_replacement(RESOURCES, n):
            for recv in RESOURCES:
                if recv not in givables:
                    out.append(OfferTemplate(tuple(givables), recv))
    return sorted(out, key=lambda t: t.mnemonic)


OFFERS: tuple[OfferTemplate, ...] = tuple(enumerate_offers())
OFFER_INDEX = {t: i for i, t in enumerate(OFFERS)}
_OFFER_COUNTS = np.array([t.counts for t in OFFERS])


def action_name(index: int) -> str:
    if index < N_OFFERS:
        return OFFERS[index].mnemonic
    return Reply(index).name


def parse_action(text: str) -> int:
    if text in Reply.__members__:
        return Reply[text].value
    return parse_offer(text).index


@lru_cache(maxsize=None)
def _offer_mask_for(key: tuple[int, ...]) -> np.ndarray:
    held = np.array(key)
    mask = np.zeros(N_ACTIONS, dtype=bool)
    mask[:N_OFFERS] = (_OFFER_COUNTS <= held).all(axis=1)
    mask.flags.writeable = False
    return mask


def offer_mask_from_hand(hand) -> np.ndarray:
    # no template needs more than two of a kind
    return _offer_mask_for(tuple(min(h, 2) for h in hand))


def legal_offer_mask(state: GameState, player: int) -> np.ndarray:
    """Offers whose givables the player can cover; reply slots are false."""
    return offer_mask_from_hand(state.players[player].resources)


def reply_mask(
    state: GameState, player: int, pending: OfferTemplate, allow_counter: bool = True
) -> np.ndarray:
    hand = state.players[player].resources
    mask = np.zeros(N_ACTIONS, dtype=bool)
    mask[Reply.REJECT] = True
    mask[Reply.ACCEPT] = hand[pending.receivable] >= 1
    mask[Reply.COUNTER] = allow_counter and bool(offer_mask_from_hand(hand).any())
    return mask


def masked_argmax(q_values, mask) -> int:
    """Highest-valued legal action; ties go to the lowest index."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMask("no legal action")
    return int(np.argmax(np.where(mask, q_values, -np.inf)))


def legal_indices(mask) -> np.ndarray:
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise EmptyMask("no legal action")
    return idx


# ---------------------------------------------------------------------------
# engine-side execution of trade actions
# ---------------------------------------------------------------------------


def execute_offer(state: GameState, proposer: int, acceptor: int, template: OfferTemplate) -> GameState:
    return execute_trade(state, proposer, acceptor, template.counts, template.receivable)


def check_counter(state: GameState, player: int) -> None:
    if not offer_mask_from_hand(state.players[player].resources).any():
        raise IllegalTrade(f"player {player} has nothing to counteroffer with")


def apply_action(
    state: GameState,
    player: int,
    action: int,
    pending: OfferTemplate | None = None,
    counterparty: int | None = None,
    allow_counter: bool = True,
) -> GameState:
    """Carry out one trading action, raising if the engine forbids it.

    Without ``pending`` only offers are valid and ``counterparty`` accepts
    the offer. With ``pending`` only replies are valid and ``counterparty``
    is the proposer of the pending offer. A counter reply only checks that
    an offer can be made; the counteroffer itself is a separate action.
    """
    if not 0 <= action < N_ACTIONS:
        raise IllegalTrade(f"action {action} out of range")
    if action < N_OFFERS:
        if pending is not None:
            raise IllegalTrade("a pending offer must be answered with a reply")
        return execute_offer(state, player, counterparty, OFFERS[action])
    if pending is None:
        raise IllegalTrade("no pending offer to reply to")
    if action == Reply.ACCEPT:
        return execute_offer(state, counterparty, player, pending)
    if action == Reply.COUNTER:
        if not allow_counter:
            raise IllegalTrade("counteroffers cannot be countered")
        check_counter(state, player)
    return state
