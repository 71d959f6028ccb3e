from __future__ import annotations

import random

import pytest

from catan_trade.baselines import RandomPolicy
from catan_trade.core import GameState, new_game
from catan_trade.loop import play_game


class Spy(RandomPolicy):
    """Random trader that hands every decision point to ``visit`` first.

    ``visit(state, player, pending)`` sees the live state; ``pending`` is
    None for offer decisions.
    """

    def __init__(self, seed, visit):
        super().__init__(seed)
        self.visit = visit

    def offer(self, state, player, mask):
        self.visit(state, player, None)
        return super().offer(state, player, mask)

    def reply(self, state, player, pending, mask):
        self.visit(state, player, pending)
        return super().reply(state, player, pending, mask)


def visit_decisions(n_games: int, visit, seed: int = 0):
    for g in range(n_games):
        play_game(seed * 10_007 + g, [Spy(g * 4 + i, visit) for i in range(4)])


def hands(state: GameState):
    return [list(p.resources) for p in state.players]


def restore(state: GameState, saved) -> None:
    for p, h in zip(state.players, saved):
        p.resources[:] = h


@pytest.fixture
def game():
    return new_game(7)


@pytest.fixture
def rng():
    return random.Random(1234)


# acceptance verdicts, echoed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def record_verdict(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
