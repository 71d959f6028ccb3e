from __future__ import annotations

import collections
import random
from pathlib import Path

from catan_trade.board import (
    N_EDGES,
    N_HEXES,
    N_NODES,
    TOPOLOGY,
    Terrain,
    layout_table,
    pips,
    random_board,
)

DOCS = Path(__file__).resolve().parents[1] / "docs"


def test_counts():
    assert len(TOPOLOGY.hex_coords) == N_HEXES == 19
    assert len(TOPOLOGY.node_coords) == N_NODES == 54
    assert len(TOPOLOGY.edge_nodes) == N_EDGES == 72


def test_every_node_touches_two_or_three_edges_and_one_to_three_hexes():
    for n in range(N_NODES):
        assert len(TOPOLOGY.node_edges[n]) in (2, 3)
        assert 1 <= len(TOPOLOGY.node_hexes[n]) <= 3
    # 18 coastal nodes touch one hex, 12 touch two, 24 inner nodes touch three
    sizes = collections.Counter(len(h) for h in TOPOLOGY.node_hexes)
    assert sizes == {1: 18, 2: 12, 3: 24}


def test_edges_join_two_distinct_adjacent_nodes():
    for e, (a, b) in enumerate(TOPOLOGY.edge_nodes):
        assert a != b
        assert TOPOLOGY.edge_between[(a, b)] == TOPOLOGY.edge_between[(b, a)] == e
        assert b in TOPOLOGY.node_neighbors[a]
        assert TOPOLOGY.other_end(e, a) == b


def test_each_hex_has_six_corners_and_six_edges():
    for nodes in TOPOLOGY.hex_nodes:
        assert len(set(nodes)) == 6
        ring = [TOPOLOGY.edge_between[(nodes[k], nodes[(k + 1) % 6])] for k in range(6)]
        assert len(set(ring)) == 6


def test_row_major_ordering():
    ys = [y for _, y in TOPOLOGY.node_coords]
    assert ys == sorted(ys)
    assert list(TOPOLOGY.hex_coords[:3]) == [(0, -2), (1, -2), (2, -2)]


def test_pips():
    assert [pips(n) for n in (2, 3, 4, 5, 6, 8, 9, 10, 11, 12)] == [1, 2, 3, 4, 5, 5, 4, 3, 2, 1]
    assert pips(None) == 0


def test_random_board_multisets():
    for seed in range(50):
        board = random_board(random.Random(seed))
        assert collections.Counter(board.terrain) == {
            Terrain.HILLS: 3, Terrain.MOUNTAINS: 3, Terrain.FOREST: 4,
            Terrain.PASTURE: 4, Terrain.FIELDS: 4, Terrain.DESERT: 1,
        }
        assert board.numbers[board.desert] is None
        assert sorted(n for n in board.numbers if n is not None) == [
            2, 3, 3, 4, 4, 5, 5, 6, 6, 8, 8, 9, 9, 10, 10, 11, 11, 12
        ]
        assert board.node_pips(0) == sum(board.hex_pips(h) for h in TOPOLOGY.node_hexes[0])


def test_shipped_layout_matches_code():
    assert (DOCS / "board_layout.csv").read_text() == layout_table()
