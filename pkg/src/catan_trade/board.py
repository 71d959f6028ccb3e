"""Static board topology and the per-game randomized layout.

Hexes use axial coordinates (q, r) on a radius-2 hexagon. Corner positions
are kept on an integer lattice (x in units of sqrt(3)/2, y in units of 1/2)
so that corners shared by neighbouring hexes deduplicate exactly.

Index order is row-major everywhere: hexes by (r, q), nodes by (y, x) of
their corner position, edges by (y, x) of their midpoint.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass
from enum import IntEnum

N_HEXES = 19
N_NODES = 54
N_EDGES = 72


class Terrain(IntEnum):
    """Terrain codes double as the featurizer's hex coding."""

    DESERT = 0
    HILLS = 1
    MOUNTAINS = 2
    PASTURE = 3
    FIELDS = 4
    FOREST = 5


TERRAIN_BAG = (
    [Terrain.HILLS] * 3
    + [Terrain.MOUNTAINS] * 3
    + [Terrain.FOREST] * 4
    + [Terrain.PASTURE] * 4
    + [Terrain.FIELDS] * 4
    + [Terrain.DESERT]
)
NUMBER_BAG = [2, 3, 3, 4, 4, 5, 5, 6, 6, 8, 8, 9, 9, 10, 10, 11, 11, 12]

# pointy-top corner offsets on the integer lattice
_CORNERS = ((0, -2), (1, -1), (1, 1), (0, 2), (-1, 1), (-1, -1))


def pips(number: int | None) -> int:
    """Roll-likelihood weight of a dice number (0 for the desert)."""
    if number is None:
        return 0
    return 6 - abs(number - 7)


@dataclass(frozen=True)
class Topology:
    hex_coords: tuple[tuple[int, int], ...]
    node_coords: tuple[tuple[int, int], ...]
    edge_nodes: tuple[tuple[int, int], ...]
    hex_nodes: tuple[tuple[int, ...], ...]
    node_hexes: tuple[tuple[int, ...], ...]
    node_edges: tuple[tuple[int, ...], ...]
    node_neighbors: tuple[tuple[int, ...], ...]
    edge_between: dict[tuple[int, int], int]

    def other_end(self, edge: int, node: int) -> int:
        a, b = self.edge_nodes[edge]
        return b if a == node else a


def _build_topology() -> Topology:
    hex_coords = sorted(
        ((q, r) for q in range(-2, 3) for r in range(-2, 3) if abs(q + r) <= 2),
        key=lambda c: (c[1], c[0]),
    )
    corner_sets = []
    positions = set()
    for q, r in hex_coords:
        cx, cy = 2 * q + r, 3 * r
        corners = [(cx + dx, cy + dy) for dx, dy in _CORNERS]
        corner_sets.append(corners)
        positions.update(corners)
    node_coords = sorted(positions, key=lambda p: (p[1], p[0]))
    node_index = {p: i for i, p in enumerate(node_coords)}

    hex_nodes = tuple(tuple(node_index[p] for p in corners) for corners in corner_sets)
    pairs = set()
    for nodes in hex_nodes:
        for k in range(6):
            a, b = nodes[k], nodes[(k + 1) % 6]
            pairs.add((min(a, b), max(a, b)))

    def midpoint(pair):
        (ax, ay), (bx, by) = node_coords[pair[0]], node_coords[pair[1]]
        return (ay + by, ax + bx)

    edge_nodes = tuple(sorted(pairs, key=midpoint))
    edge_between = {}
    for e, (a, b) in enumerate(edge_nodes):
        edge_between[(a, b)] = e
        edge_between[(b, a)] = e

    node_hexes = [[] for _ in node_coords]
    for h, nodes in enumerate(hex_nodes):
        for n in nodes:
            node_hexes[n].append(h)
    node_edges = [[] for _ in node_coords]
    node_neighbors = [[] for _ in node_coords]
    for e, (a, b) in enumerate(edge_nodes):
        node_edges[a].append(e)
        node_edges[b].append(e)
        node_neighbors[a].append(b)
        node_neighbors[b].append(a)

    return Topology(
        hex_coords=tuple(hex_coords),
        node_coords=tuple(node_coords),
        edge_nodes=edge_nodes,
        hex_nodes=hex_nodes,
        node_hexes=tuple(tuple(x) for x in node_hexes),
        node_edges=tuple(tuple(x) for x in node_edges),
        node_neighbors=tuple(tuple(x) for x in node_neighbors),
        edge_between=edge_between,
    )


TOPOLOGY = _build_topology()


@dataclass(frozen=True)
class Board:
    """Terrain and dice numbers for one game; topology is shared."""

    terrain: tuple[Terrain, ...]
    numbers: tuple[int | None, ...]

    @property
    def topology(self) -> Topology:
        return TOPOLOGY

    @property
    def desert(self) -> int:
        return self.terrain.index(Terrain.DESERT)

    def hex_pips(self, h: int) -> int:
        return pips(self.numbers[h])

    def node_pips(self, node: int) -> int:
        return self._node_pips[node]

    def __post_init__(self):
        value = tuple(
            sum(pips(self.numbers[h]) for h in TOPOLOGY.node_hexes[n])
            for n in range(len(TOPOLOGY.node_coords))
        )
        object.__setattr__(self, "_node_pips", value)


def random_board(rng: random.Random) -> Board:
    terrain = list(TERRAIN_BAG)
    rng.shuffle(terrain)
    numbers = list(NUMBER_BAG)
    rng.shuffle(numbers)
    it = iter(numbers)
    assigned = tuple(None if t == Terrain.DESERT else next(it) for t in terrain)
    return Board(terrain=tuple(terrain), numbers=assigned)


def layout_table() -> str:
    """CSV listing every hex, node and edge index with its lattice position."""
    t = TOPOLOGY
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["kind", "index", "x", "y", "hexes", "nodes"])
    for h, (q, r) in enumerate(t.hex_coords):
        w.writerow(["hex", h, 2 * q + r, 3 * r, "", " ".join(map(str, t.hex_nodes[h]))])
    for n, (x, y) in enumerate(t.node_coords):
        w.writerow(["node", n, x, y, " ".join(map(str, t.node_hexes[n])), ""])
    for e, (a, b) in enumerate(t.edge_nodes):
        (ax, ay), (bx, by) = t.node_coords[a], t.node_coords[b]
        # midpoints land on half-steps; store doubled coordinates
        w.writerow(["edge", e, ax + bx, ay + by, "", f"{a} {b}"])
    return out.getvalue()
