"""160-dimensional state encoding seen by the Q-network.

Layout (all values scaled into [0, 1]):

====================  =========  ===========================================
slots                 count      coding
====================  =========  ===========================================
0-4                   5          own Clay, Ore, Sheep, Wheat, Wood (clamp 10)
5-23                  19         hex terrain 0-5
24-77                 54         node: 0 empty, 1/2 opponent settlement/city,
                                 3/4 own settlement/city
78-149                72         edge: 0 none, 1 opponent road, 2 own road
150-157               8          always zero (edge block padded to 80)
158                   1          terrain under the robber 0-5
159                   1          turn counter (clamp 100)
====================  =========  ===========================================
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .board import N_EDGES, N_HEXES, N_NODES
from .core import GameState

N_FEATURES = 160
HEX_SLOT = 5
NODE_SLOT = HEX_SLOT + N_HEXES
EDGE_SLOT = NODE_SLOT + N_NODES
PAD_SLOT = EDGE_SLOT + N_EDGES
ROBBER_SLOT = 158
TURN_SLOT = 159

FEATURE_NAMES = (
    ["hasClay", "hasOre", "hasSheep", "hasWheat", "hasWood"]
    + [f"hex{i}" for i in range(N_HEXES)]
    + [f"node{i}" for i in range(N_NODES)]
    + [f"edge{i}" for i in range(N_EDGES + 8)]
    + ["robber", "turns"]
)


def featurize(state: GameState, viewpoint: int) -> np.ndarray:
    x = np.zeros(N_FEATURES)
    hand = state.players[viewpoint].resources
    x[0:5] = [min(h, 10) / 10 for h in hand]
    terrain = state.board.terrain
    x[HEX_SLOT:NODE_SLOT] = [t / 5 for t in terrain]
    x[NODE_SLOT:EDGE_SLOT] = [
        0.0 if o < 0 else (lvl + 2 * (o == viewpoint)) / 4
        for o, lvl in zip(state.node_owner, state.node_level)
    ]
    x[EDGE_SLOT:PAD_SLOT] = [
        0.0 if o < 0 else (1.0 if o == viewpoint else 0.5) for o in state.edge_owner
    ]
    x[ROBBER_SLOT] = terrain[state.robber] / 5
    x[TURN_SLOT] = min(state.turn, 100) / 100
    return x


def feature_csv(x, header: bool = True) -> str:
    """Debug dump: one CSV row, optionally preceded by the feature names."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    if header:
        w.writerow(FEATURE_NAMES)
    w.writerow([repr(float(v)) for v in x])
    return out.getvalue()
