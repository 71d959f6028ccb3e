"""Settlers of Catan rules engine.

Everything outside trading is played by fixed built-in heuristics shared by
all seats: setup placement, discards, robber moves, knight play, bank trades
and building. Trading policies plug into the turn loop in :mod:`loop`.

A ``GameState`` is mutated in place by the operations below; each operation
also returns the state for chaining. Every state change is appended to
``state.log`` as a text event (see :mod:`eventlog`).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

from .board import N_HEXES, TOPOLOGY, Board, Terrain, random_board

T = TOPOLOGY
N_PLAYERS = 4
WINNING_POINTS = 10


class Resource(IntEnum):
    CLAY = 0
    ORE = 1
    SHEEP = 2
    WHEAT = 3
    WOOD = 4


RESOURCES = tuple(Resource)
LETTERS = "COSWD"  # trade mnemonic letters; D is wood
TERRAIN_RESOURCE = {
    Terrain.HILLS: Resource.CLAY,
    Terrain.MOUNTAINS: Resource.ORE,
    Terrain.PASTURE: Resource.SHEEP,
    Terrain.FIELDS: Resource.WHEAT,
    Terrain.FOREST: Resource.WOOD,
}


class BuildKind(IntEnum):
    ROAD = 0
    SETTLEMENT = 1
    CITY = 2
    DEV_CARD = 3


class DevCard(IntEnum):
    KNIGHT = 0
    VICTORY_POINT = 1
    FILLER = 2


STANDARD_COSTS = {
    BuildKind.ROAD: (1, 0, 0, 0, 1),
    BuildKind.SETTLEMENT: (1, 0, 1, 1, 1),
    BuildKind.CITY: (0, 3, 0, 2, 0),
    BuildKind.DEV_CARD: (0, 1, 1, 1, 0),
}
# city and dev card costs as literally worded in the trading study's rules summary
LITERAL_COSTS = {
    BuildKind.ROAD: (1, 0, 0, 0, 1),
    BuildKind.SETTLEMENT: (1, 0, 1, 1, 1),
    BuildKind.CITY: (3, 0, 0, 2, 0),
    BuildKind.DEV_CARD: (1, 0, 1, 1, 0),
}

DECK = [DevCard.KNIGHT] * 14 + [DevCard.VICTORY_POINT] * 5 + [DevCard.FILLER] * 6


class GameError(Exception):
    pass


class IllegalBuild(GameError):
    pass


class InsufficientResources(GameError):
    pass


class IllegalTrade(GameError):
    pass


@dataclass(frozen=True)
class GameConfig:
    turn_cap: int = 150
    offer_cap: int = 3
    literal_costs: bool = False

    @property
    def costs(self) -> dict[BuildKind, tuple[int, ...]]:
        return LITERAL_COSTS if self.literal_costs else STANDARD_COSTS


@dataclass
class PlayerState:
    resources: list[int] = field(default_factory=lambda: [0] * 5)
    roads_left: int = 15
    settlements_left: int = 5
    cities_left: int = 4
    # (card, turn bought); VP cards stay here and score while held
    dev_cards: list[tuple[DevCard, int]] = field(default_factory=list)
    knights_played: int = 0
    victory_points: int = 0
    road_length: int = 0

    @property
    def settlements(self) -> int:
        return 5 - self.settlements_left

    @property
    def cities(self) -> int:
        return 4 - self.cities_left

    @property
    def roads(self) -> int:
        return 15 - self.roads_left

    @property
    def vp_cards(self) -> int:
        return sum(1 for c, _ in self.dev_cards if c == DevCard.VICTORY_POINT)

    def total(self) -> int:
        return sum(self.resources)


@dataclass(eq=False)
class GameState:
    board: Board
    config: GameConfig
    seed: int
    players: list[PlayerState]
    node_owner: list[int]
    node_level: list[int]
    edge_owner: list[int]
    robber: int
    deck: list[DevCard]
    rng: random.Random
    current: int = 0
    turn: int = 0
    longest_road: int = -1
    largest_army: int = -1
    log: list[str] = field(default_factory=list)
    # derived data keyed by purpose; dropped whenever pieces or the deck change
    cache: dict = field(default_factory=dict, repr=False)

    def emit(self, *fields) -> None:
        self.log.append(" ".join(map(str, fields)))

    def snapshot(self) -> tuple:
        """Hashable summary of everything except the rng and log."""
        return (
            self.board,
            self.config,
            self.seed,
            tuple(
                (
                    tuple(p.resources),
                    p.roads_left,
                    p.settlements_left,
                    p.cities_left,
                    tuple(p.dev_cards),
                    p.knights_played,
                    p.victory_points,
                    p.road_length,
                )
                for p in self.players
            ),
            tuple(self.node_owner),
            tuple(self.node_level),
            tuple(self.edge_owner),
            self.robber,
            tuple(self.deck),
            self.current,
            self.turn,
            self.longest_road,
            self.largest_army,
        )

    def fingerprint(self) -> tuple:
        return self.snapshot() + (self.rng.getstate(), tuple(self.log))


def cards(counts) -> str:
    return " ".join(map(str, counts))


# ---------------------------------------------------------------------------
# setup
# ---------------------------------------------------------------------------


def blank_state(seed: int, config: GameConfig | None = None) -> GameState:
    """Board and deck drawn from ``seed``; no pieces placed yet."""
    config = config or GameConfig()
    rng = random.Random(seed)
    board = random_board(rng)
    deck = list(DECK)
    rng.shuffle(deck)
    state = GameState(
        board=board,
        config=config,
        seed=seed,
        players=[PlayerState() for _ in range(N_PLAYERS)],
        node_owner=[-1] * len(T.node_coords),
        node_level=[0] * len(T.node_coords),
        edge_owner=[-1] * len(T.edge_nodes),
        robber=board.desert,
        deck=deck,
        rng=rng,
    )
    state.emit("GAME", seed, config.turn_cap, config.offer_cap, int(config.literal_costs))
    return state


def new_game(seed: int, config: GameConfig | None = None) -> GameState:
    state = blank_state(seed, config)
    order = list(range(N_PLAYERS)) + list(reversed(range(N_PLAYERS)))
    for i, p in enumerate(order):
        node = _best_site(state, free_sites(state))
        edge = _setup_road(state, node)
        place_setup(state, p, node, edge)
        if i >= N_PLAYERS:
            gained = [0] * 5
            for h in T.node_hexes[node]:
                terrain = state.board.terrain[h]
                if terrain != Terrain.DESERT:
                    gained[TERRAIN_RESOURCE[terrain]] += 1
            grant(state, p, gained)
    return state


def place_setup(state: GameState, p: int, node: int, edge: int) -> None:
    player = state.players[p]
    state.node_owner[node] = p
    state.node_level[node] = 1
    state.edge_owner[edge] = p
    player.settlements_left -= 1
    player.roads_left -= 1
    state.cache.clear()
    state.emit("SETUP", p, node, edge)
    _refresh_roads(state)
    _refresh_scores(state)


def grant(state: GameState, p: int, gained) -> None:
    for r in RESOURCES:
        state.players[p].resources[r] += gained[r]
    state.emit("GRANT", p, cards(gained))


def free_sites(state: GameState) -> list[int]:
    """Unoccupied nodes whose neighbours are all unoccupied."""
    owner = state.node_owner
    return [
        n
        for n in range(len(owner))
        if owner[n] < 0 and all(owner[m] < 0 for m in T.node_neighbors[n])
    ]


def _best_site(state: GameState, sites) -> int:
    return max(sites, key=lambda n: (state.board.node_pips(n), -n))


def _setup_road(state: GameState, node: int) -> int:
    sites = set(free_sites(state)) - {node}
    best, best_score = None, -1
    for e in T.node_edges[node]:
        far = T.other_end(e, node)
        score = max(
            (state.board.node_pips(m) for m in T.node_neighbors[far] if m in sites and m != node),
            default=0,
        )
        if score > best_score:
            best, best_score = e, score
    return best


# ---------------------------------------------------------------------------
# dice, production, robber
# ---------------------------------------------------------------------------


def roll_and_produce(state: GameState, rng: random.Random | None = None) -> tuple[GameState, int]:
    rng = rng or state.rng
    total = rng.randint(1, 6) + rng.randint(1, 6)
    p = state.current
    state.emit("ROLL", p, total)
    if total == 7:
        discard_half(state)
        move_robber(state, p, rng)
    else:
        produce(state, total)
    return state, total


def produce(state: GameState, total: int) -> None:
    board = state.board
    for h in range(N_HEXES):
        if board.numbers[h] != total or h == state.robber:
            continue
        res = TERRAIN_RESOURCE[board.terrain[h]]
        for n in T.hex_nodes[h]:
            owner = state.node_owner[n]
            if owner >= 0:
                amount = state.node_level[n]
                state.players[owner].resources[res] += amount
                state.emit("PRODUCE", owner, res.value, amount)


def discard_plan(hand) -> list[int]:
    """Cards to drop: half (rounded down) of a hand over 7, largest piles first."""
    hand = list(hand)
    dropped = [0] * 5
    total = sum(hand)
    if total <= 7:
        return dropped
    for _ in range(total // 2):
        r = max(RESOURCES, key=lambda k: (hand[k], -k))
        hand[r] -= 1
        dropped[r] += 1
    return dropped


def discard_half(state: GameState) -> None:
    for p, player in enumerate(state.players):
        dropped = discard_plan(player.resources)
        if any(dropped):
            for r in RESOURCES:
                player.resources[r] -= dropped[r]
            state.emit("DISCARD", p, cards(dropped))


def _hex_owners(state: GameState, h: int) -> set[int]:
    return {state.node_owner[n] for n in T.hex_nodes[h] if state.node_owner[n] >= 0}


def robber_target(state: GameState, p: int) -> tuple[int, int]:
    """Hex to block and victim to rob (-1 if nobody holds cards)."""
    players = state.players
    opponents = [q for q in range(N_PLAYERS) if q != p]
    leader = max(opponents, key=lambda q: (players[q].victory_points, -q))
    candidates = [h for h in range(N_HEXES) if h != state.robber and p not in _hex_owners(state, h)]
    if not candidates:
        candidates = [h for h in range(N_HEXES) if h != state.robber]

    def score(h):
        owners = _hex_owners(state, h)
        return (leader in owners, bool(owners), state.board.hex_pips(h), -h)

    hex_ = max(candidates, key=score)
    victims = [q for q in _hex_owners(state, hex_) if q != p and players[q].total() > 0]
    victim = max(victims, key=lambda q: (players[q].total(), -q)) if victims else -1
    return hex_, victim


def _steal(state: GameState, thief: int, victim: int, rng: random.Random) -> int:
    if victim < 0:
        return -1
    hand = state.players[victim].resources
    pick = rng.randrange(sum(hand))
    for r in RESOURCES:
        if pick < hand[r]:
            break
        pick -= hand[r]
    hand[r] -= 1
    state.players[thief].resources[r] += 1
    return r.value


def move_robber(state: GameState, p: int, rng: random.Random, event: str = "ROBBER") -> None:
    hex_, victim = robber_target(state, p)
    state.robber = hex_
    stolen = _steal(state, p, victim, rng)
    state.emit(event, p, hex_, victim, stolen)


def play_knight_if_useful(state: GameState, p: int) -> bool:
    """Play one knight bought on an earlier turn when it unblocks or wins the army."""
    player = state.players[p]
    idx = next(
        (i for i, (c, t) in enumerate(player.dev_cards) if c == DevCard.KNIGHT and t < state.turn),
        None,
    )
    if idx is None:
        return False
    blocked = p in _hex_owners(state, state.robber)
    holder = state.largest_army
    holder_knights = state.players[holder].knights_played if holder >= 0 else 2
    wins_army = holder != p and player.knights_played + 1 > max(holder_knights, 2)
    if not (blocked or wins_army):
        return False
    player.dev_cards.pop(idx)
    player.knights_played += 1
    move_robber(state, p, state.rng, event="KNIGHT")
    _refresh_army(state)
    _refresh_scores(state)
    return True


# ---------------------------------------------------------------------------
# building
# ---------------------------------------------------------------------------


def affordable(hand, cost) -> bool:
    return all(h >= c for h, c in zip(hand, cost))


def _network_nodes(state: GameState, p: int) -> set[int]:
    nodes = {n for e, o in enumerate(state.edge_owner) if o == p for n in T.edge_nodes[e]}
    nodes.update(n for n, o in enumerate(state.node_owner) if o == p)
    return nodes


def settlement_sites(state: GameState, p: int) -> list[int]:
    owner, edges = state.node_owner, state.edge_owner
    out = []
    for n in sorted(_network_nodes(state, p)):
        if owner[n] >= 0 or any(owner[m] >= 0 for m in T.node_neighbors[n]):
            continue
        if any(edges[e] == p for e in T.node_edges[n]):
            out.append(n)
    return out


def road_edges(state: GameState, p: int) -> list[int]:
    owner, edges = state.node_owner, state.edge_owner
    out = set()
    for n in _network_nodes(state, p):
        # cannot extend through an opponent's building
        if owner[n] >= 0 and owner[n] != p:
            continue
        out.update(e for e in T.node_edges[n] if edges[e] < 0)
    return sorted(out)


def city_sites(state: GameState, p: int) -> list[int]:
    return [
        n
        for n in range(len(state.node_owner))
        if state.node_owner[n] == p and state.node_level[n] == 1
    ]


def legal_builds(state: GameState, p: int) -> set[tuple[BuildKind, int | None]]:
    player = state.players[p]
    costs = state.config.costs
    hand = player.resources
    out: set[tuple[BuildKind, int | None]] = set()
    if player.roads_left and affordable(hand, costs[BuildKind.ROAD]):
        out.update((BuildKind.ROAD, e) for e in road_edges(state, p))
    if player.settlements_left and affordable(hand, costs[BuildKind.SETTLEMENT]):
        out.update((BuildKind.SETTLEMENT, n) for n in settlement_sites(state, p))
    if player.cities_left and affordable(hand, costs[BuildKind.CITY]):
        out.update((BuildKind.CITY, n) for n in city_sites(state, p))
    if state.deck and affordable(hand, costs[BuildKind.DEV_CARD]):
        out.add((BuildKind.DEV_CARD, None))
    return out


def _is_legal_build(state: GameState, p: int, kind: BuildKind, loc) -> bool:
    player = state.players[p]
    if not affordable(player.resources, state.config.costs[kind]):
        return False
    if kind == BuildKind.ROAD:
        return player.roads_left > 0 and loc in road_edges(state, p)
    if kind == BuildKind.SETTLEMENT:
        return player.settlements_left > 0 and loc in settlement_sites(state, p)
    if kind == BuildKind.CITY:
        return player.cities_left > 0 and loc in city_sites(state, p)
    return bool(state.deck) and loc is None


def apply_build(state: GameState, p: int, build: tuple[BuildKind, int | None]) -> GameState:
    kind, loc = build
    kind = BuildKind(kind)
    if not _is_legal_build(state, p, kind, loc):
        raise IllegalBuild(f"player {p} cannot build {kind.name} at {loc}")
    player = state.players[p]
    for r, c in enumerate(state.config.costs[kind]):
        player.resources[r] -= c
    state.cache.clear()
    if kind == BuildKind.DEV_CARD:
        card = state.deck.pop()
        player.dev_cards.append((card, state.turn))
        state.emit("BUYDEV", p, card.name)
    else:
        if kind == BuildKind.ROAD:
            state.edge_owner[loc] = p
            player.roads_left -= 1
        elif kind == BuildKind.SETTLEMENT:
            state.node_owner[loc] = p
            state.node_level[loc] = 1
            player.settlements_left -= 1
        else:
            state.node_level[loc] = 2
            player.cities_left -= 1
            player.settlements_left += 1
        state.emit("BUILD", p, kind.name, loc)
        if kind == BuildKind.ROAD:
            _refresh_roads(state, [p])
        elif kind == BuildKind.SETTLEMENT:
            # a new building can only cut roads running through its node
            _refresh_roads(state, {state.edge_owner[e] for e in T.node_edges[loc]} - {-1, p})
    _refresh_scores(state)
    return state


def bank_trade(state: GameState, p: int, give: Resource, receive: Resource) -> GameState:
    if give == receive:
        raise IllegalTrade("bank trade must exchange different resources")
    hand = state.players[p].resources
    if hand[give] < 4:
        raise InsufficientResources(f"player {p} holds {hand[give]} {Resource(give).name}, needs 4")
    hand[give] -= 4
    hand[receive] += 1
    state.emit("BANK", p, int(give), int(receive))
    return state


def execute_trade(state: GameState, proposer: int, acceptor: int, givables, receivable) -> GameState:
    """Move ``givables`` (a 5-count vector) to the acceptor and one ``receivable`` back."""
    if proposer == acceptor:
        raise IllegalTrade("cannot trade with oneself")
    if givables[receivable]:
        raise IllegalTrade("receivable among givables")
    give_hand = state.players[proposer].resources
    take_hand = state.players[acceptor].resources
    if not affordable(give_hand, givables):
        raise InsufficientResources(f"proposer {proposer} lacks the givables")
    if take_hand[receivable] < 1:
        raise InsufficientResources(f"acceptor {acceptor} lacks {Resource(receivable).name}")
    for r in RESOURCES:
        give_hand[r] -= givables[r]
        take_hand[r] += givables[r]
    take_hand[receivable] -= 1
    give_hand[receivable] += 1
    return state


# ---------------------------------------------------------------------------
# awards and scoring
# ---------------------------------------------------------------------------


def longest_road_length(state: GameState, p: int) -> int:
    edges = [e for e, o in enumerate(state.edge_owner) if o == p]
    if not edges:
        return 0
    owner = state.node_owner
    best = 0

    def walk(node, used):
        nonlocal best
        best = max(best, len(used))
        if len(used) and owner[node] >= 0 and owner[node] != p:
            return
        for e in T.node_edges[node]:
            if state.edge_owner[e] == p and e not in used:
                used.add(e)
                walk(T.other_end(e, node), used)
                used.remove(e)

    nodes = {n for e in edges for n in T.edge_nodes[e]}
    for n in nodes:
        walk(n, set())
    return best


def _refresh_roads(state: GameState, players=range(N_PLAYERS)) -> None:
    for p in players:
        state.players[p].road_length = longest_road_length(state, p)
    lengths = [pl.road_length for pl in state.players]
    holder = state.longest_road
    top = max(lengths)
    if holder >= 0 and lengths[holder] >= 5 and lengths[holder] == top:
        return
    leaders = [p for p in range(N_PLAYERS) if lengths[p] == top]
    state.longest_road = leaders[0] if top >= 5 and len(leaders) == 1 else -1


def _refresh_army(state: GameState) -> None:
    holder = state.largest_army
    threshold = state.players[holder].knights_played if holder >= 0 else 2
    for p, player in enumerate(state.players):
        if p != holder and player.knights_played > threshold:
            holder, threshold = p, player.knights_played
    state.largest_army = holder


def score(state: GameState, p: int) -> int:
    player = state.players[p]
    return (
        player.settlements
        + 2 * player.cities
        + player.vp_cards
        + 2 * (state.longest_road == p)
        + 2 * (state.largest_army == p)
    )


def _refresh_scores(state: GameState) -> None:
    for p, player in enumerate(state.players):
        player.victory_points = score(state, p)


class Outcome(NamedTuple):
    done: bool
    winner: int | None


def is_terminal(state: GameState) -> Outcome:
    """Winner is the first player (from the current seat) on 10+ points."""
    for k in range(N_PLAYERS):
        p = (state.current + k) % N_PLAYERS
        if state.players[p].victory_points >= WINNING_POINTS:
            return Outcome(True, p)
    return Outcome(state.turn >= state.config.turn_cap, None)


# ---------------------------------------------------------------------------
# built-in build heuristic and plan
# ---------------------------------------------------------------------------


class Plan(NamedTuple):
    kind: BuildKind
    need: tuple[int, ...]
    surplus: tuple[int, ...]


def _road_score(state: GameState, p: int, e: int, sites: set[int]) -> float:
    best = 0.0
    pips_ = state.board.node_pips
    for n in T.edge_nodes[e]:
        if n in sites:
            best = max(best, pips_(n))
        elif state.node_owner[n] < 0:
            for m in T.node_neighbors[n]:
                if m in sites:
                    best = max(best, 0.5 * pips_(m))
    return best


def best_road(state: GameState, p: int) -> int | None:
    candidates = road_edges(state, p)
    if not candidates:
        return None
    sites = set(free_sites(state))
    scored = [(_road_score(state, p, e, sites), -e) for e in candidates]
    top = max(scored)
    return -top[1] if top[0] > 0 else None


def _targets(state: GameState, p: int) -> list[tuple[BuildKind, int | None]]:
    """Build targets in priority order, each with its intended location."""
    key = ("targets", p)
    hit = state.cache.get(key)
    if hit is None:
        hit = state.cache[key] = _compute_targets(state, p)
    return hit


def _compute_targets(state: GameState, p: int) -> list[tuple[BuildKind, int | None]]:
    player = state.players[p]
    out = []
    if player.cities_left:
        own = city_sites(state, p)
        if own:
            out.append((BuildKind.CITY, _best_site(state, own)))
    if player.settlements_left:
        sites = settlement_sites(state, p)
        if sites:
            out.append((BuildKind.SETTLEMENT, _best_site(state, sites)))
        elif player.roads_left:
            e = best_road(state, p)
            if e is not None:
                out.append((BuildKind.ROAD, e))
    if not out and state.deck:
        out.append((BuildKind.DEV_CARD, None))
    return out


def _deficit(hand, cost) -> int:
    return sum(max(0, c - h) for h, c in zip(hand, cost))


def build_plan(state: GameState, p: int) -> Plan | None:
    """Closest-to-completion target; affordable targets reserve their cards first."""
    targets = _targets(state, p)
    if not targets:
        return None
    costs = state.config.costs
    hand = list(state.players[p].resources)
    kind = min((t[0] for t in targets), key=lambda k: _deficit(hand, costs[k]))
    if _deficit(hand, costs[kind]) == 0:
        hand = [h - c for h, c in zip(hand, costs[kind])]
        kind = min((t[0] for t in targets), key=lambda k: _deficit(hand, costs[k]))
    cost = costs[kind]
    need = tuple(max(0, c - h) for h, c in zip(hand, cost))
    surplus = tuple(max(0, h - c) for h, c in zip(hand, cost))
    return Plan(kind, need, surplus)


def build_phase(state: GameState, p: int) -> None:
    """Build greedily in priority order, bank-trading 4:1 for a last missing card."""
    costs = state.config.costs
    player = state.players[p]
    while True:
        if is_terminal(state).winner is not None:
            return
        hand = player.resources
        targets = _targets(state, p)
        done = False
        for kind, loc in targets:
            if affordable(hand, costs[kind]):
                apply_build(state, p, (kind, loc))
                done = True
                break
        if done:
            continue
        if targets and _bank_for(state, p, targets):
            continue
        if state.deck and player.total() >= 8 and affordable(hand, costs[BuildKind.DEV_CARD]):
            apply_build(state, p, (BuildKind.DEV_CARD, None))
            continue
        return


def _bank_for(state: GameState, p: int, targets) -> bool:
    costs = state.config.costs
    hand = state.players[p].resources
    for kind, _ in targets:
        cost = costs[kind]
        missing = [r for r in RESOURCES if hand[r] < cost[r]]
        if len(missing) != 1 or hand[missing[0]] + 1 < cost[missing[0]]:
            continue
        spare = [r for r in RESOURCES if r != missing[0] and hand[r] - cost[r] >= 4]
        if spare:
            give = max(spare, key=lambda r: (hand[r] - cost[r], -r))
            bank_trade(state, p, give, missing[0])
            return True
    return False
