"""Training runs, tournaments and the cross-evaluation grid.

Policy specs are short strings: ``ran``, ``heu``, ``sup`` or ``drl:PATH``
(a checkpoint directory). A tournament tracks the policy in slot 0 against
the three in slots 1-3; physical seats are a fresh random permutation per
game, recorded alongside the results.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import random
from dataclasses import dataclass, field
from pathlib import Path

from scipy.stats import binomtest

from .agent import AgentConfig, DQNAgent, DRLPolicy
from .baselines import HeuristicPolicy, RandomPolicy, SupervisedPolicy, train_supervised
from .core import N_PLAYERS, GameConfig
from .eventlog import GameMetrics, metrics_from_log
from .forest import RandomForest
from .loop import GameResult, Policy, play_game

METRICS = (
    "win_rate",
    "victory_points",
    "offers_made",
    "successful_offers",
    "total_trades",
    "pieces_built",
    "cards_bought",
    "turns",
)
LABELS = {"ran": "Ran", "heu": "Heu", "sup": "Sup"}
BASELINE_ROWS = (("ran", "heu"), ("ran", "sup"), ("heu", "ran"), ("heu", "heu"), ("sup", "ran"), ("sup", "heu"))
OPPONENTS = ("ran", "heu", "sup")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""

    def __init__(self, field_name: str, problem: str):
        super().__init__(f"{field_name}: {problem}")
        self.field = field_name


def game_seed(seed: int, game: int) -> int:
    return seed * 1_000_003 + game


def seat_permutation(gseed: int) -> tuple[int, ...]:
    """``perm[slot]`` is the physical seat of logical slot ``slot``."""
    return tuple(random.Random(gseed ^ 0x5EA7).sample(range(N_PLAYERS), N_PLAYERS))


# ---------------------------------------------------------------------------
# policy construction
# ---------------------------------------------------------------------------


class PolicyFactory:
    """Builds fresh per-game policy objects from spec strings.

    Heavy resources (the forest, loaded checkpoints) are built once and
    shared; everything mutable is per game.
    """

    def __init__(self, forest: RandomForest | None = None, sup_games: int = 32, sup_seed: int = 0):
        self._forest = forest
        self.sup_games = sup_games
        self.sup_seed = sup_seed
        self.agents: dict[str, DQNAgent] = {}

    @property
    def forest(self) -> RandomForest:
        if self._forest is None:
            self._forest = train_supervised(self.sup_games, self.sup_seed)
        return self._forest

    def register(self, name: str, agent: DQNAgent) -> str:
        """Make an in-memory agent available as spec ``drl:NAME``."""
        spec = f"drl:{name}"
        self.agents[spec] = agent.frozen()
        return spec

    def validate(self, spec: str) -> None:
        if spec in LABELS or spec in self.agents:
            return
        if spec.startswith("drl:"):
            path = Path(spec[4:])
            if not (path / "agent.json").is_file():
                raise FileNotFoundError(f"missing checkpoint {path}")
            return
        raise ConfigError("policy", f"unknown policy spec {spec!r}")

    def agent(self, spec: str) -> DQNAgent:
        if spec not in self.agents:
            self.validate(spec)
            self.agents[spec] = DQNAgent.load(spec[4:])
        return self.agents[spec]

    def make(self, spec: str, gseed: int, seat: int) -> Policy:
        if spec == "ran":
            return RandomPolicy(gseed * N_PLAYERS + seat)
        if spec == "heu":
            return HeuristicPolicy()
        if spec == "sup":
            return SupervisedPolicy(self.forest)
        return DRLPolicy(self.agent(spec))


def label(spec: str, trained_vs: str | None = None) -> str:
    if spec in LABELS:
        return LABELS[spec]
    return f"DRL^{trained_vs}" if trained_vs else "DRL"


# ---------------------------------------------------------------------------
# tournaments
# ---------------------------------------------------------------------------


@dataclass
class GameRecord:
    game: int
    seed: int
    permutation: tuple[int, ...]
    metrics: GameMetrics
    log: list[str] | None = None

    @property
    def seat(self) -> int:
        return self.permutation[0]


def wilson_interval(wins: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(wins, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class TournamentReport:
    label: str
    seats: tuple[str, ...]
    seed: int
    games: list[GameRecord]

    @property
    def n(self) -> int:
        return len(self.games)

    @property
    def wins(self) -> int:
        return sum(g.metrics.won for g in self.games)

    @property
    def win_rate(self) -> float:
        return self.wins / self.n

    def interval(self, confidence: float = 0.95) -> tuple[float, float]:
        return wilson_interval(self.wins, self.n, confidence)

    def averages(self) -> dict[str, float]:
        out = {"win_rate": 100.0 * self.win_rate}
        for name in METRICS[1:]:
            out[name] = sum(getattr(g.metrics, name) for g in self.games) / self.n
        return out

    def accept_rate(self) -> float:
        replies = sum(g.metrics.replies for g in self.games)
        return sum(g.metrics.accepts for g in self.games) / replies if replies else 0.0

    def summary_row(self) -> list[str]:
        avg = self.averages()
        low, high = self.interval()
        return (
            [self.label, str(self.n)]
            + [f"{avg[m]:.4f}" for m in METRICS]
            + [f"{100 * low:.4f}", f"{100 * high:.4f}", f"{self.accept_rate():.4f}"]
        )

    def games_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        fields = [f.name for f in dataclasses.fields(GameMetrics)]
        w.writerow(["game", "seed", "permutation", "seat", *fields])
        for g in self.games:
            m = dataclasses.asdict(g.metrics)
            m["won"] = int(m["won"])
            w.writerow([g.game, g.seed, " ".join(map(str, g.permutation)), g.seat, *(m[f] for f in fields)])
        return out.getvalue()

    def csv(self) -> str:
        return summary_csv([self])


SUMMARY_HEADER = ["configuration", "games", *METRICS, "win_ci_low", "win_ci_high", "accept_rate"]


def summary_csv(reports) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for r in reports:
        w.writerow(r.summary_row())
    return out.getvalue()


def _metrics(result: GameResult, seat: int) -> GameMetrics:
    t = result.tallies[seat]
    return GameMetrics(
        won=result.winner == seat,
        victory_points=result.points[seat],
        offers_made=t.offers,
        successful_offers=t.successful,
        total_trades=t.trades,
        pieces_built=t.built,
        cards_bought=t.bought,
        turns=result.turns,
        replies=t.replies,
        accepts=t.accepts,
    )


def run_tournament(
    seats,
    n_games: int,
    seed: int = 0,
    factory: PolicyFactory | None = None,
    config: GameConfig | None = None,
    name: str | None = None,
    keep_logs: bool = False,
    log_dir=None,
) -> TournamentReport:
    """Play ``n_games`` with slot 0 tracked; agents play greedily."""
    seats = tuple(seats)
    if len(seats) != N_PLAYERS:
        raise ConfigError("seats", "exactly four policy specs are required")
    if n_games < 1:
        raise ConfigError("n_games", "must be at least 1")
    factory = factory or PolicyFactory()
    for spec in seats:
        factory.validate(spec)
    if log_dir is not None:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
    records = []
    for g in range(n_games):
        gseed = game_seed(seed, g)
        perm = seat_permutation(gseed)
        policies: list[Policy] = [None] * N_PLAYERS  # type: ignore[list-item]
        for slot, spec in enumerate(seats):
            policies[perm[slot]] = factory.make(spec, gseed, perm[slot])
        result = play_game(gseed, policies, config)
        if log_dir is not None:
            Path(log_dir, f"game_{g:06d}.log").write_text("\n".join(result.log) + "\n")
        records.append(GameRecord(g, gseed, perm, _metrics(result, perm[0]), result.log if keep_logs else None))
    default = f"1 {label(seats[0])} vs 3 {label(seats[1])}" if len(set(seats[1:])) == 1 else "custom"
    return TournamentReport(name or default, seats, seed, records)


def audit(report: TournamentReport) -> list[str]:
    """Compare stored per-game metrics with a recomputation from the logs."""
    problems = []
    for g in report.games:
        if g.log is None:
            raise ValueError("report was produced without keep_logs")
        again = metrics_from_log(g.log, g.seat)
        if again != g.metrics:
            problems.append(f"game {g.game}: stored {g.metrics} != log {again}")
    return problems


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


@dataclass
class TrainingConfig:
    opponent: str = "ran"
    budget: int = 100_000
    seed: int = 0
    agent: AgentConfig = field(default_factory=AgentConfig)
    window: int = 100
    # anneal epsilon over this share of the budget; None keeps agent.anneal_steps
    anneal_fraction: float | None = 0.5

    def __post_init__(self):
        if self.opponent not in OPPONENTS:
            raise ConfigError("opponent", f"expected one of {', '.join(OPPONENTS)}, got {self.opponent!r}")
        if self.budget < 0:
            raise ConfigError("budget", "must be non-negative")
        if self.window < 1:
            raise ConfigError("window", "must be at least 1")
        if self.anneal_fraction is not None and not 0 <= self.anneal_fraction <= 1:
            raise ConfigError("anneal_fraction", "must lie in [0, 1]")

    def agent_config(self) -> AgentConfig:
        if self.anneal_fraction is None:
            return self.agent
        return dataclasses.replace(self.agent, anneal_steps=int(self.budget * self.anneal_fraction))


CURVE_HEADER = ["games", "experiences", "avg_reward", "win_rate_window", "epsilon"]


@dataclass
class TrainingResult:
    agent: DQNAgent
    curve: str
    games: int


def run_training(cfg: TrainingConfig, factory: PolicyFactory | None = None, out_dir=None) -> TrainingResult:
    """Train one learner against three copies of ``cfg.opponent``.

    Each curve row follows one training game and reports the mean per-decision
    reward and the win rate over the last ``cfg.window`` games.
    """
    factory = factory or PolicyFactory()
    agent = DQNAgent(cfg.agent_config(), seed=cfg.seed)
    agent.budget = cfg.budget
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    rewards: list[float] = []
    wins: list[int] = []
    games = 0
    while agent.steps < cfg.budget:
        gseed = game_seed(cfg.seed + 7_919, games)
        perm = seat_permutation(gseed)
        learner = DRLPolicy(agent)
        policies: list[Policy] = [None] * N_PLAYERS  # type: ignore[list-item]
        policies[perm[0]] = learner
        for slot in range(1, N_PLAYERS):
            policies[perm[slot]] = factory.make(cfg.opponent, gseed, perm[slot])
        result = play_game(gseed, policies)
        games += 1
        rewards.append(sum(learner.rewards) / len(learner.rewards) if learner.rewards else 0.0)
        wins.append(int(result.winner == perm[0]))
        recent_r, recent_w = rewards[-cfg.window :], wins[-cfg.window :]
        w.writerow([
            games,
            min(agent.steps, cfg.budget),
            f"{sum(recent_r) / len(recent_r):.6f}",
            f"{sum(recent_w) / len(recent_w):.6f}",
            f"{agent.epsilon():.6f}",
        ])
    curve = out.getvalue()
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        agent.save(out_dir / "checkpoint")
        (out_dir / "curve.csv").write_text(curve)
    return TrainingResult(agent, curve, games)


# ---------------------------------------------------------------------------
# cross-evaluation
# ---------------------------------------------------------------------------


def cross_evaluate(
    checkpoints: dict[str, str | Path | DQNAgent],
    n_games: int = 1000,
    seed: int = 0,
    factory: PolicyFactory | None = None,
) -> tuple[str, list[TournamentReport]]:
    """All fifteen configurations: six baseline rows then nine learner rows.

    ``checkpoints`` maps the training opponent (ran, heu, sup) to a checkpoint
    directory or an in-memory agent.
    """
    missing = [k for k in OPPONENTS if k not in checkpoints]
    if missing:
        raise FileNotFoundError(f"missing checkpoint for DRL^{', DRL^'.join(missing)}")
    factory = factory or PolicyFactory()
    specs = {}
    for trained, source in checkpoints.items():
        if isinstance(source, DQNAgent):
            specs[trained] = factory.register(trained, source)
        else:
            specs[trained] = f"drl:{source}"
            factory.validate(specs[trained])
    reports = []
    for me, opp in BASELINE_ROWS:
        reports.append(run_tournament((me, opp, opp, opp), n_games, seed, factory,
                                      name=f"1 {LABELS[me]} vs 3 {LABELS[opp]}"))
    for trained in OPPONENTS:
        for opp in OPPONENTS:
            reports.append(run_tournament((specs[trained], opp, opp, opp), n_games, seed, factory,
                                          name=f"1 DRL^{trained} vs 3 {LABELS[opp]}"))
    return summary_csv(reports), reports


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------


def _coerce(name: str, raw: str, default):
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float) or (default is None and name.rsplit(".", 1)[-1] in ("td_clip", "anneal_fraction")):
            return None if raw.strip().lower() in ("", "none") else float(raw)
        if isinstance(default, tuple):
            return tuple(type(default[0])(v) for v in raw.replace(",", " ").split())
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {raw!r}") from exc


def _section(parser, section: str, cls, base):
    values = {}
    known = {f.name: f for f in dataclasses.fields(cls)}
    if not parser.has_section(section):
        return values
    for key, raw in parser.items(section):
        if key not in known or key == "agent":
            raise ConfigError(f"{section}.{key}", "unknown key")
        values[key] = _coerce(f"{section}.{key}", raw, getattr(base, key))
    return values


def load_config(source) -> TrainingConfig:
    """Read an INI file with optional [training] and [agent] sections.

    Keys are the field names of ``TrainingConfig`` and ``AgentConfig``; tuples
    are written as space or comma separated numbers.
    """
    parser = configparser.ConfigParser()
    text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else source
    parser.read_string(text)
    for section in parser.sections():
        if section not in ("training", "agent"):
            raise ConfigError(section, "unknown section")
    base = TrainingConfig()
    try:
        agent = AgentConfig(**_section(parser, "agent", AgentConfig, base.agent))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("agent", str(exc)) from exc
    return TrainingConfig(agent=agent, **_section(parser, "training", TrainingConfig, base))


def dump_config(cfg: TrainingConfig) -> str:
    parser = configparser.ConfigParser()
    training = {f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg) if f.name != "agent"}
    parser["training"] = {k: str(v) for k, v in training.items()}
    agent = dataclasses.asdict(cfg.agent)
    parser["agent"] = {k: " ".join(map(str, v)) if isinstance(v, (tuple, list)) else str(v) for k, v in agent.items()}
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()
