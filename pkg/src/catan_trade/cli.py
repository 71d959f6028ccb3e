"""Command line entry point: ``catan-trade <command> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .agent import AgentConfig, DQNAgent
from .baselines import generate_synthetic_corpus, write_corpus
from .board import layout_table
from .harness import (
    ConfigError,
    PolicyFactory,
    TrainingConfig,
    cross_evaluate,
    load_config,
    run_tournament,
    run_training,
)

log = logging.getLogger("catan_trade")


def _train(args) -> int:
    cfg = load_config(Path(args.config)) if args.config else TrainingConfig()
    overrides = {k: v for k, v in (("opponent", args.opponent), ("budget", args.budget), ("seed", args.seed)) if v is not None}
    cfg = dataclasses.replace(cfg, **overrides)
    result = run_training(cfg, out_dir=args.output)
    log.info("trained %d experiences over %d games -> %s", result.agent.steps, result.games, args.output)
    return 0


def _tournament(args) -> int:
    seats = args.seats.split(",")
    report = run_tournament(seats, args.games, args.seed, log_dir=args.logs)
    text = report.csv()
    if args.output:
        Path(args.output).write_text(text)
        Path(args.output).with_suffix(".games.csv").write_text(report.games_csv())
    sys.stdout.write(text)
    return 0


def _cross_eval(args) -> int:
    root = Path(args.checkpoints)
    checkpoints = {k: root / f"drl_{k}" / "checkpoint" for k in ("ran", "heu", "sup")}
    for k, path in checkpoints.items():
        if not (path / "agent.json").is_file():
            raise FileNotFoundError(f"missing checkpoint for DRL^{k}: {path}")
    table, _ = cross_evaluate(checkpoints, args.games, args.seed)
    if args.output:
        Path(args.output).write_text(table)
    sys.stdout.write(table)
    return 0


def _gen_corpus(args) -> int:
    rows = generate_synthetic_corpus(args.games, args.seed)
    text = write_corpus(rows, args.output)
    if not args.output:
        sys.stdout.write(text)
    log.info("%d corpus rows", len(rows))
    return 0


def _serve(args) -> int:
    from .protocol import ProtocolServer

    if args.checkpoint:
        agent = DQNAgent.load(args.checkpoint, training=args.train)
    else:
        agent = DQNAgent(AgentConfig(), seed=args.seed)
    server = ProtocolServer(lambda: agent, args.host, args.port)
    log.info("listening on %s:%d", args.host, server.port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        if args.save:
            agent.save(args.save)
    return 0


def _layout(args) -> int:
    sys.stdout.write(layout_table())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catan-trade", description="Catan trading-dialogue learning testbed")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a learner against three baseline opponents")
    t.add_argument("--opponent", choices=("ran", "heu", "sup"))
    t.add_argument("--budget", type=int, help="training experiences (default 100000)")
    t.add_argument("--seed", type=int)
    t.add_argument("--config", help="INI file with [training] and [agent] sections")
    t.add_argument("--output", required=True, help="directory for checkpoint/ and curve.csv")
    t.set_defaults(func=_train)

    r = sub.add_parser("tournament", help="evaluate slot 0 against slots 1-3")
    r.add_argument("--seats", required=True, help="four comma separated specs: ran, heu, sup or drl:PATH")
    r.add_argument("--games", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--output", help="summary CSV path; per-game rows go next to it")
    r.add_argument("--logs", help="directory for per-game event logs")
    r.set_defaults(func=_tournament)

    c = sub.add_parser("cross-eval", help="the fifteen-row evaluation grid")
    c.add_argument("--checkpoints", required=True, help="directory holding drl_ran/, drl_heu/, drl_sup/")
    c.add_argument("--games", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output")
    c.set_defaults(func=_cross_eval)

    g = sub.add_parser("gen-corpus", help="synthetic supervised corpus from heuristic self-play")
    g.add_argument("--games", type=int, default=32)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output")
    g.set_defaults(func=_gen_corpus)

    s = sub.add_parser("serve", help="serve a learner over the line protocol")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=7655)
    s.add_argument("--checkpoint")
    s.add_argument("--train", action="store_true", help="keep learning from remote experience")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--save", help="write the agent here on shutdown")
    s.set_defaults(func=_serve)

    lay = sub.add_parser("layout", help="print the board index table")
    lay.set_defaults(func=_layout)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
