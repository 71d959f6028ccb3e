from __future__ import annotations

import csv
import io

import pytest

from catan_trade.agent import AgentConfig, DQNAgent
from catan_trade.baselines import train_supervised
from catan_trade.harness import (
    CURVE_HEADER,
    SUMMARY_HEADER,
    ConfigError,
    PolicyFactory,
    TrainingConfig,
    audit,
    cross_evaluate,
    dump_config,
    game_seed,
    load_config,
    run_tournament,
    run_training,
    seat_permutation,
    wilson_interval,
)


@pytest.fixture(scope="module")
def factory():
    return PolicyFactory(forest=train_supervised(n_games=2, seed=1, n_trees=5))


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_seat_permutation_is_a_seeded_shuffle():
    perms = {seat_permutation(game_seed(0, g)) for g in range(200)}
    assert all(sorted(p) == [0, 1, 2, 3] for p in perms)
    assert len(perms) == 24
    assert seat_permutation(17) == seat_permutation(17)


def test_wilson_interval_reference_values():
    # textbook Wilson bounds for 8 of 10 and 0 of 100
    lo, hi = wilson_interval(8, 10)
    assert lo == pytest.approx(0.4902, abs=1e-4) and hi == pytest.approx(0.9433, abs=1e-4)
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi == pytest.approx(0.0370, abs=1e-4)


def test_single_game_report(factory):
    report = run_tournament(("heu", "ran", "ran", "ran"), 1, seed=3, factory=factory, keep_logs=True)
    assert report.n == 1 and report.label == "1 Heu vs 3 Ran"
    assert report.win_rate in (0.0, 1.0)
    table = rows(report.csv())
    assert table[0] == SUMMARY_HEADER and len(table) == 2
    assert audit(report) == []
    games = rows(report.games_csv())
    assert len(games) == 2


def test_tournament_is_reproducible(factory, tmp_path):
    a = run_tournament(("ran", "heu", "heu", "heu"), 6, seed=2, factory=factory, log_dir=tmp_path)
    b = run_tournament(("ran", "heu", "heu", "heu"), 6, seed=2, factory=factory)
    assert a.csv() == b.csv() and a.games_csv() == b.games_csv()
    assert len(list(tmp_path.glob("game_*.log"))) == 6


def test_tracked_slot_moves_between_seats(factory):
    report = run_tournament(("ran", "ran", "ran", "ran"), 40, seed=0, factory=factory)
    assert {g.seat for g in report.games} == {0, 1, 2, 3}


def test_audit_needs_logs(factory):
    report = run_tournament(("ran", "ran", "ran", "ran"), 1, factory=factory)
    with pytest.raises(ValueError):
        audit(report)


def test_bad_tournament_config(factory):
    with pytest.raises(ConfigError) as err:
        run_tournament(("ran", "ran", "ran"), 1, factory=factory)
    assert err.value.field == "seats"
    with pytest.raises(ConfigError):
        run_tournament(("ran", "ran", "ran", "bogus"), 1, factory=factory)
    with pytest.raises(ConfigError):
        run_tournament(("ran",) * 4, 0, factory=factory)
    with pytest.raises(FileNotFoundError):
        run_tournament(("drl:/nonexistent/ck", "ran", "ran", "ran"), 1, factory=factory)


def test_zero_budget_gives_header_only_curve(tmp_path, factory):
    result = run_training(TrainingConfig(budget=0), factory=factory, out_dir=tmp_path)
    assert result.curve == ",".join(CURVE_HEADER) + "\n"
    assert result.games == 0
    assert (tmp_path / "checkpoint" / "agent.json").is_file()


def test_short_training_run(tmp_path, factory):
    cfg = TrainingConfig(opponent="heu", budget=300, seed=4, agent=AgentConfig(batch_size=16))
    result = run_training(cfg, factory=factory, out_dir=tmp_path)
    table = rows(result.curve)
    assert table[0] == CURVE_HEADER and len(table) == result.games + 1
    assert int(table[-1][1]) == 300 == result.agent.steps
    assert float(table[1][4]) < 1.0
    assert result.agent.cfg.anneal_steps == 150
    loaded = DQNAgent.load(tmp_path / "checkpoint")
    assert loaded.steps == 300
    again = run_training(cfg, factory=factory)
    assert again.curve == result.curve


def test_training_config_errors():
    with pytest.raises(ConfigError) as err:
        TrainingConfig(opponent="human")
    assert err.value.field == "opponent"
    with pytest.raises(ConfigError):
        TrainingConfig(budget=-1)
    with pytest.raises(ConfigError):
        TrainingConfig(anneal_fraction=1.5)


def test_config_file_round_trip(tmp_path):
    cfg = TrainingConfig(opponent="sup", budget=500, seed=9,
                         agent=AgentConfig(target_sync=50, hidden=(20, 10), td_clip=1.0))
    text = dump_config(cfg)
    assert load_config(text) == cfg
    path = tmp_path / "train.ini"
    path.write_text(text)
    assert load_config(path) == cfg
    assert load_config("[training]\nbudget = 7\n").budget == 7


@pytest.mark.parametrize("text, field", [
    ("[training]\nbudget = lots\n", "training.budget"),
    ("[training]\ncolour = red\n", "training.colour"),
    ("[network]\nwidth = 3\n", "network"),
    ("[agent]\ngamma = 1.5\n", "agent"),
    ("[training]\nopponent = human\n", "opponent"),
])
def test_config_file_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as err:
        load_config(text)
    assert err.value.field == field


def test_cross_evaluation_table(factory):
    agents = {k: DQNAgent(AgentConfig(), seed=i) for i, k in enumerate(("ran", "heu", "sup"))}
    text, reports = cross_evaluate(agents, n_games=1, seed=0, factory=factory)
    table = rows(text)
    assert table[0] == SUMMARY_HEADER and len(table) == 16
    labels = [r[0] for r in table[1:]]
    assert labels[:6] == ["1 Ran vs 3 Heu", "1 Ran vs 3 Sup", "1 Heu vs 3 Ran",
                          "1 Heu vs 3 Heu", "1 Sup vs 3 Ran", "1 Sup vs 3 Heu"]
    assert labels[6] == "1 DRL^ran vs 3 Ran" and labels[-1] == "1 DRL^sup vs 3 Sup"
    with pytest.raises(FileNotFoundError):
        cross_evaluate({"ran": agents["ran"]}, n_games=1, factory=factory)
