from __future__ import annotations

import pytest

from catan_trade.cli import build_parser, main


def test_layout(capsys):
    assert main(["layout"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("kind")


def test_tournament_writes_csv(tmp_path, capsys):
    out = tmp_path / "report.csv"
    assert main(["tournament", "--seats", "heu,ran,ran,ran", "--games", "2", "--output", str(out),
                 "--logs", str(tmp_path / "logs")]) == 0
    text = out.read_text()
    assert text.startswith("configuration,games,win_rate") and "1 Heu vs 3 Ran,2," in text
    assert capsys.readouterr().out == text
    assert (tmp_path / "report.games.csv").is_file()
    assert len(list((tmp_path / "logs").iterdir())) == 2


def test_train_then_tournament(tmp_path):
    cfg = tmp_path / "t.ini"
    cfg.write_text("[training]\nbudget = 120\n[agent]\nbatch_size = 8\n")
    assert main(["train", "--config", str(cfg), "--seed", "2", "--output", str(tmp_path / "run")]) == 0
    assert (tmp_path / "run" / "curve.csv").is_file()
    ck = tmp_path / "run" / "checkpoint"
    assert main(["tournament", "--seats", f"drl:{ck},ran,ran,ran", "--games", "1"]) == 0


def test_gen_corpus(tmp_path):
    out = tmp_path / "corpus.csv"
    assert main(["gen-corpus", "--games", "1", "--output", str(out)]) == 0
    assert out.read_text().startswith("clay,ore,sheep")


def test_errors_exit_with_two(tmp_path, capsys):
    assert main(["tournament", "--seats", "ran,ran,ran,nope", "--games", "1"]) == 2
    assert "policy" in capsys.readouterr().err
    assert main(["cross-eval", "--checkpoints", str(tmp_path), "--games", "1"]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[training]\nbudget = many\n")
    assert main(["train", "--config", str(bad), "--output", str(tmp_path / "x")]) == 2
    assert "training.budget" in capsys.readouterr().err


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
