import json
import subprocess
import sys

import pytest

from rsalearn.cli import build_parser, main

SMALL = {"schema_version": 1, "train": {"steps": 5}, "eval": {"games_per_constellation": 20}}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


def test_selftest_quick(capsys):
    assert run("selftest", "--quick") == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out


def test_selftest_corrupt_checkpoint(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "rsalearn-lexicon"}')
    assert run("selftest", "--quick", "--checkpoint", bad) != 0


def test_train_then_eval_is_reproducible(tmp_path, small_config):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run("train", "--config", small_config, "--seed", 7, "--out", out) == 0
        assert run("eval", "--config", small_config, "--seed", 7, "--out", out,
                   "--checkpoint", out / "lexicon.json") == 0
        outputs.append({p: (out / p).read_bytes() for p in
                        ("lexicon.json", "curve.csv", "train_config.json", "metrics.csv", "metrics.json")})
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0]["train_config.json"])["seed"] == 7


def test_table1_output(tmp_path, small_config):
    assert run("table1", "--config", small_config, "--out", tmp_path) == 0
    lines = (tmp_path / "table1.csv").read_text().splitlines()
    assert lines[0] == "distractors,S1,S3" and len(lines) == 4


def test_table2_needs_checkpoint(tmp_path, small_config, capsys):
    assert run("table2", "--config", small_config, "--out", tmp_path) == 2
    assert run("table2", "--config", small_config, "--out", tmp_path, "--checkpoint", tmp_path / "nope.json") == 2
    assert "checkpoint" in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({**SMALL, "train": {"stepz": 5}}))
    assert run("train", "--config", path, "--out", tmp_path) == 2
    assert "stepz" in capsys.readouterr().err
    path.write_text(json.dumps({**SMALL, "extra": 1}))
    assert run("train", "--config", path, "--out", tmp_path) == 2


def test_json_syntax_error_reports_line(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text('{\n  "schema_version": 1,\n  "seed": ,\n}\n')
    assert run("train", "--config", path, "--out", tmp_path) == 2
    assert ":3:" in capsys.readouterr().err


def test_schema_version_required(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"train": {"steps": 1}}))
    assert run("train", "--config", path, "--out", tmp_path) == 2


def test_help_lists_flags():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help()
        for flag in ("--config", "--seed", "--out", "--preset", "--corr", "--distractors", "--cost",
                     "--speaker-level", "--listener-level", "--checkpoint"):
            assert flag in text, (name, flag)


def test_fig4_writes_csv_and_svg(tmp_path, small_config):
    assert run("fig4", "--config", small_config, "--out", tmp_path, "--every", 5) == 0
    assert (tmp_path / "fig4.svg").read_text().startswith("<svg")
    assert len((tmp_path / "fig4.csv").read_text().splitlines()) == 3


def test_console_script_entry_point():
    result = subprocess.run([sys.executable, "-m", "rsalearn.cli", "--help"], capture_output=True, text=True)
    assert result.returncode == 0 and "selftest" in result.stdout
