"""Command line interface: flag parsing, config files, exit codes."""
from __future__ import annotations

import csv
import io
import json
import shutil

import pytest

from cdma_nash.cli import _parse_l, build_parser, main
from cdma_nash.harness import RECORD_FIELDS

FAST = ["--K", "4", "--N", "32", "--L", "2", "--sigma2", "0.1",
        "--trials", "1", "--seed", "7", "--filter", "mf"]


def test_parse_l_forms():
    assert _parse_l("8") == 8
    assert _parse_l("1,2") == (1, 2)
    assert _parse_l(" 1, 2 ,4") == (1, 2, 4)
    with pytest.raises(ValueError):
        _parse_l(" , ")


def test_success_emits_csv(capsys):
    code = main(["--experiment", "theory-vs-sim", *FAST])
    assert code == 0
    out = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(out)))
    assert tuple(rows[0].keys()) == RECORD_FIELDS
    assert rows[0]["experiment"] == "theory-vs-sim"
    assert len(rows) == 5  # aggregate + 4 users


def test_json_output_parses(capsys):
    code = main(["--experiment", "theory-vs-sim", "--format", "json", *FAST])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    recs = [json.loads(line) for line in lines]
    assert all(tuple(r.keys()) == RECORD_FIELDS for r in recs)


def test_output_file(tmp_path, capsys):
    target = tmp_path / "records.csv"
    code = main(["--experiment", "theory-vs-sim", "--output", str(target),
                 *FAST])
    assert code == 0
    assert capsys.readouterr().out == ""
    assert target.exists()
    with open(target, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 5


def test_missing_experiment_is_usage_error(capsys):
    assert main(FAST) == 2
    assert "experiment" in capsys.readouterr().err


def test_bad_experiment_choice_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["--experiment", "bogus"])
    assert exc.value.code == 2


def test_no_workers_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--experiment", "theory-vs-sim", "--workers", "2"])
    assert exc.value.code == 2


def test_l_sweep_flag(capsys):
    code = main(["--experiment", "utility-vs-L", "--K", "4", "--N", "32",
                 "--L", "1,2", "--sigma2", "0.1", "--trials", "1",
                 "--seed", "7", "--filter", "mmse"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert {row["L"] for row in rows} == {"1", "2"}


def test_config_file_supplies_values(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# fast smoke experiment\n"
        "experiment = theory-vs-sim\n"
        "K = 4\n"
        "N = 32\n"
        "L = 2\n"
        "sigma2 = 0.1\n"
        "trials = 2\n"
        "seed = 7\n"
        "filter = mf\n"
        "workers = 2\n")
    code = main(["--config", str(cfg)])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 10


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("experiment = theory-vs-sim\nK = 4\nN = 32\nL = 2\n"
                   "sigma2 = 0.1\ntrials = 3\nseed = 7\nfilter = mf\n")
    code = main(["--config", str(cfg), "--trials", "1"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert {row["trial"] for row in rows} == {"0"}


def test_config_file_errors(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "absent.cfg")]) == 2
    assert "cannot read config file" in capsys.readouterr().err

    bad_key = tmp_path / "bad_key.cfg"
    bad_key.write_text("experiment = theory-vs-sim\ncolour = blue\n")
    assert main(["--config", str(bad_key)]) == 2
    assert "unknown config key" in capsys.readouterr().err

    bad_value = tmp_path / "bad_value.cfg"
    bad_value.write_text("experiment = theory-vs-sim\nK = many\n")
    assert main(["--config", str(bad_value)]) == 2
    assert "bad value" in capsys.readouterr().err

    bad_line = tmp_path / "bad_line.cfg"
    bad_line.write_text("experiment theory-vs-sim\n")
    assert main(["--config", str(bad_line)]) == 2
    assert "key=value" in capsys.readouterr().err


def test_runtime_failure_exits_one(tmp_path, capsys):
    missing_dir = tmp_path / "no-such-dir" / "records.csv"
    code = main(["--experiment", "theory-vs-sim", "--output",
                 str(missing_dir), *FAST])
    assert code == 1
    assert "cannot write records" in capsys.readouterr().err


def test_parser_metadata():
    parser = build_parser()
    assert parser.prog == "simulate"
    text = parser.format_help()
    for flag in ("--experiment", "--alpha-sweep", "--config", "--ordering"):
        assert flag in text


def test_console_script_installed():
    assert shutil.which("simulate") is not None
