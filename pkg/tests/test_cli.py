"""CLI behaviour and golden-file determinism.

Golden outputs live in ``tests/golden/<case>/``. They were generated once
with ``CBSIM_REGEN_GOLDEN=1 pytest tests/test_cli.py`` and are frozen.
"""
import csv
import json
import math
import os
import shutil
from pathlib import Path

import pytest

from cbsim.cli import main

GOLDEN = Path(__file__).parent / "golden"
OUTPUTS = ("result.json", "result.csv", "config.json")

GOLDEN_CASES = {
    "run_noon2_echo": ["run", "noon2_echo.seq", "--noise", "paper.profile", "--seed", "1"],
    "wigner_fock1": ["wigner", "--fock", "1", "--alphas", "0:2.5:26", "--exact", "--seed", "0"],
    "swaptest_sampled": ["swaptest", "--psi", "fock:1", "--m", "1", "--sampled", "--seed", "5", "--phases", "12"],
    "calibrate": ["calibrate", "--seed", "0"],
    "coherent_sampled": ["coherent", "--sampled", "--seed", "3", "--phases", "8", "--n-max", "3"],
}


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


@pytest.mark.parametrize("case", sorted(GOLDEN_CASES))
def test_golden_outputs(case, tmp_path):
    code, out = run(tmp_path, *GOLDEN_CASES[case])
    assert code == 0
    target = GOLDEN / case
    if os.environ.get("CBSIM_REGEN_GOLDEN"):
        target.mkdir(parents=True, exist_ok=True)
        for name in OUTPUTS:
            shutil.copy(out / name, target / name)
    for name in OUTPUTS:
        assert (out / name).read_bytes() == (target / name).read_bytes(), f"{case}/{name}"


def test_rerun_is_byte_identical(tmp_path):
    argv = ["run", "noon2_echo", "--noise", "paper", "--seed", "9"]
    _, first = run(tmp_path / "1", *argv)
    _, second = run(tmp_path / "2", *argv)
    for name in OUTPUTS:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_wigner_origin_value(tmp_path):
    code, out = run(tmp_path, "wigner", "--fock", "1", "--alphas", "0:2.5:26", "--exact")
    assert code == 0
    rows = list(csv.DictReader((out / "result.csv").open()))
    assert len(rows) == 26
    assert float(rows[0]["W"]) == pytest.approx(-2 / math.pi, abs=1e-12)


def test_noon_noiseless(tmp_path, capsys):
    code, out = run(tmp_path, "noon", "--n", "2", "--noiseless")
    assert code == 0
    data = json.loads((out / "result.json").read_text())
    assert data["derived"]["F"] == pytest.approx(1.0, abs=1e-12)
    assert data["derived"]["F_Q"] == pytest.approx(4.0, abs=1e-9)
    assert data["schema_version"] == 1
    assert "F" in capsys.readouterr().out


def test_seed_is_recorded_when_drawn(tmp_path):
    code, out = run(tmp_path, "swaptest", "--psi", "fock:0", "--phases", "6")
    assert code == 0
    data = json.loads((out / "result.json").read_text())
    config = json.loads((out / "config.json").read_text())
    assert isinstance(config["seed"], int)
    assert data["config"] == config


def test_gnuplot_script(tmp_path):
    code, out = run(tmp_path, "calibrate", "--gnuplot")
    assert code == 0
    assert "plot 'result.csv'" in (out / "plot.gp").read_text()


def test_calibrate_points(tmp_path, capsys):
    code, _ = run(tmp_path, "calibrate", "--point", "a:1:5ms")
    assert code == 0
    assert "deph_mode_a = 400.0" in capsys.readouterr().out


def test_bad_flag_prints_usage(tmp_path, capsys):
    code, _ = run(tmp_path, "wigner", "--bogus")
    assert code == 2
    assert "usage:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv, fragment",
    [
        (["run", "missing/file.seq"], "missing/file.seq"),
        (["swaptest", "--noise", "nowhere.profile"], "nowhere.profile"),
        (["calibrate", "--shots", "0"], "--shots"),
    ],
)
def test_errors_are_one_line(tmp_path, capsys, argv, fragment):
    code, _ = run(tmp_path, *argv)
    assert code != 0
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1
    assert fragment in err


def test_parse_error_reports_location(tmp_path, capsys):
    bad = tmp_path / "bad.seq"
    bad.write_text("R pi 0\nFOO 1 2\n")
    code, _ = run(tmp_path, "run", str(bad))
    assert code == 1
    assert "line 2, column 1: unknown opcode FOO" in capsys.readouterr().err


def test_profile_file_error_names_path(tmp_path, capsys):
    prof = tmp_path / "broken.profile"
    prof.write_text("heat_a=fast\n")
    code, _ = run(tmp_path, "fredkin", "--noise", str(prof))
    assert code == 1
    assert "broken.profile" in capsys.readouterr().err
