"""End-to-end tests of the command line interface."""

import pytest

from qhtest.cli import main
from qhtest.harness import RESULT_HEADER

CONFIG_TEXT = """\
null_set = {45}
alt_set = (45,180]
truth_omega = 90
methods = aLHT+,LHT
budgets = 10,14
runs = 2
eps0 = 0.05
master_seed = 7
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "sweep.cfg"
    path.write_text(CONFIG_TEXT)
    return str(path)


def test_sweep_writes_csv(config_path, tmp_path, capsys):
    out = tmp_path / "rows.csv"
    assert main(["sweep", config_path, "-o", str(out)]) == 0
    assert "wrote 4 rows" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[0] == RESULT_HEADER
    assert len(lines) == 5
    assert lines[1].startswith("aLHT+,10,")
    assert all(line.endswith(",2,7") for line in lines[1:])


def test_sweep_seed_override_and_reproducibility(config_path, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["sweep", config_path, "-o", str(a), "--seed", "99"]) == 0
    assert main(["sweep", config_path, "-o", str(b), "--seed", "99"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert all(line.endswith(",2,99") for line in a.read_text().splitlines()[1:])


def test_single_sequential_with_trace(config_path, capsys):
    assert main(["single", config_path, "--method", "aLHT+", "--budget", "10",
                 "--trace"]) == 0
    out = capsys.readouterr().out
    assert "aLHT+ budget 10:" in out
    assert "round   1" in out
    assert "computational(n=1)" in out


def test_single_fixed_method(config_path, capsys):
    assert main(["single", config_path, "--method", "LHT", "--budget", "14"]) == 0
    out = capsys.readouterr().out
    assert "LHT budget 14:" in out
    assert "14 copies" in out


def test_single_unknown_method_fails_cleanly(config_path, capsys):
    assert main(["single", config_path, "--method", "xLHT", "--budget", "10"]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_fails_cleanly(tmp_path, capsys):
    missing = str(tmp_path / "absent.cfg")
    assert main(["sweep", missing, "-o", str(tmp_path / "out.csv")]) == 2
    assert "error:" in capsys.readouterr().err


def test_calibrate_prints_reference_settings(config_path, capsys):
    assert main(["calibrate", config_path]) == 0
    out = capsys.readouterr().out
    assert "reference null angle 45" in out
    assert "reference alternative angle 112.5" in out
    assert "aLHT+: first-block weight" in out
    assert "LHT: blocks 1, weight" in out


def test_verify_self_checks_pass(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4
    assert "FAIL" not in out
