"""Command-line surface and exit codes."""
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from delaynse.cli import main
from delaynse.config import default_config_text
from delaynse.io import read_checkpoint

QUICK = """[domain]
N = 8
[delay]
mu = 0.004
dt = 0.001
T = 0.012
[output]
checkpoint = run.dnse
diagnostics = run.csv
store_every = 4
"""


@pytest.fixture
def quick(tmp_path):
    p = tmp_path / "quick.cfg"
    p.write_text(QUICK)
    return p


def test_simulate_writes_outputs(quick, capsys):
    assert main(["simulate", str(quick)]) == 0
    out = capsys.readouterr().out
    recs = read_checkpoint(quick.parent / "run.dnse")
    assert len(recs) == 4 and recs[-1].t == pytest.approx(0.012)
    assert (quick.parent / "run.csv").read_text().count("\n") == 5
    assert "t = 0.012" in out


def test_paths_relative_to_config(quick, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path.parent)
    assert main(["simulate", str(quick)]) == 0
    assert (quick.parent / "run.dnse").exists()


def test_simulate_nse_keeps_delayed_outputs(quick):
    assert main(["simulate-nse", str(quick)]) == 0
    assert (quick.parent / "run_nse.dnse").exists()
    assert not (quick.parent / "run.dnse").exists()


def test_bad_config_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("[physics]\nalpha = 0.4\n")
    assert main(["simulate", str(p)]) == 2
    assert "alpha must exceed 1/2" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path, capsys):
    assert main(["verify", str(tmp_path / "nope.cfg")]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_blowup_exit_3(tmp_path, capsys):
    p = tmp_path / "hot.cfg"
    p.write_text("[domain]\nN = 8\n[delay]\nT = 0.5\n[fields]\nu0 = random slope=0 amplitude=5000\n")
    assert main(["simulate-nse", str(p)]) == 3
    assert "blow-up" in capsys.readouterr().err


def test_verify_exit_codes(quick, capsys):
    assert main(["verify", str(quick)]) == 0
    assert capsys.readouterr().out.startswith("name\tanchor")
    assert main(["verify", str(quick), "--sabotage", "leray"]) == 1
    assert "divergence_free" in capsys.readouterr().err


def test_inspect(quick, capsys):
    main(["simulate", str(quick)])
    log = capsys.readouterr().out.strip().split("\n")[-1]
    assert main(["inspect", str(quick.parent / "run.dnse")]) == 0
    out = capsys.readouterr().out
    assert "N = 8" in out and "L = 6.28318530717958" in out
    # the final norm printed by simulate is reproduced
    assert log.split("div_max")[0].strip() in out


def test_inspect_bad_file(tmp_path, capsys):
    p = tmp_path / "junk.dnse"
    p.write_bytes(b"JUNKJUNKJUNK")
    assert main(["inspect", str(p)]) == 2
    assert "offset 0" in capsys.readouterr().err


def test_mu_sweep(quick, capsys, tmp_path):
    assert main(["mu-sweep", str(quick), "--mus", "0.004,0.002,0.001"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0].startswith("mu,E2") and len(lines) == 4
    assert main(["mu-sweep", str(quick), "--mus", "0.0015"]) == 2


def test_dt_study(quick, capsys):
    assert main(["dt-study", str(quick), "--dts", "0.004,0.002,0.001", "--problem", "decay"]) == 0
    assert "state order: exact" in capsys.readouterr().out
    assert main(["dt-study", str(quick), "--dts", "0.004,0.003,0.001"]) == 2


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["simulate"])
    assert e.value.code == 2


@pytest.mark.skipif(shutil.which("delaynse") is None, reason="console script not installed")
def test_console_script(tmp_path):
    (tmp_path / "default.cfg").write_text(default_config_text())
    r = subprocess.run(["delaynse", "inspect", str(tmp_path / "none.dnse")], capture_output=True, text=True)
    assert r.returncode == 2


def test_module_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "delaynse.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "simulate-nse" in r.stdout
