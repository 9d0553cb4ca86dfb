import subprocess
import sys

import pytest

from driftclass.cli import main

CFG = """experiment = margin
n_paths = 500
n_steps = 50
"""


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["unknown", "--config", "x"])
    assert err.value.code == 2
    assert main(["margin", "--config", str(tmp_path / "missing.cfg")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment = margin\nn_pathz = 3\n")
    assert main(["margin", "--config", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    good = tmp_path / "good.cfg"
    good.write_text(CFG)
    assert main(["rates", "--config", str(good)]) == 2
    assert main(["margin", "--config", str(good), "--threads", "0"]) == 2


def test_run_writes_outputs(tmp_path):
    cfg = tmp_path / "m.cfg"
    cfg.write_text(CFG)
    out = tmp_path / "out"
    code = main(["margin", "--config", str(cfg), "--seed", "3", "--out", str(out), "--threads", "1"])
    assert code in (0, 1)
    assert (out / "margin.csv").exists() and (out / "margin_verdicts.csv").exists()
    first = (out / "margin.csv").read_bytes()
    main(["margin", "--config", str(cfg), "--seed", "3", "--out", str(out)])
    assert (out / "margin.csv").read_bytes() == first
    main(["margin", "--config", str(cfg), "--seed", "4", "--out", str(out)])
    assert (out / "margin.csv").read_bytes() != first


def test_falsified_verdict_exit_code(tmp_path, monkeypatch):
    from driftclass import cli
    from driftclass.harness import ExperimentResult, Verdict

    def fake(cfg):
        return ExperimentResult("margin", {}, (Verdict("margin_monotone", "fail", "injected"),))

    monkeypatch.setattr(cli, "run_experiment", fake)
    cfg = tmp_path / "m.cfg"
    cfg.write_text(CFG)
    assert main(["margin", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_console_script_env_threads(tmp_path):
    cfg = tmp_path / "m.cfg"
    cfg.write_text(CFG)
    env = {"DRIFTCLASS_THREADS": "2", "PATH": "/usr/local/bin:/usr/bin:/bin"}
    proc = subprocess.run(
        [sys.executable, "-m", "driftclass.cli", "margin", "--config", str(cfg), "--out", str(tmp_path / "o")],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode in (0, 1), proc.stderr
    assert "wrote" in proc.stdout
    proc = subprocess.run(
        [sys.executable, "-m", "driftclass.cli", "margin", "--config", str(cfg)],
        capture_output=True, text=True, env={**env, "DRIFTCLASS_THREADS": "zero"},
    )
    assert proc.returncode == 2
