import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from driftclass.exceptions import ConfigError, InsufficientDataError
from driftclass.harness import (
    RateReport, Table, emit_csv, expected_zero_drift_bias, fit_slope, halving_verdict,
    parse_config, run_experiment, run_rate_experiment, run_tail_experiment, write_outputs,
)
from driftclass.kernels import build_legendre_kernel

TINY_RATES = """
experiment = rates
N = 32, 64, 128
replicates = 2
n_test = 200
n_steps = 100
pilot_paths = 500
grid = 51
"""


def test_minimal_config_defaults():
    cfg = parse_config("experiment = rates")
    assert cfg.t0 == pytest.approx(0.1)
    assert cfg.n_steps == 500 and cfg.grid == 201
    assert cfg.N == (64, 128, 256, 512, 1024, 2048, 4096)
    assert cfg.replicates == 50 and cfg.n_test == 4000
    assert cfg.model == "bump" and cfg.m == "pilot"
    assert cfg.order == 2


def test_config_comments_and_values():
    cfg = parse_config("# header\nexperiment = tails  # trailing\nT = 2\ndelta = rule, 0, 1e6\nclass = 0\n")
    assert cfg.t0 == pytest.approx(0.2)
    assert cfg.delta == ("rule", 0.0, 1e6)
    assert cfg.target_class == 0


def test_two_point_campaign_accepted():
    cfg = parse_config("experiment = rates\nN = 64, 128")
    assert cfg.N == (64, 128)


@pytest.mark.parametrize("text,key,line", [
    ("experiment = rates\nbetaa = 1", "betaa", 2),
    ("experiment = rates\nbeta = one", "beta", 2),
    ("experiment = rates\n\nN = 128, 64", "N", 3),
    ("experiment = rates\nN = 64\nN = 128", "N", 3),
    ("experiment = floor\np1 = 0.3", "p1", 2),
    ("experiment = tails\nreplicates = 10", "replicates", 2),
    ("experiment = margin\neps = 0.2", "eps", 2),
    ("experiment = rates\nm = -1", "m", 2),
    ("experiment = rates\nbandwidth =", "bandwidth", 2),
    ("experiment = bias\nmodel = bump", "model", 2),
    ("experiment = nonsense", "experiment", 1),
])
def test_config_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key and err.value.line == line
    assert f"line {line}" in str(err.value) and key in str(err.value)


def test_config_missing_experiment():
    with pytest.raises(ConfigError) as err:
        parse_config("N = 64")
    assert err.value.key == "experiment"
    assert parse_config("N = 64, 128", experiment="rates").experiment == "rates"
    with pytest.raises(ConfigError):
        parse_config("experiment = rates", experiment="tails")


def test_config_malformed_line():
    with pytest.raises(ConfigError) as err:
        parse_config("experiment = rates\njust words")
    assert err.value.line == 2


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=12))
def test_unknown_keys_rejected(key):
    from driftclass.harness import config_fields
    if key in config_fields():
        return
    with pytest.raises(ConfigError):
        parse_config(f"experiment = rates\n{key} = 1")


def test_slope_exact_lines():
    assert fit_slope([(10, 1), (100, 0.1), (1000, 0.01)])[0] == pytest.approx(-1.0, abs=1e-12)
    assert fit_slope([(10, 3.0), (100, 3.0), (1000, 3.0)])[0] == pytest.approx(0.0, abs=1e-12)
    Ns = [64, 128, 256, 512, 1024, 2048, 4096]
    slope, intercept, se = fit_slope([(n, n ** (-2 / 3)) for n in Ns])
    assert abs(slope + 2 / 3) <= 1e-10 and abs(intercept) <= 1e-9 and se <= 1e-10


def test_slope_perturbed_line():
    pts = [(64, 64 ** (-2 / 3) * 1.01), (256, 256 ** (-2 / 3)), (1024, 1024 ** (-2 / 3) * 0.99)]
    assert abs(fit_slope(pts)[0] + 2 / 3) <= 0.02


def test_slope_insufficient_and_excluded():
    with pytest.raises(InsufficientDataError):
        fit_slope([(10, 1.0), (100, 0.1)])
    with pytest.raises(InsufficientDataError):
        fit_slope([(10, 1.0), (100, 0.1), (1000, -0.01), (10_000, 0.0)])
    slope = fit_slope([(10, 1.0), (100, 0.1), (1000, 0.01), (5000, -1.0)])[0]
    assert slope == pytest.approx(-1.0)


@given(
    a=st.floats(-3, 3, allow_nan=False), c=st.floats(0.01, 100, allow_nan=False),
)
def test_slope_recovers_power_law(a, c):
    Ns = [64, 256, 1024, 4096]
    assert fit_slope([(n, c * n**a) for n in Ns])[0] == pytest.approx(a, abs=1e-10)


def test_halving_synthetic():
    for h in (0.4, 0.1, 0.013):
        assert halving_verdict(h, 0.0, h / 2, 0.0) == (2.0, "pass")
    ratio, verdict = halving_verdict(0.2**2, 0.0, 0.1**2, 0.0)
    assert ratio == pytest.approx(4.0, abs=1e-12) and verdict == "fail"
    assert halving_verdict(0.2**2, 0.0, 0.1**2, 0.0, window=(3.0, 5.0))[1] == "pass"
    assert halving_verdict(0.01, 0.01, 0.005, 0.001)[1] == "inconclusive"


def test_expected_bias_first_order_near_kink():
    K = build_legendre_kernel(2)
    big, target = expected_zero_drift_bias(K, 0.8, 0.0, 0.0, 0.002, 1.0, 500)
    small, _ = expected_zero_drift_bias(K, 0.4, 0.0, 0.0, 0.002, 1.0, 500)
    assert big < 0 and small < 0 and target > 0
    assert 1.4 <= big / small <= 2.8
    with pytest.raises(ValueError):
        expected_zero_drift_bias(K, 0.4, 0.0, 0.0, 0.0, 1.0, 500)


def test_emit_csv_shapes(tmp_path):
    report = RateReport(
        rows=((64, 0.1, 0.09, 0.01, 0, 50), (128, 0.05, 0.04, 0.01, 0, 50), (256, 0.02, 0.02, 0.005, 1, 49)),
        slope=-1.0, intercept=0.0, slope_se=0.1,
    )
    path = tmp_path / "r.csv"
    emit_csv(report, path)
    text = path.read_bytes().decode()
    assert text.count("\n") == 4 and "\r" not in text
    assert text.splitlines()[0] == "N,mean_excess,median_excess,se,degenerate_count,n_used"
    empty = tmp_path / "e.csv"
    emit_csv(Table(("a", "b")), empty)
    assert empty.read_text() == "a,b\n"
    emit_csv(Table(("x",), ((1 / 3,),)), empty)
    assert empty.read_text() == "x\n0.333333333333\n"


def test_emit_csv_reports_path(tmp_path):
    with pytest.raises(OSError) as err:
        emit_csv(Table(("a",)), tmp_path / "missing" / "f.csv")
    assert "missing" in str(err.value)


def test_small_rate_campaign_and_determinism(tmp_path):
    cfg = parse_config(TINY_RATES + "seed = 5\n")
    report = run_rate_experiment(cfg)
    assert [r[0] for r in report.rows] == [32, 64, 128]
    assert all(np.isfinite(r[3]) for r in report.rows)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    write_outputs(run_experiment(cfg), out1)
    from dataclasses import replace
    write_outputs(run_experiment(replace(cfg, threads=2)), out2)
    for f in sorted(out1.iterdir()):
        assert f.read_bytes() == (out2 / f.name).read_bytes()


def test_two_point_slope_unavailable():
    cfg = parse_config(TINY_RATES.replace("N = 32, 64, 128", "N = 32, 64"))
    report = run_rate_experiment(cfg)
    assert math.isnan(report.slope)
    assert report.verdicts[0].verdict == "inconclusive"


def test_tail_rows():
    cfg = parse_config(
        "experiment = tails\nN = 100\nreplicates = 50\nn_steps = 100\npilot_paths = 500\n"
        "grid = 51\ndelta = 0, rule, 1e6\n"
    )
    result = run_tail_experiment(cfg)
    rows = result.tables["tails"].rows
    zero = rows[0]
    assert zero[4] == 1.0 and zero[-1] == "n/a"
    huge = rows[2]
    assert huge[4] == 0.0 and huge[-3] <= 1.0 and huge[-1] == "pass"
    assert all(r[5] is not None for r in rows)


def test_margin_and_bias_small():
    margin = run_experiment(parse_config("experiment = margin\nn_paths = 1000\nn_steps = 100"))
    checks = {v.check for v in margin.verdicts}
    assert {"margin_monotone", "margin_linear", "zt_mean_zero", "zt_isometry"} <= checks
    bias = run_experiment(parse_config(
        "experiment = bias\nN = 20\nreplicates = 5\nt0 = 0.002\nbandwidth = 0.8\n"))
    rows = bias.tables["bias"].rows
    assert [r[0] for r in rows] == ["f_hat", "f_hat", "bf_hat", "bf_hat"]
    assert "bias_verdicts" in bias.tables
