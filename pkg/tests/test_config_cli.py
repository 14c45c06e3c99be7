import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab import cli, suites
from torsionlab.config import ConfigError, RunConfig


def test_defaults_are_valid():
    cfg = RunConfig()
    assert cfg.alpha == (0.3, 0.0)
    assert len(cfg.theta_grid) == 20
    assert cfg.theta_grid[-1] == pytest.approx(math.pi / 2)


def test_yaml_round_trip_is_lossless():
    cfg = RunConfig(alpha=(0.5, 0.5), r=2.0, seed=7)
    back = RunConfig.from_yaml(cfg.to_yaml())
    assert back == cfg
    assert back.hash() == cfg.hash()


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 0.99), st.floats(0.1, 10.0), st.integers(0, 10 ** 6))
def test_round_trip_random(a1, a2, r, seed):
    cfg = RunConfig(alpha=(a1, a2), r=r, seed=seed)
    assert RunConfig.from_yaml(cfg.to_yaml()) == cfg


@pytest.mark.parametrize("changes", [
    {"r": -1.0},
    {"mode_cutoff": 0.0},
    {"far_bc": "Nope"},
    {"theta_grid": [0.5, 0.1]},
    {"theta_grid": [0.0, 2.0]},
    {"t_grid": []},
    {"jobs": 0},
    {"seed": 1.5},
    {"alpha": (1.2, 0.0)},
    {"bogus_key": 1},
])
def test_invalid_configs_rejected(changes):
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**RunConfig().to_dict(), **changes})


def test_malformed_yaml_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_yaml("alpha: [0.3,\n")
    with pytest.raises(ConfigError):
        RunConfig.from_yaml("- 1\n- 2\n")


def test_hash_changes_with_content():
    assert RunConfig().hash() != RunConfig(seed=1).hash()


def _run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def test_missing_command_is_config_error(capsys):
    assert cli.main([]) == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "config"


def test_zero_cutoff_is_config_error(tmp_path, capsys):
    assert _run(tmp_path, "modes", "--cutoff", "0") == cli.EXIT_CONFIG
    assert json.loads(capsys.readouterr().err.strip())["error"] == "config"


def test_unknown_key_in_config_file(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("alpha: [0.3, 0.0]\nunknown: 3\n")
    assert _run(tmp_path, "modes", "--config", str(path)) == cli.EXIT_CONFIG


def test_unknown_suite_is_config_error(tmp_path):
    assert _run(tmp_path, "nope") == cli.EXIT_CONFIG


def test_disagreeing_suite_flags(tmp_path):
    assert _run(tmp_path, "modes", "--suite", "bfk-check") == cli.EXIT_CONFIG


def test_modes_writes_csv(tmp_path):
    assert _run(tmp_path, "--suite", "modes") == cli.EXIT_OK
    text = (tmp_path / "modes.csv").read_bytes()
    assert text.startswith(b"n1,n2,mu,multiplicity\r\n")
    doc = json.loads((tmp_path / "modes.json").read_text())
    assert doc["schema"] == cli.SCHEMA
    assert doc["provenance"]["config_hash"] == RunConfig().hash()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("TORSIONLAB_OUT", str(tmp_path / "env"))
    assert cli.main(["modes"]) == cli.EXIT_OK
    assert (tmp_path / "env" / "modes.json").exists()


@pytest.mark.parametrize("suite", ["bfk-check", "adiabatic-sweep"])
def test_reports_are_bit_identical(tmp_path, suite):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(a, suite) == cli.EXIT_OK
    assert _run(b, suite) == cli.EXIT_OK
    for name in [f"{suite}.json"] + [p.name for p in a.glob("*.csv")]:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_golden_diff_workflow(tmp_path):
    base = tmp_path / "golden"
    assert _run(tmp_path / "first", "theorem211", "--baseline", str(base), "--bless") == cli.EXIT_OK
    assert (base / "theorem211.json").exists()
    assert _run(tmp_path / "second", "theorem211", "--baseline", str(base)) == cli.EXIT_OK
    drift = json.loads((tmp_path / "second" / "theorem211.drift.json").read_text())
    assert drift["identical"] and drift["within_bounds"]


def test_missing_baseline_is_config_error(tmp_path):
    assert _run(tmp_path, "modes", "--baseline", str(tmp_path / "none")) == cli.EXIT_CONFIG


def test_drift_beyond_tolerance_fails(tmp_path):
    doc = {"suite": "x", "schema": cli.SCHEMA, "residuals": {"a": 0.0}, "tolerance": 1e-12,
           "tolerances": {}, "details": {}}
    cli.persist_and_diff(doc, tmp_path / "x.json", bless=True)
    moved = {**doc, "residuals": {"a": 1e-6}}
    assert not cli.persist_and_diff(moved, tmp_path / "x.json")["within_bounds"]


def test_schema_mismatch_raises(tmp_path):
    doc = {"suite": "x", "schema": cli.SCHEMA, "residuals": {"a": 0.0}, "tolerance": 1e-12,
           "tolerances": {}, "details": {}}
    cli.persist_and_diff(doc, tmp_path / "x.json", bless=True)
    with pytest.raises(cli.BaselineError):
        cli.persist_and_diff({**doc, "residuals": {"b": 0.0}}, tmp_path / "x.json")


def test_cutoff_increase_drifts_within_truncation(tmp_path):
    base = tmp_path / "golden"
    assert _run(tmp_path / "a", "theorem211", "--baseline", str(base), "--bless") == cli.EXIT_OK
    cut = 1.5 * RunConfig().mode_cutoff
    assert _run(tmp_path / "b", "theorem211", "--baseline", str(base), "--cutoff", str(cut)) == cli.EXIT_OK
    drift = json.loads((tmp_path / "b" / "theorem211.drift.json").read_text())
    assert drift["within_bounds"]


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(cfg):
        raise suites.th.FitRefused("too few points")
    monkeypatch.setitem(suites.SUITES, "trace-vanishing", boom)
    assert _run(tmp_path, "trace-vanishing") == cli.EXIT_NUMERIC
    assert json.loads(capsys.readouterr().err.strip())["error"] == "numerical"


def test_failed_verification_exit_code(tmp_path, monkeypatch):
    from torsionlab.reports import VerificationReport
    monkeypatch.setitem(suites.SUITES, "modes",
                        lambda cfg: suites.SuiteResult(VerificationReport("modes", {"x": 1.0}, 1e-12)))
    assert _run(tmp_path, "modes") == cli.EXIT_FAIL


def test_json_safe_handles_complex_and_nonfinite():
    out = cli.json_safe({"z": 1 + 2j, "n": float("nan"), "b": (1, 2)})
    assert out == {"b": [1, 2], "n": "nan", "z": [1.0, 2.0]}


def test_help_exits_cleanly():
    assert cli.main(["--help"]) == cli.EXIT_OK
