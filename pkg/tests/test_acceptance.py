"""The twelve acceptance criteria, each at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL`` line; the lines are shown
in the terminal summary (and on stdout with ``-s``).
"""
from __future__ import annotations

import json
import math

import numpy as np
import pytest

from torsionlab import cli, suites
from torsionlab.config import RunConfig

CFG = RunConfig()


def _record(log, number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})"
    log.append(line)
    print(line)


def _worst(residuals: dict) -> str:
    k = max(residuals, key=lambda key: residuals[key])
    return f"worst {k}={residuals[k]:.2e}"


def test_criterion_01_structure(acceptance_log):
    rep = suites.run_structure(CFG).report
    ok = rep.passed and rep.tolerance == 1e-13 and rep.details["characters"] >= 100
    _record(acceptance_log, 1, "structure identities per mode", ok,
            f"{rep.details['characters']} characters, {_worst(rep.residuals)}")
    assert ok, rep.failures


def test_criterion_02_dtn_kernels(acceptance_log):
    res = suites.dtn_grid_residuals(np.linspace(0.1, 10.0, 20), np.linspace(0.1, 3.0, 20))
    ok = all(v <= 1e-12 for v in res.values())
    _record(acceptance_log, 2, "correction kernels and K_q identities on 20x20", ok, _worst(res))
    assert ok, res


def test_criterion_03_bfk(acceptance_log):
    res = suites.run_bfk(CFG).report.residuals
    ok = res["bfk_per_mode"] <= 1e-12 and res["negative_control_log2_gap"] <= 1e-12
    _record(acceptance_log, 3, "per-mode gluing identity on 20x20x20, control recovers log 2", ok,
            f"residual {res['bfk_per_mode']:.2e}, control gap {res['negative_control_log2_gap']:.2e}")
    assert ok, res


def test_criterion_04_spectral_union(acceptance_log):
    res = suites.run_spectral_union(CFG).report.residuals
    ok = (res["unmatched_entries"] == 0 and res["union_relative_deviation"] <= 1e-10
          and res["per_mode_weighted_identity"] <= 1e-12 and len(suites.union_pairs()) == 50)
    _record(acceptance_log, 4, "spectral unions, 40 eigenvalues x 50 pairs", ok,
            f"deviation {res['union_relative_deviation']:.2e}, per-mode {res['per_mode_weighted_identity']:.2e}")
    assert ok, res


def test_criterion_05_weighted_log_det_identity(acceptance_log):
    res = suites.run_theorem211(CFG).report.residuals
    ok = res["weighted_log_det_identity"] <= 1e-6 and res["stretch_drift"] <= 1e-6
    _record(acceptance_log, 5, "regularized determinant identity and r=1 to r=2 drift", ok,
            f"identity {res['weighted_log_det_identity']:.2e}, drift {res['stretch_drift']:.2e}")
    assert ok, res


@pytest.mark.parametrize("alpha,mu1", [((0.3, 0.0), 1.884956), ((0.5, 0.5), 4.442883)])
def test_criterion_06_adiabatic(acceptance_log, alpha, mu1):
    rep = suites.run_adiabatic(CFG.replace(alpha=list(alpha))).report
    slope, expected = rep.details["slope"], rep.details["expected_slope"]
    ok = (abs(expected + 2 * mu1) <= 1e-5 and abs(slope - expected) <= 0.02 * abs(expected)
          and rep.residuals["signs_not_opposite"] == 0.0)
    _record(acceptance_log, 6, f"adiabatic decay slope, mu1={mu1}", ok,
            f"slope {slope:.5f} vs {expected:.5f}")
    assert ok, rep.residuals


def test_criterion_07_theta(acceptance_log):
    rep = suites.run_theta(CFG).report
    algebraic = {k: v for k, v in rep.residuals.items() if rep.limit(k) <= 1e-11}
    ok = (rep.passed and len(CFG.theta_grid) == 20 and rep.details["modes"] == 5
          and rep.residuals["exp_closed_vs_pade"] <= 1e-11)
    _record(acceptance_log, 7, "theta-family identities over 20 angles x 5 modes", ok, _worst(algebraic))
    assert ok, rep.failures


def test_criterion_08_trace_vanishing(acceptance_log):
    rep = suites.run_trace(CFG).report
    res = rep.residuals
    ok = (res["trace_pieces"] <= 1e-12 and res["fit_t_half_log"] <= 1e-8 and res["fit_t_half"] <= 1e-8
          and res["harmonic_control_not_detected"] == 0.0)
    ctrl = rep.details["harmonic_control"]["a_half"]
    _record(acceptance_log, 8, "trace pieces, small-time coefficients, harmonic control", ok,
            f"pieces {res['trace_pieces']:.2e}, fit {max(res['fit_t_half_log'], res['fit_t_half']):.2e}, "
            f"control {ctrl:.3f}")
    assert ok, res


def test_criterion_09_eta(acceptance_log):
    res = suites.run_eta(CFG).report.residuals
    sym = max(v for k, v in res.items() if k.startswith("symmetry_"))
    ok = sym <= 1e-10 and res["eta_difference_mod_Z"] <= 1e-8 and res["eta_rel_abs_mod_Z"] <= 1e-8
    _record(acceptance_log, 9, "spectral symmetry and integrality of eta", ok,
            f"symmetry {sym:.2e}, mod Z {max(res['eta_difference_mod_Z'], res['eta_rel_abs_mod_Z']):.2e}")
    assert ok, res


def test_criterion_10_torsion(acceptance_log):
    res = suites.run_torsion(CFG).report.residuals
    ok = (res["log_modulus_difference"] <= 1e-6 and res["phase_min_max"] <= 1e-8
          and res["phase_P_minus_plus"] <= 1e-8 and res["zeta_phase_terms"] <= 1e-8)
    _record(acceptance_log, 10, "torsion moduli and phases", ok, _worst(res))
    assert ok, res


def test_criterion_11_oracles(acceptance_log):
    res = suites.oracle_residuals()
    ok = all(v <= 1e-6 for v in res.values())
    _record(acceptance_log, 11, "closed forms vs finite-difference and shooting oracles", ok, _worst(res))
    assert ok, res


def test_criterion_12_cli(acceptance_log, tmp_path):
    names = ["modes", "bfk-check", "theorem211", "adiabatic-sweep", "eta-check"]
    codes, same = [], True
    for suite in names:
        codes.append(cli.main([suite, "--out", str(tmp_path / "a")]))
        codes.append(cli.main([suite, "--out", str(tmp_path / "b")]))
        for f in (tmp_path / "a").glob("*"):
            if f.name.endswith(".timing.json"):
                continue
            same &= f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    gold = tmp_path / "golden"
    blessed = cli.main(["theorem211", "--out", str(tmp_path / "c"), "--baseline", str(gold), "--bless"])
    rerun = cli.main(["theorem211", "--out", str(tmp_path / "d"), "--baseline", str(gold)])
    drift = json.loads((tmp_path / "d" / "theorem211.drift.json").read_text())
    ok = same and set(codes) == {0} and blessed == rerun == 0 and drift["identical"]
    _record(acceptance_log, 12, "bit-identical reports and golden-file rerun", ok,
            f"{len(names)} suites identical={same}, golden rerun exit {rerun}")
    assert ok
