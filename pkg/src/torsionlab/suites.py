"""Verification suites driven by a RunConfig.

Each runner returns a SuiteResult: one VerificationReport plus any CSV tables.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import eta as eta_mod
from . import theta as th
from .boundary_model import Character, enumerate_modes, modes_csv, verify_structure
from .config import RunConfig
from .gluing import (adiabatic_sweep, bfk_check_per_mode, bfk_component_residual, corollary28_residual,
                     far_side_positivity, per_mode_weighted_identity, theorem211_compare)
from .interval_spectra import (BCK, NONHARMONIC, ComponentClass, IntervalProblem, ScalarBC,
                               correction_kernel, dtn_entry, interval_eigenvalues, kq_difference,
                               log_interval_determinant, spectral_union_check)
from .oracles import fd_eigenvalues, fd_log_determinant, shooting_dtn
from .reports import VerificationReport, merge_reports

STRUCTURE_CUTOFF = 20.0


@dataclass
class SuiteResult:
    report: VerificationReport
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    mode_count: int = 0


def parallel_map(fn, items, jobs: int):
    """Order-preserving map; a process pool when jobs > 1."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# structure

def sample_characters(seed: int, count: int) -> list[Character]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        alpha = tuple(float(a) for a in rng.uniform(0.0, 1.0, 2))
        shear, height = rng.uniform(-0.5, 0.5), rng.uniform(0.7, 1.5)
        out.append(Character(alpha, ((1.0, 0.0), (float(shear), float(height)))))
    return out


def _structure_one(ch: Character) -> tuple[dict, int]:
    modes = [m for m in enumerate_modes(ch, STRUCTURE_CUTOFF) if m.mu > 0]
    rep = merge_reports("structure", [verify_structure(m) for m in modes])
    return rep.residuals, len(modes)


def run_structure(cfg: RunConfig) -> SuiteResult:
    chars = sample_characters(cfg.seed, cfg.structure_samples)
    results = parallel_map(_structure_one, chars, cfg.jobs)
    worst: dict[str, float] = {}
    count = 0
    for res, n in results:
        count += n
        for k, v in res.items():
            worst[k] = max(worst.get(k, 0.0), v)
    rep = VerificationReport("structure-check", worst, 1e-13,
                             details={"characters": len(chars), "modes_checked": count,
                                      "mode_cutoff": STRUCTURE_CUTOFF})
    return SuiteResult(rep, mode_count=count)


# DtN entries and gluing

def dtn_grid_residuals(mus, rs) -> dict[str, float]:
    """Correction kernels and the K_q identities on a (mu, r) grid."""
    kernel = kq = 0.0
    for mu in mus:
        for r in rs:
            for comp in NONHARMONIC:
                for bc in (BCK.PMinus, BCK.PPlus, BCK.Rel, BCK.Abs):
                    scalar = bc.scalar(comp)
                    kernel = max(kernel, abs(dtn_entry(mu, r, scalar) - mu - correction_kernel(mu, r, bc, comp)))
                e = {bc: dtn_entry(mu, r, bc.scalar(comp)) for bc in BCK if bc != BCK.Dirichlet}
                kd = kq_difference(mu, r, comp)
                scale = max(1.0, mu)
                kq = max(kq, abs(e[BCK.PMinus] - e[BCK.Rel] - kd) / scale,
                         abs(e[BCK.PPlus] - e[BCK.Abs] + kd) / scale)
    return {"correction_kernel": kernel, "kq_identity": kq}


def run_bfk(cfg: RunConfig) -> SuiteResult:
    mus = np.linspace(0.1, 10.0, 20)
    lengths = np.linspace(0.1, 3.0, 20)
    worst = worst_nc = 0.0
    comp = 0.0
    for mu in mus:
        for a in lengths:
            for b in lengths:
                worst = max(worst, bfk_check_per_mode(mu, a, b).residuals["bfk_per_mode"])
                nc = bfk_check_per_mode(mu, a, b, include_log2=False).residuals["bfk_per_mode"]
                worst_nc = max(worst_nc, abs(nc - math.log(2.0)))
        for left in ScalarBC:
            for right in ScalarBC:
                comp = max(comp, bfk_component_residual(mu, 0.7, 1.3, left, right))
    res = {"bfk_per_mode": worst, "bfk_mixed_ends": comp, "negative_control_log2_gap": worst_nc}
    res.update(dtn_grid_residuals(mus, lengths))
    rep = VerificationReport("bfk-check", res, cfg.tol_algebraic,
                             details={"grid": [20, 20, 20], "mu_range": [0.1, 10.0],
                                      "length_range": [0.1, 3.0]})
    return SuiteResult(rep)


# spectral unions and oracles

def union_pairs() -> list[tuple[float, float]]:
    return [(float(mu), float(r)) for mu in np.linspace(0.2, 12.0, 10) for r in (0.5, 1.0, 1.7, 2.5, 4.0)]


def oracle_residuals() -> dict[str, float]:
    """Closed forms against FD determinants/eigenvalues and ODE shooting."""
    det = eig = dtn = 0.0
    for mu, L in ((0.5, 1.0), (1.3, 0.7), (2.0, 1.5)):
        for left in ScalarBC:
            for right in ScalarBC:
                prob = IntervalProblem(mu, L, left, right)
                det = max(det, abs(fd_log_determinant(prob) - log_interval_determinant(prob)))
                exact = interval_eigenvalues(prob, 5)
                eig = max(eig, float(np.max(np.abs(fd_eigenvalues(prob, 5) - exact) / exact)))
        for far in ScalarBC:
            dtn = max(dtn, abs(shooting_dtn(mu, L, far) - dtn_entry(mu, L, far)))
    return {"oracle_log_det": det, "oracle_eigenvalues": eig, "oracle_dtn": dtn}


def run_spectral_union(cfg: RunConfig) -> SuiteResult:
    union = merge_reports("spectral-union", [spectral_union_check(mu, r, 40) for mu, r in union_pairs()])
    per_mode = max(per_mode_weighted_identity(mu, r) for mu, r in union_pairs())
    res = dict(union.residuals)
    res["per_mode_weighted_identity"] = per_mode
    res.update(oracle_residuals())
    tols = {"unmatched_entries": 0.0, "union_relative_deviation": 1e-10,
            "oracle_log_det": 1e-6, "oracle_eigenvalues": 1e-6, "oracle_dtn": 1e-6}
    rep = VerificationReport("spectral-union", res, cfg.tol_algebraic, tols,
                             details={"pairs": len(union_pairs()), "eigenvalues_per_mode": 40})
    return SuiteResult(rep)


# regularized identities

def run_theorem211(cfg: RunConfig) -> SuiteResult:
    geom = cfg.geometry()
    t211 = theorem211_compare(geom, tolerance=cfg.tol_regularized)
    c28 = corollary28_residual(geom, tolerance=cfg.tol_regularized)
    pos = far_side_positivity(geom)
    res = dict(t211.residuals)
    res.update(c28.residuals)
    res["far_side_positivity_deficit"] = max(0.0, 1.0 - pos)
    tols = {"per_mode": cfg.tol_algebraic, "far_side_positivity_deficit": 1e-12}
    details = {"weighted_identity": t211.details, "dtn_combination": c28.details, "far_side_positivity": pos}
    return SuiteResult(VerificationReport("theorem211", res, cfg.tol_regularized, tols, details),
                       mode_count=len(geom.modes()))


def run_adiabatic(cfg: RunConfig) -> SuiteResult:
    geom = cfg.geometry()
    sweep = adiabatic_sweep(geom, cfg.r_sweep)
    opposite = bool(np.all(sweep.delta_minus * sweep.delta_plus < 0))
    res = {"slope_relative_error": sweep.slope_rel_error,
           "signs_not_opposite": 0.0 if opposite else 1.0,
           "trace_bound_excess": max(0.0, sweep.bound_ratio - sweep.bound),
           "integral_identity": sweep.integral_residual}
    tols = {"slope_relative_error": 0.02, "signs_not_opposite": 0.0, "trace_bound_excess": 0.0}
    details = {"slope": sweep.slope, "expected_slope": sweep.expected_slope,
               "bound_ratio": sweep.bound_ratio, "bound": sweep.bound, "q": sweep.q}
    table = (["r", "delta_PMinus", "delta_PPlus"], [row[:3] for row in sweep.rows()])
    return SuiteResult(VerificationReport("adiabatic-sweep", res, cfg.tol_regularized, tols, details),
                       {"adiabatic": table}, len(geom.modes()))


# theta family

def theta_modes(cfg: RunConfig, count: int):
    modes = [m for m in enumerate_modes(cfg.character, cfg.mode_cutoff) if m.mu > 0]
    return modes[:count]


def _theta_one(args) -> dict[str, float]:
    mode, thetas, tol = args
    out: dict[str, float] = {}
    for theta in thetas:
        fr = th.build_frame(mode, theta)
        for rep in (th.lemma_suite(fr, tol), th.conjugation_check(fr, tol)):
            for k, v in rep.residuals.items():
                out[k] = max(out.get(k, 0.0), v)
        for t, y in ((0.05, 0.2), (0.3, 0.7)):
            for k, v in th.heat_kernel_checks(fr, t, y).items():
                out[k] = max(out.get(k, 0.0), v)
    return out


def run_theta(cfg: RunConfig) -> SuiteResult:
    modes = theta_modes(cfg, cfg.theta_modes)
    parts = parallel_map(_theta_one, [(m, cfg.theta_grid, cfg.tol_algebraic) for m in modes], cfg.jobs)
    res: dict[str, float] = {}
    for part in parts:
        for k, v in part.items():
            res[k] = max(res.get(k, 0.0), v)
    fr = th.build_frame(modes[0], cfg.theta_grid[len(cfg.theta_grid) // 2])
    errs, order = th.green_formula_order(fr)
    res["green_formula_order_gap"] = abs(order - 2.0)
    res["q_tilde_quadrature"] = float(np.max(np.abs(th.q_tilde(fr, 0.3) - th.q_tilde_direct(fr, 0.3))))
    commutators = [float(np.linalg.norm(f.T_mat @ f.A_tilde - f.A_tilde @ f.T_mat, 2))
                   for f in (th.build_frame(m, math.pi / 4) for m in modes)]
    tols = {"exp_closed_vs_pade": 1e-11, "exp_iT_pade": 1e-11, "kernel_boundary": 1e-10,
            "kernel_boundary_derivative": 1e-10, "kernel_derivative_fd": 1e-6, "heat_equation": 1e-6,
            "green_formula_order_gap": 0.1, "q_tilde_quadrature": 1e-10}
    details = {"modes": len(modes), "thetas": len(cfg.theta_grid), "green_defects": errs,
               "green_order": order, "T_A_commutator_norms": commutators}
    return SuiteResult(VerificationReport("theta-suite", res, cfg.tol_algebraic, tols, details),
                       mode_count=len(modes))


def run_trace(cfg: RunConfig) -> SuiteResult:
    modes = theta_modes(cfg, 30)
    pieces = 0.0
    chir = 0.0
    for m in modes[: cfg.theta_modes]:
        for theta in cfg.theta_grid[::4]:
            fr = th.build_frame(m, theta)
            for t in cfg.t_grid[::3]:
                pieces = max(pieces, max(abs(v) for v in th.trace_pieces(fr, t).values()))
                chir = max(chir, th.chirality_trace_check(m, t))
    frames = [th.build_frame(m, math.pi / 4) for m in modes]
    fit = th.eta_variation_coefficients(frames, cfg.t_grid)
    zero_frames = [th.build_frame(m, 0.0) for m in modes]
    zero_fit = th.eta_variation_coefficients(zero_frames, cfg.t_grid)
    control = th.eta_variation_coefficients(th.harmonic_control_frames(), cfg.t_grid)
    res = {"trace_pieces": pieces, "chirality_even_odd": chir,
           "fit_t_half_log": fit["a_log"], "fit_t_half": fit["a_half"],
           "theta_zero_sum": zero_fit["max_abs_total"],
           "harmonic_control_not_detected": 0.0 if control["a_half"] > 1e-3 else 1.0}
    tols = {"fit_t_half_log": 1e-8, "fit_t_half": 1e-8, "harmonic_control_not_detected": 0.0}
    details = {"fit": _plain(fit), "theta_zero_fit": _plain(zero_fit), "harmonic_control": _plain(control),
               "modes": len(modes)}
    rows = [["acyclic_pi_over_4", fit["a_log"], fit["a_half"], fit["a_const"]],
            ["acyclic_theta_0", zero_fit["a_log"], zero_fit["a_half"], zero_fit["a_const"]],
            ["harmonic_control", control["a_log"], control["a_half"], control["a_const"]]]
    return SuiteResult(VerificationReport("trace-vanishing", res, cfg.tol_algebraic, tols, details),
                       {"trace_fit": (["case", "a_log", "a_half", "a_const"], rows)}, len(modes))


def _plain(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, complex):
            out[k] = [v.real, v.imag]
        else:
            out[k] = float(v)
    return out


# eta and torsion

def run_eta(cfg: RunConfig) -> SuiteResult:
    mus = np.sort(cfg.geometry().mode_frequencies())[: cfg.eta_modes]
    distinct = sorted({round(float(m), 10) for m in mus})
    rep = eta_mod.eta_suite(distinct, 1.0)
    fiber = eta_mod.fiber_for(distinct[0])
    twisted = eta_mod.twisted_subspace(fiber, BCK.PMinus, 0.4)
    asym = eta_mod.spectral_symmetry(distinct[0], 1.0, BCK.PMinus, near_allowed=twisted)
    rep.residuals["asymmetric_control_not_detected"] = 0.0 if asym > 1e-3 else 1.0
    rep.tolerances["asymmetric_control_not_detected"] = 0.0
    rep.details["asymmetric_control_mismatch"] = asym
    rows = [[mu, eta_mod.mode_eta(mu, 1.0, bc).value, bc.value]
            for mu in distinct for bc in (BCK.PMinus, BCK.PPlus)]
    return SuiteResult(rep, {"eta": (["mu", "eta", "bc"], rows)}, len(mus))


def run_torsion(cfg: RunConfig) -> SuiteResult:
    geom = cfg.geometry()
    rep = eta_mod.theorem44_compare(geom, cfg.eta_modes, modulus_tolerance=cfg.tol_regularized)
    tm, tp = rep.details["torsion_min_max"], rep.details["torsion_P"]
    rows = [[tm["provenance"], tm["log_modulus"], tm["phase"]],
            [tp["provenance"], tp["log_modulus"], tp["phase"]]]
    return SuiteResult(rep, {"torsion": (["construction", "log_modulus", "phase"], rows)}, len(geom.modes()))


def run_modes(cfg: RunConfig) -> SuiteResult:
    modes = enumerate_modes(cfg.character, cfg.mode_cutoff)
    csv_text = modes_csv(modes)
    rows = [line.split(",") for line in csv_text.strip().split("\r\n")]
    rep = VerificationReport("modes", {}, cfg.tol_algebraic,
                             details={"count": len(modes), "lowest_mu": modes[0].mu if modes else None})
    return SuiteResult(rep, {"modes": (rows[0], rows[1:])}, len(modes))


SUITES = {
    "modes": run_modes,
    "structure-check": run_structure,
    "bfk-check": run_bfk,
    "spectral-union": run_spectral_union,
    "theorem211": run_theorem211,
    "adiabatic-sweep": run_adiabatic,
    "theta-suite": run_theta,
    "trace-vanishing": run_trace,
    "eta-check": run_eta,
    "torsion-compare": run_torsion,
}
ORDER = tuple(SUITES)
