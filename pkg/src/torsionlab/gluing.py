"""Glued cylinder model: DtN operators, BFK gluing, adiabatic limits.

The model manifold is [0, r + far_len] x T^2 cut at x = r.  The near end
x = 0 carries one of the five boundary conditions, the far end carries a
fixed scalar condition per component class (Rel reduction by default).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary_model import Character, enumerate_modes
from .interval_spectra import (BCK, NONHARMONIC, REDUCTION_TABLES, BoundaryConditionKind,
                               ComponentClass, IntervalProblem, ScalarBC, log_interval_determinant)
from .lattice_zeta import Asymptotics, RegularizedValue, regularized_mode_sum
from .reports import VerificationReport

DEFAULT_CUTOFF = 40 * np.pi
_C = ComponentClass

# number of copies of each component class among q-forms on the 3-dim cylinder, per mode
COMPONENT_DIMS: dict[int, dict[ComponentClass, int]] = {
    0: {_C.QMinus: 0, _C.QPlus: 1, _C.QprevMinus: 0, _C.QprevPlus: 0},
    1: {_C.QMinus: 1, _C.QPlus: 1, _C.QprevMinus: 0, _C.QprevPlus: 1},
    2: {_C.QMinus: 1, _C.QPlus: 0, _C.QprevMinus: 1, _C.QprevPlus: 1},
    3: {_C.QMinus: 0, _C.QPlus: 0, _C.QprevMinus: 1, _C.QprevPlus: 0},
}
DEGREES = tuple(COMPONENT_DIMS)


def degree_weight(q: int) -> int:
    return (-1) ** (q + 1) * q


def parity_bc(scheme: str, q: int) -> BoundaryConditionKind:
    """P~0 uses PMinus on even degrees and PPlus on odd ones; P~1 the reverse."""
    even = q % 2 == 0
    if scheme == "P0":
        return BCK.PMinus if even else BCK.PPlus
    if scheme == "P1":
        return BCK.PPlus if even else BCK.PMinus
    raise ValueError(f"unknown parity scheme {scheme}")


@dataclass(frozen=True)
class GluedGeometry:
    r: float
    character: Character
    far_len: float = 1.0
    far_bc: dict = field(default_factory=lambda: dict(REDUCTION_TABLES["Rel"]))
    cut_point: float | None = None
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        if not (self.r > 0 and self.far_len > 0):
            raise ValueError("r and far_len must be positive")
        if self.cut_point is None:
            object.__setattr__(self, "cut_point", self.r)
        object.__setattr__(self, "far_bc", {_C(k): ScalarBC(v) for k, v in self.far_bc.items()})

    def with_r(self, r: float) -> "GluedGeometry":
        return GluedGeometry(r, self.character, self.far_len, dict(self.far_bc), None, self.cutoff)

    @property
    def total_length(self) -> float:
        return self.r + self.far_len

    def mode_frequencies(self) -> np.ndarray:
        return _mode_frequencies(self.character, self.cutoff)

    def modes(self):
        return _modes(self.character, self.cutoff)


_MODE_CACHE: dict = {}


def _modes(character: Character, cutoff: float):
    key = (character, cutoff)
    if key not in _MODE_CACHE:
        _MODE_CACHE[key] = enumerate_modes(character, cutoff)
    return _MODE_CACHE[key]


def _mode_frequencies(character: Character, cutoff: float) -> np.ndarray:
    return np.array([m.mu for m in _modes(character, cutoff)])


def dtn_vec(mu: np.ndarray, r: float, scalar: ScalarBC) -> np.ndarray:
    """Vectorized Neumann jump, mu coth(mu r) or mu tanh(mu r)."""
    e = np.exp(-2 * mu * r)
    if ScalarBC(scalar) == ScalarBC.D:
        return mu + 2 * mu * e / -np.expm1(-2 * mu * r)
    return mu - 2 * mu * e / (1 + e)


def near_difference(mu: np.ndarray, r: float, a: ScalarBC, b: ScalarBC) -> np.ndarray:
    """dtn(a) - dtn(b) without cancellation: 0 or -+2 mu / sinh(2 mu r)."""
    a, b = ScalarBC(a), ScalarBC(b)
    if a == b:
        return np.zeros_like(mu)
    x = 2 * mu * r
    # 2 mu / sinh(x) = 4 mu e^{-x} / (1 - e^{-2x})
    val = 4 * mu * np.exp(-x) / -np.expm1(-2 * x)
    return -val if a == ScalarBC.N else val


def log_det_vec(mu: np.ndarray, L: float, left: ScalarBC, right: ScalarBC) -> np.ndarray:
    nn = (ScalarBC(left) == ScalarBC.N) + (ScalarBC(right) == ScalarBC.N)
    x = mu * L
    log2sinh = x + np.log(-np.expm1(-2 * x))
    if nn == 0:
        return log2sinh - np.log(mu)
    if nn == 1:
        return x + np.log1p(np.exp(-2 * x))
    return log2sinh + np.log(mu)


def log_det_asymptotics(L: float, left: ScalarBC, right: ScalarBC) -> Asymptotics:
    """mu L - log mu (D/D), mu L (mixed), mu L + log mu (N/N)."""
    nn = (ScalarBC(left) == ScalarBC.N) + (ScalarBC(right) == ScalarBC.N)
    return Asymptotics(c1=L, c0=0.0, c_log=float(nn - 1))


LOG_DTN_ASYMPTOTICS = Asymptotics(c1=0.0, c0=math.log(2.0), c_log=1.0)


@dataclass(frozen=True)
class DtNOperator:
    """Per-mode diagonal DtN entries on the component classes of degree q."""

    q: int
    bc: BoundaryConditionKind
    mus: np.ndarray
    components: tuple[ComponentClass, ...]
    near: np.ndarray
    far: np.ndarray
    provenance: str = "closed-form"

    @property
    def entries(self) -> np.ndarray:
        return self.near + self.far

    def matrix(self, i: int) -> np.ndarray:
        return np.diag(self.entries[i])


def assemble_dtn(geom: GluedGeometry, bc: BoundaryConditionKind, q: int,
                 table: dict | None = None) -> DtNOperator:
    bc = BCK(bc)
    tab = table or bc.reduction_table
    mus = geom.mode_frequencies()
    if np.any(mus <= 0):
        raise ValueError("zero-frequency mode present; use an acyclic character or exclude it")
    comps = tuple(c for c in NONHARMONIC if COMPONENT_DIMS[q][c])
    near = np.stack([dtn_vec(mus, geom.r, tab[c]) for c in comps], axis=1) if comps else np.zeros((mus.size, 0))
    far = np.stack([dtn_vec(mus, geom.far_len, geom.far_bc[c]) for c in comps], axis=1) if comps else np.zeros((mus.size, 0))
    return DtNOperator(q, bc, mus, comps, near, far)


def _combine(values: list[tuple[float, RegularizedValue]]) -> RegularizedValue:
    finite = math.fsum(w * v.finite_part for w, v in values)
    terms = [ct for _, v in values for ct in v.counterterms]
    err = sum(abs(w) * v.truncation_error for w, v in values)
    cut = max((v.cutoff_used for _, v in values), default=0.0)
    return RegularizedValue(finite, terms, err, cut)


def bfk_check_per_mode(mu: float, a: float, b: float, include_log2: bool = True,
                       tolerance: float = 1e-12) -> VerificationReport:
    """Gluing identity for one mode on [0, a + b] cut at a, Dirichlet at both ends."""
    def ld(L):
        return log_interval_determinant(IntervalProblem(mu, L, "D", "D"))

    # log(mu coth(mu a) + mu coth(mu b)) written stably
    log_r = math.log(mu) + math.log(1 / math.tanh(mu * a) + 1 / math.tanh(mu * b))
    rhs = ld(a) + ld(b) + log_r - (math.log(2.0) if include_log2 else 0.0)
    res = abs(ld(a + b) - rhs)
    return VerificationReport("bfk-check", {"bfk_per_mode": res}, tolerance,
                              details={"mu": mu, "a": a, "b": b, "lhs": ld(a + b), "rhs": rhs})


def bfk_component_residual(mu: float, a: float, b: float, left: ScalarBC, right: ScalarBC) -> float:
    """Gluing identity with arbitrary scalar conditions at the two outer ends."""
    whole = log_interval_determinant(IntervalProblem(mu, a + b, left, right))
    pieces = (log_interval_determinant(IntervalProblem(mu, a, left, "D"))
              + log_interval_determinant(IntervalProblem(mu, b, "D", right)))
    from .interval_spectra import dtn_entry
    return abs(whole - pieces - math.log(dtn_entry(mu, a, left) + dtn_entry(mu, b, right)) + math.log(2.0))


def log_det_bvp(geom: GluedGeometry, bc: BoundaryConditionKind, q: int,
                table: dict | None = None) -> RegularizedValue:
    """Regularized log Det of B^2 on q-forms over the glued cylinder."""
    tab = table or BCK(bc).reduction_table
    ch = geom.character
    modes = geom.modes()
    L = geom.total_length
    parts = []
    for c in NONHARMONIC:
        dim = COMPONENT_DIMS[q][c]
        if not dim:
            continue
        left, right = tab[c], geom.far_bc[c]
        rv = regularized_mode_sum(modes, lambda m: log_det_vec(m, L, left, right),
                                  log_det_asymptotics(L, left, right), ch, weight=dim)
        parts.append((1.0, rv))
    return _combine(parts) if parts else RegularizedValue(0.0, [], 0.0, geom.cutoff)


def log_det_near_piece(geom: GluedGeometry, bc, q: int, table: dict | None = None) -> RegularizedValue:
    """Regularized log Det on [0, r] with Dirichlet at the cut."""
    tab = table or BCK(bc).reduction_table
    parts = []
    for c in NONHARMONIC:
        dim = COMPONENT_DIMS[q][c]
        if dim:
            left = tab[c]
            parts.append((1.0, regularized_mode_sum(
                geom.modes(), lambda m: log_det_vec(m, geom.r, left, "D"),
                log_det_asymptotics(geom.r, left, "D"), geom.character, weight=dim)))
    return _combine(parts) if parts else RegularizedValue(0.0, [], 0.0, geom.cutoff)


def log_det_dtn(geom: GluedGeometry, bc, q: int, table: dict | None = None) -> RegularizedValue:
    """Regularized log Det R_{q,bc}(r); R ~ 2 mu for large mu."""
    dtn = assemble_dtn(geom, bc, q, table)
    parts = []
    for j, c in enumerate(dtn.components):
        # entries are already ordered like geom.modes()
        col = dtn.entries[:, j]
        parts.append((1.0, regularized_mode_sum(
            geom.modes(), lambda _mu, col=col: np.log(col), LOG_DTN_ASYMPTOTICS,
            geom.character, weight=COMPONENT_DIMS[q][c])))
    return _combine(parts) if parts else RegularizedValue(0.0, [], 0.0, geom.cutoff)


def corollary28_residual(geom: GluedGeometry, tables: dict | None = None,
                         tolerance: float = 1e-6) -> VerificationReport:
    """Weighted determinant combination vs the same combination of DtN determinants."""
    tabs = {k: dict(v) for k, v in REDUCTION_TABLES.items()}
    if tables:
        tabs.update(tables)
    lhs = rhs = 0.0
    err = 0.0
    for q in DEGREES:
        w = degree_weight(q)
        if not w:
            continue
        for name, sign in (("PMinus", 1), ("PPlus", 1), ("Rel", -1), ("Abs", -1)):
            a = log_det_bvp(geom, name, q, tabs[name])
            b = log_det_dtn(geom, name, q, tabs[name])
            lhs += w * sign * a.finite_part
            rhs += w * sign * b.finite_part
            err += abs(w) * (a.truncation_error + b.truncation_error)
    return VerificationReport("dtn-combination", {"dtn_combination": abs(lhs - rhs)}, tolerance,
                              details={"lhs": lhs, "rhs": rhs, "truncation_error": err, "r": geom.r})


def _delta_terms(geom: GluedGeometry, q: int, pair: tuple[str, str]) -> float:
    """log Det R_a - log Det R_b; the asymptotics cancel so the mode sum converges."""
    b = assemble_dtn(geom, pair[1], q)
    ta, tb = BCK(pair[0]).reduction_table, BCK(pair[1]).reduction_table
    total = []
    for j, c in enumerate(b.components):
        diff = near_difference(b.mus, geom.r, ta[c], tb[c])
        total.extend((COMPONENT_DIMS[q][c] * np.log1p(diff / b.entries[:, j])).tolist())
    return float(math.fsum(total))


@dataclass(frozen=True)
class AdiabaticSweep:
    q: int
    r_values: np.ndarray
    delta_minus: np.ndarray
    delta_plus: np.ndarray
    slope: float
    expected_slope: float
    bound_ratio: float
    bound: float
    integral_residual: float

    @property
    def slope_rel_error(self) -> float:
        return abs(self.slope - self.expected_slope) / abs(self.expected_slope)

    def rows(self) -> list[list[float]]:
        return [[float(r), float(a), float(b), self.slope]
                for r, a, b in zip(self.r_values, self.delta_minus, self.delta_plus)]


class FitRefused(ArithmeticError):
    pass


def trace_bound_measurements(geom: GluedGeometry, q: int, nodes: int = 24) -> dict:
    """Trace ratio |Tr X(s)^-1 K| / |Tr K| over s in [0,1] and the integral identity.

    In the diagonal model the constant c0 of the bound is 1 and lambda_1 is
    the smallest entry of Q2 + |A|.
    """
    rel = assemble_dtn(geom, "Rel", q)
    pm = assemble_dtn(geom, "PMinus", q)
    w = np.array([COMPONENT_DIMS[q][c] for c in rel.components], dtype=float)
    K = np.stack([near_difference(rel.mus, geom.r, BCK.PMinus.scalar(c), BCK.Rel.scalar(c))
                  for c in rel.components], axis=1) if rel.components else pm.entries
    trace_k = float(np.sum(K @ w))
    lam1 = float(np.min(rel.mus[:, None] + rel.far)) if rel.components else math.inf
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    s_nodes = 0.5 * (xs + 1)
    traces = np.array([float(np.sum((K / (rel.entries + s * K)) @ w)) for s in s_nodes])
    integral = 0.5 * float(np.dot(ws, traces))
    delta = _delta_terms(geom, q, ("PMinus", "Rel"))
    ratio = float(np.max(np.abs(traces))) / abs(trace_k) if trace_k else 0.0
    return {"ratio": ratio, "bound": 2.0 / lam1, "lambda1": lam1, "c0": 1.0,
            "integral": integral, "delta": delta, "integral_residual": abs(integral - delta)}


def adiabatic_sweep(geom_base: GluedGeometry, r_list, q: int = 0) -> AdiabaticSweep:
    r_values = np.asarray(sorted(r_list), dtype=float)
    if r_values.size < 4:
        raise FitRefused("adiabatic fit needs at least 4 r values")
    if r_values[-1] < 4 * r_values[0]:
        raise FitRefused("r values must span at least a factor of 4")
    dm, dp, ratios, bounds, ires = [], [], [], [], []
    for r in r_values:
        g = geom_base.with_r(float(r))
        dm.append(_delta_terms(g, q, ("PMinus", "Rel")))
        dp.append(_delta_terms(g, q, ("PPlus", "Abs")))
        meas = trace_bound_measurements(g, q)
        ratios.append(meas["ratio"])
        bounds.append(meas["bound"])
        ires.append(meas["integral_residual"])
    dm_arr, dp_arr = np.array(dm), np.array(dp)
    if np.any(dm_arr == 0):
        raise FitRefused(f"degree {q} has no component where the boundary conditions differ")
    slope = float(np.polyfit(r_values, np.log(np.abs(dm_arr)), 1)[0])
    mu1 = float(geom_base.mode_frequencies().min())
    return AdiabaticSweep(q, r_values, dm_arr, dp_arr, slope, -2 * mu1,
                          float(max(ratios)), float(min(bounds)), float(max(ires)))


def weighted_log_det_sides(geom: GluedGeometry) -> tuple[float, float, float]:
    """(P~0 + P~1 side, rel + abs side, truncation error) of the weighted sums."""
    lhs = rhs = err = 0.0
    for q in DEGREES:
        w = degree_weight(q)
        if not w:
            continue
        for scheme in ("P0", "P1"):
            v = log_det_bvp(geom, parity_bc(scheme, q), q)
            lhs += w * v.finite_part
            err += abs(w) * v.truncation_error
        for name in ("Rel", "Abs"):
            v = log_det_bvp(geom, name, q)
            rhs += w * v.finite_part
            err += abs(w) * v.truncation_error
    return lhs, rhs, err


def per_mode_weighted_identity(mu: float, r: float, far_len: float = 1.0, far_bc=None) -> float:
    """Unregularized single-mode version of the weighted determinant identity."""
    far = {_C(k): ScalarBC(v) for k, v in (far_bc or REDUCTION_TABLES["Rel"]).items()}
    L = r + far_len
    lhs = rhs = 0.0
    for q in DEGREES:
        w = degree_weight(q)
        for c in NONHARMONIC:
            d = COMPONENT_DIMS[q][c]
            if not (w and d):
                continue
            for scheme in ("P0", "P1"):
                lhs += w * d * log_interval_determinant(IntervalProblem(mu, L, parity_bc(scheme, q).scalar(c), far[c]))
            for name in ("Rel", "Abs"):
                rhs += w * d * log_interval_determinant(IntervalProblem(mu, L, BCK(name).scalar(c), far[c]))
    return abs(lhs - rhs)


def theorem211_compare(geom: GluedGeometry, r_other: float = 2.0,
                       tolerance: float = 1e-6) -> VerificationReport:
    lhs, rhs, err = weighted_log_det_sides(geom)
    lhs2, rhs2, _ = weighted_log_det_sides(geom.with_r(r_other))
    drift = abs((lhs - rhs) - (lhs2 - rhs2))
    mu1 = float(geom.mode_frequencies().min())
    return VerificationReport(
        "theorem211",
        {"weighted_log_det_identity": abs(lhs - rhs), "stretch_drift": drift,
         "per_mode": per_mode_weighted_identity(mu1, geom.r, geom.far_len, geom.far_bc)},
        tolerance,
        tolerances={"per_mode": 1e-12},
        details={"lhs": lhs, "rhs": rhs, "lhs_r2": lhs2, "rhs_r2": rhs2,
                 "r": geom.r, "r_other": r_other, "truncation_error": err},
    )


def far_side_positivity(geom: GluedGeometry) -> float:
    """Worst ratio of min spec(Q2 + |A|) to mu (1 + tanh(mu far_len)); must be >= 1."""
    mus = geom.mode_frequencies()
    worst = math.inf
    for q in DEGREES:
        dtn = assemble_dtn(geom, "Rel", q)
        if not dtn.components:
            continue
        low = np.min(mus[:, None] + dtn.far, axis=1)
        worst = min(worst, float(np.min(low / (mus * (1 + np.tanh(mus * geom.far_len))))))
    return worst
