"""Per-mode second-order problems -u'' + mu^2 u on an interval.

Every boundary condition of the cylinder model splits, per Fourier mode, into
scalar Dirichlet or Neumann conditions on four component classes: exact and
coexact parts of the degree-q and degree-(q-1) tangential forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .reports import VerificationReport


class ScalarBC(str, Enum):
    D = "D"
    N = "N"


class ComponentClass(str, Enum):
    QMinus = "QMinus"
    QPlus = "QPlus"
    QprevMinus = "QprevMinus"
    QprevPlus = "QprevPlus"
    Harmonic_K = "Harmonic_K"
    Harmonic_GammaK = "Harmonic_GammaK"

    @property
    def harmonic(self) -> bool:
        return self.name.startswith("Harmonic")


NONHARMONIC = (ComponentClass.QMinus, ComponentClass.QPlus,
               ComponentClass.QprevMinus, ComponentClass.QprevPlus)

_D, _N = ScalarBC.D, ScalarBC.N
_C = ComponentClass

REDUCTION_TABLES: dict[str, dict[ComponentClass, ScalarBC]] = {
    "PMinus": {_C.QMinus: _D, _C.QprevMinus: _D, _C.QPlus: _N, _C.QprevPlus: _N},
    "PPlus": {_C.QMinus: _N, _C.QprevMinus: _N, _C.QPlus: _D, _C.QprevPlus: _D},
    "Rel": {_C.QMinus: _D, _C.QPlus: _D, _C.QprevMinus: _N, _C.QprevPlus: _N},
    "Abs": {_C.QMinus: _N, _C.QPlus: _N, _C.QprevMinus: _D, _C.QprevPlus: _D},
    "Dirichlet": {c: _D for c in NONHARMONIC},
}

# zero-frequency kernels: (Harmonic_K, Harmonic_GammaK) receive (1/r, 0) or (0, 1/r)
_HARMONIC_ROWS = {
    "PMinus": {_C.Harmonic_K: _D, _C.Harmonic_GammaK: _N},
    "PPlus": {_C.Harmonic_K: _N, _C.Harmonic_GammaK: _D},
}


class BoundaryConditionKind(str, Enum):
    PMinus = "PMinus"
    PPlus = "PPlus"
    Rel = "Rel"
    Abs = "Abs"
    Dirichlet = "Dirichlet"

    @property
    def reduction_table(self) -> dict[ComponentClass, ScalarBC]:
        return dict(REDUCTION_TABLES[self.value])

    def scalar(self, comp: ComponentClass) -> ScalarBC:
        if comp.harmonic:
            row = _HARMONIC_ROWS.get(self.value)
            if row is None:
                raise ValueError(f"{self.value} has no zero-frequency row for {comp.value}")
            return row[comp]
        return REDUCTION_TABLES[self.value][comp]


BCK = BoundaryConditionKind


@dataclass(frozen=True)
class IntervalProblem:
    mu: float
    L: float
    bc_left: ScalarBC
    bc_right: ScalarBC

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"interval length must be positive, got {self.L}")
        if not self.mu >= 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        object.__setattr__(self, "bc_left", ScalarBC(self.bc_left))
        object.__setattr__(self, "bc_right", ScalarBC(self.bc_right))

    @property
    def neumann_ends(self) -> int:
        return (self.bc_left == _N) + (self.bc_right == _N)


def _check_r(r: float) -> None:
    if not r > 0:
        raise ValueError(f"length must be positive, got {r}")


def dtn_entry(mu: float, r: float, bc_far: ScalarBC) -> float:
    """Neumann jump at x=r of the solution with unit value there and bc_far at x=0."""
    _check_r(r)
    bc_far = ScalarBC(bc_far)
    if mu == 0:
        return 1.0 / r if bc_far == _D else 0.0
    return mu + _kernel(mu, r, bc_far)


def _kernel(mu: float, r: float, scalar: ScalarBC) -> float:
    if mu == 0:
        return 1.0 / r if scalar == _D else 0.0
    x = 2 * mu * r
    if scalar == _D:
        return 2 * mu / math.expm1(x)
    e = math.exp(-x)
    return -2 * mu * e / (1 + e)


def correction_kernel(mu: float, r: float, bc: BoundaryConditionKind, comp: ComponentClass) -> float:
    """Exponentially small part of the near-side DtN entry beyond mu."""
    _check_r(r)
    comp = ComponentClass(comp)
    if comp.harmonic and mu != 0:
        raise ValueError("zero-frequency component requested for a mode with mu > 0")
    return _kernel(mu, r, BCK(bc).scalar(comp))


def kq_difference(mu: float, r: float, comp: ComponentClass) -> float:
    """Difference of PMinus and Rel DtN entries on one component class."""
    _check_r(r)
    if not mu > 0:
        raise ValueError("kq_difference needs mu > 0")
    comp = ComponentClass(comp)
    val = 2 * mu / math.sinh(2 * mu * r) if 2 * mu * r < 700 else 0.0
    return {_C.QPlus: -val, _C.QprevMinus: val}.get(comp, 0.0)


def interval_determinant(prob: IntervalProblem) -> float:
    return math.exp(log_interval_determinant(prob))


def log_interval_determinant(prob: IntervalProblem) -> float:
    """log of the zeta-regularized determinant of -d^2/dx^2 + mu^2."""
    mu, L, nn = prob.mu, prob.L, prob.neumann_ends
    if mu == 0:
        if nn == 2:
            raise ValueError("mu = 0 with two Neumann ends has a zero mode")
        # mixed ends: the mu -> 0 limit of 2 cosh(mu L)
        return math.log(2 * L) if nn == 0 else math.log(2.0)
    x = mu * L
    # log(2 sinh x) and log(2 cosh x) without overflow
    log2sinh = x + math.log(-math.expm1(-2 * x))
    if nn == 0:
        return log2sinh - math.log(mu)
    if nn == 1:
        return x + math.log1p(math.exp(-2 * x))
    return log2sinh + math.log(mu)


def _index_offset(prob: IntervalProblem) -> tuple[float, int]:
    return {0: (0.0, 1), 1: (0.5, 0), 2: (0.0, 0)}[prob.neumann_ends]


def interval_eigenvalues(prob: IntervalProblem, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    shift, start = _index_offset(prob)
    k = np.arange(start, start + count) + shift
    return prob.mu ** 2 + (k * np.pi / prob.L) ** 2


def component_spectra(mu: float, r: float, table: dict[ComponentClass, ScalarBC],
                      count: int, far: ScalarBC = _D) -> list[float]:
    vals: list[float] = []
    for comp in NONHARMONIC:
        vals.extend(interval_eigenvalues(IntervalProblem(mu, r, table[comp], far), count))
    return vals


def multiset_mismatch(a, b, rtol: float) -> tuple[int, float]:
    """Unmatched entries and worst relative deviation of two sorted multisets."""
    a, b = np.sort(np.asarray(a, float)), np.sort(np.asarray(b, float))
    if a.shape != b.shape:
        return abs(a.size - b.size), math.inf
    dev = np.abs(a - b) / np.maximum(1.0, np.abs(a))
    return int((dev > rtol).sum()), float(dev.max(initial=0.0))


def spectral_union_check(mu: float, r: float, count: int,
                         tables: dict[str, dict[ComponentClass, ScalarBC]] | None = None,
                         tolerance: float = 1e-10) -> VerificationReport:
    """Compare Spec(PMinus) u Spec(PPlus) with Spec(Rel) u Spec(Abs) for one mode.

    ``tables`` overrides the reduction tables (fault injection).
    """
    tabs = {k: dict(v) for k, v in REDUCTION_TABLES.items()}
    if tables:
        tabs.update(tables)

    def union(x, y):
        u = sorted(component_spectra(mu, r, tabs[x], count) + component_spectra(mu, r, tabs[y], count))
        return u[:count]

    left, right = union("PMinus", "PPlus"), union("Rel", "Abs")
    unmatched, dev = multiset_mismatch(left, right, tolerance)
    return VerificationReport(
        "spectral-union",
        {"union_relative_deviation": dev, "unmatched_entries": float(unmatched)},
        tolerance,
        tolerances={"unmatched_entries": 0.0},
        details={"mu": mu, "r": r, "count": count},
    )
