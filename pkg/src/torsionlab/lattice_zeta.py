"""Lattice zeta functions of the twisted torus and regularized mode sums.

The scalar Laplacian eigenvalues are lambda_n = |2 pi G^{-T}(n + alpha)|^2.
Degree-q forms carry multiplicity 1, 2, 1 per mode, so every q-dependent
quantity here is that multiplicity times the scalar one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.special import erfc, exp1

from .boundary_model import FORM_MULTIPLICITY, Character, ModeQuartet

EULER_GAMMA = float(mpmath.euler)
HEAT_SWITCH = 1.0 / (2.0 * np.pi)
# exponent beyond which lattice terms are dropped (e^-60 ~ 1e-26)
_EXP_CUT = 60.0


def _lattice_points(gens_or_dual: np.ndarray, shift, radius: float) -> np.ndarray:
    """Integer n with |M (n + shift)| <= radius."""
    bound = int(math.ceil(radius * np.linalg.norm(np.linalg.inv(gens_or_dual), 2))) + 2
    r = np.arange(-bound, bound + 1)
    a, b = np.meshgrid(r, r, indexing="ij")
    pts = np.stack([a.ravel(), b.ravel()], axis=1).astype(float)
    v = (pts + np.asarray(shift)) @ gens_or_dual.T
    return pts[np.linalg.norm(v, axis=1) <= radius]


@dataclass(frozen=True)
class LatticeZeta:
    """Continuation data for one character: eigenvalues and dual-lattice phases."""

    character: Character
    split: float = field(init=False)
    lams: np.ndarray = field(init=False, repr=False)
    dual_sq: np.ndarray = field(init=False, repr=False)
    dual_cos: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ch = self.character
        if ch.has_zero_mode:
            raise ValueError("character has a zero mode; set exclude_zero_mode")
        split = ch.area / (4 * np.pi)  # self-dual point of the theta function
        alpha = np.array(ch.alpha)
        lam_radius = math.sqrt(_EXP_CUT / split)
        pts = _lattice_points(2 * np.pi * ch.dual, alpha, lam_radius)
        lams = np.sum(((pts + alpha) @ (2 * np.pi * ch.dual).T) ** 2, axis=1)
        lams = np.sort(lams[lams > 1e-20])
        m = _lattice_points(ch.gens, (0.0, 0.0), math.sqrt(4 * split * _EXP_CUT))
        m = m[np.any(m != 0, axis=1)]
        sq = np.sum((m @ ch.gens.T) ** 2, axis=1)
        object.__setattr__(self, "split", split)
        object.__setattr__(self, "lams", lams)
        object.__setattr__(self, "dual_sq", sq)
        object.__setattr__(self, "dual_cos", np.cos(2 * np.pi * m @ alpha))

    @property
    def delta(self) -> int:
        return 0 if self.character.acyclic else 1

    def scalar_zeta(self, s) -> complex:
        """Sum over n of lambda_n^{-s}, continued through the Ewald split."""
        s = mpmath.mpc(s)
        if abs(s - 1) < 1e-12:
            raise ValueError("s = 1 is the pole of the lattice zeta function")
        t0 = mpmath.mpf(self.split)
        A = mpmath.mpf(self.character.area)
        if abs(s) < 1e-14:
            return complex(-self.delta)
        direct = mpmath.fsum(mpmath.mpf(l) ** (-s) * mpmath.gammainc(s, mpmath.mpf(l) * t0) for l in self.lams)
        dual = mpmath.fsum(
            mpmath.mpf(c) * (mpmath.mpf(q) / 4) ** (s - 1) * mpmath.gammainc(1 - s, mpmath.mpf(q) / (4 * t0))
            for q, c in zip(self.dual_sq, self.dual_cos))
        total = direct + A * t0 ** (s - 1) / (4 * mpmath.pi * (s - 1)) + A / (4 * mpmath.pi) * dual
        total -= self.delta * t0 ** s / s
        return complex(total * mpmath.rgamma(s))

    def zeta_at_zero(self) -> float:
        return float(-self.delta)

    def zeta_prime_at_zero(self) -> float:
        t0, A = self.split, self.character.area
        reg = float(np.sum(exp1(self.lams * t0)))
        reg -= A / (4 * np.pi * t0)
        reg += A * float(np.sum(self.dual_cos * np.exp(-self.dual_sq / (4 * t0)) / (np.pi * self.dual_sq)))
        return reg - self.delta * (math.log(t0) + EULER_GAMMA)

    def zeta_at_minus_half(self) -> float:
        t0, A = self.split, self.character.area
        x = self.lams * t0
        # Gamma(-1/2, x) and Gamma(3/2, x) in closed form
        g_mhalf = 2 * (np.exp(-x) / np.sqrt(x) - np.sqrt(np.pi) * erfc(np.sqrt(x)))
        y = self.dual_sq / (4 * t0)
        g_3half = 0.5 * np.sqrt(np.pi) * erfc(np.sqrt(y)) + np.sqrt(y) * np.exp(-y)
        total = float(np.sum(np.sqrt(self.lams) * g_mhalf))
        total += A * t0 ** -1.5 / (4 * np.pi * -1.5)
        total += A / (4 * np.pi) * float(np.sum(self.dual_cos * (self.dual_sq / 4) ** -1.5 * g_3half))
        total -= self.delta * t0 ** -0.5 / -0.5
        return total / (-2 * math.sqrt(math.pi))

    def scalar_heat_trace(self, t: float) -> float:
        if not t > 0:
            raise ValueError(f"t must be positive, got {t}")
        return self._heat_direct(t) if t >= HEAT_SWITCH else self._heat_poisson(t)

    def _heat_direct(self, t: float) -> float:
        lams = self.lams if t >= self.split else self._lams_for(t)
        return float(np.sum(np.exp(-lams * t)))

    def _lams_for(self, t: float) -> np.ndarray:
        ch = self.character
        alpha = np.array(ch.alpha)
        pts = _lattice_points(2 * np.pi * ch.dual, alpha, math.sqrt(_EXP_CUT / t))
        lams = np.sum(((pts + alpha) @ (2 * np.pi * ch.dual).T) ** 2, axis=1)
        return lams[lams > 1e-20]

    def _heat_poisson(self, t: float) -> float:
        ch = self.character
        if t <= self.split:
            sq, cs = self.dual_sq, self.dual_cos
        else:
            m = _lattice_points(ch.gens, (0.0, 0.0), math.sqrt(4 * t * _EXP_CUT))
            m = m[np.any(m != 0, axis=1)]
            sq = np.sum((m @ ch.gens.T) ** 2, axis=1)
            cs = np.cos(2 * np.pi * m @ np.array(ch.alpha))
        body = 1.0 + float(np.sum(cs * np.exp(-sq / (4 * t))))
        return ch.area / (4 * np.pi * t) * body - self.delta


@lru_cache(maxsize=64)
def lattice_zeta(character: Character) -> LatticeZeta:
    return LatticeZeta(character)


def _multiplicity(q: int) -> int:
    if q not in FORM_MULTIPLICITY:
        raise ValueError(f"form degree must be 0, 1 or 2, got {q}")
    return FORM_MULTIPLICITY[q]


def epstein_zeta(character: Character, q: int, s) -> complex:
    return _multiplicity(q) * lattice_zeta(character).scalar_zeta(s)


def heat_trace(character: Character, q: int, t: float) -> float:
    return _multiplicity(q) * lattice_zeta(character).scalar_heat_trace(t)


def heat_trace_branches(character: Character, q: int, t: float) -> tuple[float, float]:
    """(direct, Poisson) evaluations at the same t."""
    lz = lattice_zeta(character)
    mq = _multiplicity(q)
    return mq * lz._heat_direct(t), mq * lz._heat_poisson(t)


def mellin_check(character: Character, q: int, s: float, nodes: int = 200) -> float:
    """|Gamma(s) Z(s) - int t^{s-1} Tr e^{-t Delta} dt| / |Gamma(s) Z(s)| for Re s > 1."""
    if not s > 1:
        raise ValueError("Mellin check needs s > 1")
    lz = lattice_zeta(character)
    lam_min = float(lz.lams[0])
    # integrand ~ t^{s-2} at 0 and e^{-lam_min t} at infinity
    lo = math.log(1e-17) / (s - 1)
    hi = math.log(45.0 / lam_min)
    u = np.linspace(lo, hi, nodes)
    vals = np.array([math.exp(s * v) * heat_trace(character, q, math.exp(v)) for v in u])
    integral = np.trapezoid(vals, u)
    exact = math.gamma(s) * epstein_zeta(character, q, s).real
    return abs(integral - exact) / abs(exact)


@dataclass(frozen=True)
class Asymptotics:
    """Large-mu behaviour c1 mu + c0 + c_log log mu of a per-mode function."""

    c1: float = 0.0
    c0: float = 0.0
    c_log: float = 0.0

    def __call__(self, mu: np.ndarray) -> np.ndarray:
        out = self.c1 * mu + self.c0
        if self.c_log:
            out = out + self.c_log * np.log(mu)
        return out


@dataclass(frozen=True)
class RegularizedValue:
    finite_part: float
    counterterms: list[tuple[str, float, float]]
    truncation_error: float
    cutoff_used: float

    def to_dict(self) -> dict:
        return {"finite_part": self.finite_part,
                "counterterms": [list(c) for c in self.counterterms],
                "truncation_error": self.truncation_error,
                "cutoff_used": self.cutoff_used}


class NonDecayingRemainder(ArithmeticError):
    """The subtracted per-mode remainder does not decay over the top modes."""


def regularized_mode_sum(modes: Sequence[ModeQuartet], g: Callable[[np.ndarray], np.ndarray],
                         asym: Asymptotics, character: Character,
                         weight: float = 1.0, cutoff: float | None = None) -> RegularizedValue:
    """Zeta-regularized sum of weight * g(mu) over all modes of the character.

    The remainder g - asym is summed over the enumerated modes; the asymptotic
    part is restored through lattice zeta values:
    sum mu = Z(-1/2), sum 1 = Z(0), sum log mu = -Z'(0)/2.
    """
    mus = np.array([m.mu for m in modes], dtype=float)
    if mus.size == 0:
        raise ValueError("no modes supplied")
    if np.any(mus <= 0):
        raise ValueError("regularized sums need mu > 0 for every mode")
    rem = np.asarray(g(mus), dtype=float) - asym(mus)
    mu_max = float(mus.max()) if cutoff is None else float(cutoff)
    top = mus >= 0.9 * mus.max()
    scale = float(np.max(np.abs(rem)))
    top_max = float(np.max(np.abs(rem[top]))) if top.any() else 0.0
    if top_max > max(1e-3 * scale, 1e-13) and mus.size > 8:
        raise NonDecayingRemainder(
            f"remainder does not decay: {top_max:.3e} on top modes vs {scale:.3e} overall")
    finite = float(math.fsum(rem)) * weight
    lz = lattice_zeta(character)
    counterterms = []
    if asym.c1:
        z = lz.zeta_at_minus_half()
        counterterms.append(("mu", asym.c1, z))
        finite += weight * asym.c1 * z
    if asym.c0:
        z = lz.zeta_at_zero()
        counterterms.append(("1", asym.c0, z))
        finite += weight * asym.c0 * z
    if asym.c_log:
        z = lz.zeta_prime_at_zero()
        counterterms.append(("log mu", asym.c_log, z))
        finite += -0.5 * weight * asym.c_log * z
    # tail beyond the cutoff: mode density A mu/(2 pi) times the top remainder
    density = character.area * mu_max / (2 * np.pi)
    tail = abs(weight) * top_max * density
    rounding = 4 * np.finfo(float).eps * abs(weight) * float(np.sum(np.abs(rem)))
    return RegularizedValue(finite, counterterms, tail + rounding, mu_max)
