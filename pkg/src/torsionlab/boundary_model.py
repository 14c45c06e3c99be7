"""Flat twisted 2-torus boundary: Fourier modes and per-mode form matrices.

Forms on the torus are written in the basis {1, dy1, dy2, dy1^dy2}.  The
even-form boundary fiber of the three-dimensional cylinder is ordered
(tangential, normal) = (Omega^even(Y), Omega^odd(Y)) = basis indices (0, 3, 1, 2).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .reports import VerificationReport

FORM_DEGREE = np.array([0, 1, 1, 2])
EVEN_IDX = [0, 3]
ODD_IDX = [1, 2]
# per-mode multiplicity of degree-q forms on the torus
FORM_MULTIPLICITY = {0: 1, 1: 2, 2: 1}


@dataclass(frozen=True)
class Character:
    """Unitary character of the torus lattice, exp(2 pi i alpha.n).

    ``exclude_zero_mode`` drops n with n + alpha = 0, which is how the
    trivial connection is modelled (its harmonic sector is not resolved).
    """

    alpha: tuple[float, float]
    lattice_gens: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    exclude_zero_mode: bool = False

    def __post_init__(self):
        a = tuple(float(v) for v in self.alpha)
        if len(a) != 2 or not all(0.0 <= v < 1.0 for v in a):
            raise ValueError(f"alpha must be a pair in [0,1), got {self.alpha}")
        g = np.asarray(self.lattice_gens, dtype=float)
        if g.shape != (2, 2):
            raise ValueError("lattice_gens must be 2x2")
        if abs(np.linalg.det(g)) < 1e-12:
            raise ValueError("lattice_gens is singular")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "lattice_gens", tuple(tuple(float(v) for v in row) for row in g))

    @property
    def gens(self) -> np.ndarray:
        return np.array(self.lattice_gens)

    @property
    def dual(self) -> np.ndarray:
        return np.linalg.inv(self.gens).T

    @property
    def area(self) -> float:
        return abs(float(np.linalg.det(self.gens)))

    @property
    def acyclic(self) -> bool:
        return self.alpha != (0.0, 0.0)

    @property
    def has_zero_mode(self) -> bool:
        return not self.acyclic and not self.exclude_zero_mode

    def wavevector(self, n) -> np.ndarray:
        return 2 * np.pi * self.dual @ (np.asarray(n, dtype=float) + np.array(self.alpha))


def form_matrices(k) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Twisted derivative, Hodge star, chirality and parity for wavevector k."""
    k1, k2 = float(k[0]), float(k[1])
    nabla = np.zeros((4, 4), complex)
    nabla[1, 0] = 1j * k1
    nabla[2, 0] = 1j * k2
    nabla[3, 1] = -1j * k2
    nabla[3, 2] = 1j * k1
    hodge = np.zeros((4, 4), complex)
    hodge[3, 0] = 1
    hodge[2, 1] = 1
    hodge[1, 2] = -1
    hodge[0, 3] = 1
    sign = (-1.0) ** (FORM_DEGREE * (FORM_DEGREE + 1) // 2)
    chirality = 1j * hodge @ np.diag(sign)
    beta = np.diag((-1.0) ** FORM_DEGREE).astype(complex)
    return nabla, hodge, chirality, beta


@dataclass(frozen=True)
class ModeQuartet:
    n: tuple[int, int]
    mu: float
    k: np.ndarray = field(repr=False)
    nabla_Y: np.ndarray = field(repr=False)
    hodge_Y: np.ndarray = field(repr=False)
    gamma_Y: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)

    @property
    def B_Y(self) -> np.ndarray:
        return self.gamma_Y @ self.nabla_Y + self.nabla_Y @ self.gamma_Y


def make_mode(character: Character, n) -> ModeQuartet:
    k = character.wavevector(n)
    nabla, hodge, chir, beta = form_matrices(k)
    return ModeQuartet((int(n[0]), int(n[1])), float(np.linalg.norm(k)), k, nabla, hodge, chir, beta)


def mode_from_wavevector(k) -> ModeQuartet:
    """Mode with a prescribed wavevector; used for single-frequency checks."""
    k = np.asarray(k, dtype=float)
    nabla, hodge, chir, beta = form_matrices(k)
    return ModeQuartet((0, 0), float(np.linalg.norm(k)), k, nabla, hodge, chir, beta)


def enumerate_modes(character: Character, cutoff: float) -> list[ModeQuartet]:
    """All modes with mu <= cutoff, ascending in mu then lexicographic in n."""
    if not cutoff > 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")
    g = character.gens
    # |n + alpha| <= |G^T| |k| / 2pi
    bound = int(math.ceil(np.linalg.norm(g, 2) * cutoff / (2 * np.pi))) + 1
    rng = np.arange(-bound - 1, bound + 1)
    n1, n2 = np.meshgrid(rng, rng, indexing="ij")
    pts = np.stack([n1.ravel(), n2.ravel()], axis=1)
    ks = 2 * np.pi * (pts + np.array(character.alpha)) @ character.dual.T
    mus = np.linalg.norm(ks, axis=1)
    keep = mus <= cutoff * (1 + 1e-14)
    if character.exclude_zero_mode:
        keep &= mus > 1e-12
    order = sorted(np.flatnonzero(keep), key=lambda i: (round(float(mus[i]), 10), int(pts[i, 0]), int(pts[i, 1])))
    return [make_mode(character, pts[i]) for i in order]


def modes_csv(modes: list[ModeQuartet]) -> str:
    """Table of distinct frequencies with their lattice points and multiplicity."""
    counts: dict[float, int] = {}
    for m in modes:
        key = round(m.mu, 10)
        counts[key] = counts.get(key, 0) + 1
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["n1", "n2", "mu", "multiplicity"])
    for m in modes:
        w.writerow([m.n[0], m.n[1], repr(m.mu), counts[round(m.mu, 10)]])
    return buf.getvalue()


def to_fiber(op: np.ndarray) -> np.ndarray:
    """Reorder a torus-form operator into (tangential, normal) fiber blocks."""
    idx = EVEN_IDX + ODD_IDX
    return op[np.ix_(idx, idx)]


def image_projector(mat: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    u, s, _ = np.linalg.svd(mat)
    if s[0] == 0:
        return np.zeros_like(mat)
    rank = int((s > rtol * s[0]).sum())
    basis = u[:, :rank]
    return basis @ basis.conj().T


@dataclass(frozen=True)
class TangentialFrame:
    """Boundary data of B = gamma (d/dx + calA) on the 4-dim even-form fiber.

    For mu = 0 the fiber is entirely harmonic: ``harmonic_dim`` is 4 and the
    projectors are None.
    """

    mu: float
    gamma: np.ndarray
    calA: np.ndarray
    proj_minus: np.ndarray | None
    proj_plus: np.ndarray | None
    harmonic_dim: int = 0

    @property
    def splitting(self) -> np.ndarray:
        """proj_minus - proj_plus, the bounded form of the sign of the splitting."""
        if self.proj_minus is None:
            raise ValueError("harmonic frame has no exact/coexact splitting")
        return self.proj_minus - self.proj_plus

    @property
    def hermitian_gamma(self) -> np.ndarray:
        """i*gamma = beta Gamma^Y restricted to the fiber; Hermitian involution."""
        return 1j * self.gamma

    @property
    def normal_sign(self) -> np.ndarray:
        return np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)


def build_tangential_frame(mode: ModeQuartet) -> TangentialFrame:
    g = -1j * mode.beta @ mode.gamma_Y
    gamma = np.zeros((4, 4), complex)
    gamma[:2, :2] = g[np.ix_(EVEN_IDX, EVEN_IDX)]
    gamma[2:, 2:] = g[np.ix_(ODD_IDX, ODD_IDX)]
    conj_nabla = mode.gamma_Y @ mode.nabla_Y @ mode.gamma_Y
    dsum = to_fiber(mode.nabla_Y + conj_nabla)
    calA = np.zeros((4, 4), complex)
    calA[:2, 2:] = -dsum[:2, 2:]
    calA[2:, :2] = -dsum[2:, :2]
    if mode.mu < 1e-12:
        return TangentialFrame(mode.mu, gamma, calA, None, None, harmonic_dim=4)
    pm = image_projector(to_fiber(mode.nabla_Y))
    pp = image_projector(to_fiber(conj_nabla))
    return TangentialFrame(mode.mu, gamma, calA, pm, pp)


def _dev(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def verify_structure(mode: ModeQuartet, tolerance: float = 1e-13) -> VerificationReport:
    """Max-abs residuals of the algebraic identities of one mode."""
    eye = np.eye(4)
    mu2 = mode.mu ** 2
    # identities of degree d in the mode matrices are scaled by max(1, mu)^d so
    # that high modes are judged at the same relative precision as low ones
    s1, s2 = max(1.0, mode.mu), max(1.0, mu2)
    fr = build_tangential_frame(mode)
    res = {
        "beta_sq": _dev(mode.beta @ mode.beta - eye),
        "chirality_sq": _dev(mode.gamma_Y @ mode.gamma_Y - eye),
        "flatness": _dev(mode.nabla_Y @ mode.nabla_Y) / s2,
        "boundary_laplacian": _dev(mode.B_Y @ mode.B_Y - mu2 * eye) / s2,
        "gamma_sq": _dev(fr.gamma @ fr.gamma + eye),
        "gamma_A_anticommute": _dev(fr.gamma @ fr.calA + fr.calA @ fr.gamma) / s1,
        "A_sq": _dev(fr.calA @ fr.calA - mu2 * eye) / s2,
        "A_hermitian": _dev(fr.calA - fr.calA.conj().T) / s1,
    }
    details: dict = {"n": list(mode.n), "mu": mode.mu, "harmonic_dim": fr.harmonic_dim}
    if fr.proj_minus is not None:
        pm, pp = fr.proj_minus, fr.proj_plus
        res["projector_sum"] = _dev(pm + pp - eye)
        res["projector_orthogonal"] = _dev(pm @ pp)
        res["projector_exchange"] = _dev(fr.gamma @ pm @ np.linalg.inv(fr.gamma) - pp)
        w, v = np.linalg.eigh(fr.calA)
        res["A_spectrum"] = _dev(w - mode.mu * np.array([-1, -1, 1, 1])) / s1
        # gamma maps the +mu eigenspace onto the -mu eigenspace
        pos, neg = v[:, 2:], v[:, :2]
        res["gamma_swaps_eigenspaces"] = _dev(neg @ neg.conj().T @ fr.gamma @ pos - fr.gamma @ pos)
        details["eigenspace_dims"] = [int((w < 0).sum()), int((w > 0).sum())]
    return VerificationReport("structure", res, tolerance, details=details)
