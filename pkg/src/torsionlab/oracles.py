"""Independent numerical oracles for the closed forms.

Nothing here uses hyperbolic closed forms: determinants come from finite
difference matrices plus zeta-function reference values, eigenvalues from a
tridiagonal eigensolver, Neumann jumps and first-order propagators from ODE
integration.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal

from .interval_spectra import IntervalProblem, ScalarBC

GRIDS = (200, 400, 800)


def richardson(values, order: int = 2) -> float:
    """Extrapolate values on grids refined by 2, error ~ h^order + h^(2 order)."""
    v = [float(x) for x in values]
    p = order
    while len(v) > 1:
        f = 2.0 ** p
        v = [(f * b - a) / (f - 1) for a, b in zip(v, v[1:])]
        p += order
    return v[0]


def fd_tridiagonal(prob: IntervalProblem, n: int, mu: float | None = None):
    """Second-order FD operator on [0, L] with ghost-point Neumann ends.

    Returns (diag, lower, upper) of the nonsymmetric matrix on the active nodes.
    """
    mu = prob.mu if mu is None else mu
    h = prob.L / n
    lo = 0 if prob.bc_left == ScalarBC.N else 1
    hi = n if prob.bc_right == ScalarBC.N else n - 1
    m = hi - lo + 1
    diag = np.full(m, 2.0 / h**2 + mu**2)
    lower = np.full(m - 1, -1.0 / h**2)
    upper = np.full(m - 1, -1.0 / h**2)
    if prob.bc_left == ScalarBC.N:
        upper[0] = -2.0 / h**2
    if prob.bc_right == ScalarBC.N:
        lower[-1] = -2.0 / h**2
    return diag, lower, upper


def tridiagonal_logdet(diag, lower, upper) -> float:
    """log|det| through the continuant recurrence in ratio form."""
    prev_ratio = diag[0]
    total = math.log(abs(prev_ratio))
    for i in range(1, len(diag)):
        prev_ratio = diag[i] - lower[i - 1] * upper[i - 1] / prev_ratio
        total += math.log(abs(prev_ratio))
    return total


def reference_log_det(prob: IntervalProblem, mu_ref: float) -> float:
    """Zeta-regularized log-determinant at mu_ref from Riemann/Hurwitz zeta data."""
    L = mpmath.mpf(prob.L)
    nn = prob.neumann_ends
    if nn == 0 and mu_ref == 0:
        # eigenvalues (k pi/L)^2, k >= 1
        zeta_p = -2 * mpmath.log(L / mpmath.pi) * mpmath.zeta(0) - 2 * mpmath.zeta(0, derivative=1)
        return float(zeta_p)
    if nn == 1 and mu_ref == 0:
        # eigenvalues ((k + 1/2) pi/L)^2, k >= 0
        z0 = mpmath.zeta(0, 0.5)
        z1 = mpmath.zeta(0, 0.5, derivative=1)
        return float(-2 * mpmath.log(L / mpmath.pi) * z0 - 2 * z1)
    if nn == 2 and mu_ref > 0:
        # zero mode mu_ref^2 times the Dirichlet-type product of (k pi/L)^2 + mu_ref^2
        base = reference_log_det(IntervalProblem(0.0, prob.L, "D", "D"), 0.0)
        c = (mu_ref * L / mpmath.pi) ** 2
        tail = mpmath.nsum(lambda k: mpmath.log(1 + c / k**2), [1, mpmath.inf])
        return float(2 * mpmath.log(mu_ref) + base + tail)
    raise ValueError("unsupported reference configuration")


def fd_log_determinant(prob: IntervalProblem, grids=GRIDS) -> float:
    """log det_zeta(-d^2 + mu^2) from Richardson-extrapolated FD determinant ratios."""
    mu_ref = 1.0 / prob.L if prob.neumann_ends == 2 else 0.0
    ratios = []
    for n in grids:
        a = tridiagonal_logdet(*fd_tridiagonal(prob, n))
        b = tridiagonal_logdet(*fd_tridiagonal(prob, n, mu=mu_ref))
        ratios.append(a - b)
    return richardson(ratios) + reference_log_det(prob, mu_ref)


def fd_eigenvalues(prob: IntervalProblem, count: int, grids=GRIDS) -> np.ndarray:
    """Lowest eigenvalues from symmetrized FD matrices, Richardson-extrapolated."""
    per_grid = []
    for n in grids:
        d, lo, up = fd_tridiagonal(prob, n)
        # the ghost-point rows are symmetrized by a diagonal similarity
        off = -np.sqrt(lo * up)
        w = eigh_tridiagonal(d, off, eigvals_only=True, select="i", select_range=(0, count - 1))
        per_grid.append(w)
    stacked = np.array(per_grid)
    return np.array([richardson(stacked[:, j]) for j in range(count)])


def shooting_dtn(mu: float, r: float, bc_far: ScalarBC) -> float:
    """phi'(r)/phi(r) for phi'' = mu^2 phi with the stated condition at x = 0."""
    y0 = [0.0, 1.0] if ScalarBC(bc_far) == ScalarBC.D else [1.0, 0.0]
    sol = solve_ivp(lambda x, y: [y[1], mu**2 * y[0]], (0.0, r), y0,
                    method="DOP853", rtol=1e-13, atol=1e-14)
    phi, dphi = sol.y[:, -1]
    return float(dphi / phi)


def shooting_propagator(M: np.ndarray, L: float) -> np.ndarray:
    """Fundamental matrix of phi' = M phi over [0, L] by ODE integration."""
    n = M.shape[0]

    def rhs(x, y):
        Y = y.reshape(2, n, n)
        Z = Y[0] + 1j * Y[1]
        dZ = M @ Z
        return np.concatenate([dZ.real.ravel(), dZ.imag.ravel()])

    y0 = np.concatenate([np.eye(n).ravel(), np.zeros(n * n)])
    sol = solve_ivp(rhs, (0.0, L), y0, method="DOP853", rtol=1e-12, atol=1e-13)
    Y = sol.y[:, -1].reshape(2, n, n)
    return Y[0] + 1j * Y[1]


def heat_kernel_log_det(character, L: float, bc_left: ScalarBC, bc_right: ScalarBC,
                        weight: float = 1.0) -> float:
    """log det of -d^2/dx^2 + B_Y^2 on [0, L] x torus from its heat trace.

    The heat trace factorizes into torus and interval theta functions.  Below
    t_c both are written as (power-law part) + (exponentially small part); the
    power-law part is integrated analytically, so -zeta'(0) needs only the
    exponentially small products on (0, t_c] and the full trace beyond.
    """
    from scipy.integrate import quad
    from .lattice_zeta import lattice_zeta

    lz = lattice_zeta(character)
    A = character.area
    d = lz.delta
    nn = (ScalarBC(bc_left) == ScalarBC.N) + (ScalarBC(bc_right) == ScalarBC.N)
    shift, start = {0: (0.0, 1), 1: (0.5, 0), 2: (0.0, 0)}[nn]
    edge = {0: -0.5, 1: 0.0, 2: 0.5}[nn]
    t_c = min(lz.split, (L / np.pi) ** 2)
    m = np.arange(1, 40)
    sign = (-1.0) ** m if nn == 1 else np.ones(m.size)

    def interval_small(t):
        return L / math.sqrt(np.pi * t) * float(np.sum(sign * np.exp(-(m * L) ** 2 / t)))

    def interval_theta(t):
        k = np.arange(start, start + 60) + shift
        return float(np.sum(np.exp(-(k * np.pi / L) ** 2 * t)))

    def torus_small(t):
        return A / (4 * np.pi * t) * float(np.sum(lz.dual_cos * np.exp(-lz.dual_sq / (4 * t))))

    def inner(u):
        t = math.exp(u)
        a = A / (4 * np.pi * t) - d
        b = L / (2 * math.sqrt(np.pi * t)) + edge
        ei, ey = interval_small(t), torus_small(t)
        return a * ei + b * ey + ei * ey

    def outer(u):
        t = math.exp(u)
        return interval_theta(t) * lz.scalar_heat_trace(t)

    # (A/4 pi t - delta)(L/(2 sqrt(pi t)) + edge) = sum c_a t^a
    coeffs = {-1.5: A * L / (8 * np.pi ** 1.5), -1.0: A * edge / (4 * np.pi),
              -0.5: -d * L / (2 * np.sqrt(np.pi)), 0.0: -d * edge}
    lc = math.log(t_c)
    g0 = quad(inner, lc - 12.0, lc, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    g0 += quad(outer, lc, 8.0, epsabs=1e-15, epsrel=1e-13, limit=400)[0]
    zeta_prime = g0 + sum(c * t_c ** a / a for a, c in coeffs.items() if a != 0.0)
    zeta_prime += coeffs[0.0] * (lc + EULER)
    return -weight * zeta_prime


EULER = float(mpmath.euler)
