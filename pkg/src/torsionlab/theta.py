"""Rotation family on the doubled bundle E + E, one Fourier mode at a time.

Matrices act on C^2 (copy index) tensored with the 4-dim even-form boundary
fiber.  With R(theta) = [[sin, cos], [cos, -sin]] the chirality of the doubled
operator is kron(R, gamma); the exact/coexact splitting S = proj_minus -
proj_plus and the rel/abs unitary give the two endpoint boundary conditions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .boundary_model import ModeQuartet, TangentialFrame, build_tangential_frame
from .reports import VerificationReport

I8 = np.eye(8, dtype=complex)
COPY_SWAP = np.array([[0.0, -1.0], [1.0, 0.0]])
# block matrix [[0, I], [-I, 0]] in the copy decomposition
COPY_SYMPLECTIC = np.kron(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.eye(4))


def rotation(theta: float) -> np.ndarray:
    s, c = math.sin(theta), math.cos(theta)
    return np.array([[s, c], [c, -s]])


def rotation_prime(theta: float) -> np.ndarray:
    s, c = math.sin(theta), math.cos(theta)
    return np.array([[c, -s], [-s, -c]])


@dataclass(frozen=True)
class ThetaFrame:
    theta: float
    mu: float
    gamma: np.ndarray
    calA: np.ndarray
    splitting: np.ndarray
    gamma_tilde: np.ndarray
    A_tilde: np.ndarray
    frakA: np.ndarray
    frakA_prime: np.ndarray
    frakB: np.ndarray
    P_path: np.ndarray
    P_tilde: np.ndarray
    T_mat: np.ndarray
    U_mat: np.ndarray
    pi_plus: np.ndarray
    pi_minus: np.ndarray

    @property
    def X(self) -> np.ndarray:
        """B* A(theta); squares to -Id."""
        return self.frakB.conj().T @ self.frakA

    def T_prime(self) -> np.ndarray:
        """Exact theta-derivative of T = i theta X pi_plus."""
        dX = self.frakB.conj().T @ self.frakA_prime
        dpi = -0.5j * np.kron(rotation_prime(self.theta), self.gamma)
        return 1j * self.X @ self.pi_plus + 1j * self.theta * (dX @ self.pi_plus + self.X @ dpi)

    def exp_phase(self, phi: float, sign: int = 1) -> np.ndarray:
        """e^{+-i phi T} from the closed form using X^2 = -Id."""
        a = phi * self.theta
        return (math.cos(a) * I8 - sign * math.sin(a) * self.X) @ self.pi_plus + self.pi_minus


def frame_from_fiber(fiber: TangentialFrame, theta: float,
                     splitting: np.ndarray | None = None) -> ThetaFrame:
    """Assemble the rotation family; ``splitting`` overrides S (negative controls)."""
    if not 0.0 <= theta <= math.pi / 2 + 1e-15:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    if splitting is None:
        if fiber.proj_minus is None:
            raise ValueError("mu = 0 mode: the exact/coexact splitting is undefined")
        splitting = fiber.splitting
    R, Rp = rotation(theta), rotation_prime(theta)
    s, c = math.sin(theta), math.cos(theta)
    gt = np.kron(R, fiber.gamma)
    At = np.kron(np.eye(2), fiber.calA)
    fA = np.kron(R, splitting)
    fAp = np.kron(Rp, splitting)
    fB = np.kron(COPY_SWAP, fiber.normal_sign @ fiber.hermitian_gamma)
    P = fA * s + fB * c
    pip = 0.5 * (I8 - 1j * gt)
    pim = 0.5 * (I8 + 1j * gt)
    Pt = 0.5 * (I8 + P @ pip + P.conj().T @ pim)
    X = fB.conj().T @ fA
    U = (c * I8 - s * X) @ pip + pim
    T = 1j * theta * X @ pip
    return ThetaFrame(theta, fiber.mu, fiber.gamma, fiber.calA, splitting, gt, At, fA, fAp, fB,
                      P, Pt, T, U, pip, pim)


def build_frame(mode: ModeQuartet, theta: float) -> ThetaFrame:
    return frame_from_fiber(build_tangential_frame(mode), theta)


def _dev(a: np.ndarray) -> float:
    return float(np.max(np.abs(a)))


def _scaled(a: np.ndarray, power: int, mu: float) -> float:
    return _dev(a) / max(1.0, mu) ** power


def symbol_square_residual(fr: ThetaFrame, k: float) -> float:
    """(gamma~(ik + A~))^2 against (k^2 + mu^2) Id."""
    sym = fr.gamma_tilde @ (1j * k * I8 + fr.A_tilde)
    return _dev(sym @ sym - (k * k + fr.mu ** 2) * I8) / max(1.0, k * k + fr.mu ** 2)


def lemma_suite(fr: ThetaFrame, tolerance: float = 1e-12, ks=(0.7, 3.1)) -> VerificationReport:
    gt, At, fA, fAp, fB, P, Pt, T = (fr.gamma_tilde, fr.A_tilde, fr.frakA, fr.frakA_prime,
                                     fr.frakB, fr.P_path, fr.P_tilde, fr.T_mat)
    mu = fr.mu
    A2 = At @ At
    ctx = frame_from_fiber_like(fr, 0.0), frame_from_fiber_like(fr, math.pi / 2)
    f0, f90 = ctx
    u_ra, u_mp = f0.frakB, f90.frakA
    graph0 = (I8 + u_ra) @ f0.pi_plus
    graph90 = (I8 + u_mp) @ f90.pi_plus
    res = {
        # endpoint unitaries and their graphs
        "U_rel_abs_unitary": _dev(u_ra.conj().T @ u_ra - I8),
        "U_rel_abs_skew": _dev(u_ra.conj().T + u_ra),
        "U_minus_plus_unitary": _dev(u_mp.conj().T @ u_mp - I8),
        "U_minus_plus_selfadjoint": _dev(u_mp.conj().T - u_mp),
        "U_rel_abs_anticommutes_gamma0": _dev(u_ra @ f0.gamma_tilde + f0.gamma_tilde @ u_ra),
        "U_minus_plus_anticommutes_gamma90": _dev(u_mp @ f90.gamma_tilde + f90.gamma_tilde @ u_mp),
        "graph_rel_abs": _dev(f0.P_tilde @ graph0 - graph0),
        "graph_minus_plus": _dev(f90.P_tilde @ graph90 - graph90),
        "graph_rank": abs(np.trace(Pt).real - 4.0),
        # rotation algebra
        "gamma_tilde_sq": _dev(gt @ gt + I8),
        "gamma_tilde_A_anticommute": _scaled(gt @ At + At @ gt, 1, mu),
        "frakA_sq": _dev(fA @ fA - I8),
        "frakB_sq": _dev(fB @ fB + I8),
        "frakA_selfadjoint": _dev(fA.conj().T - fA),
        "frakB_skew": _dev(fB.conj().T + fB),
        "frakA_anticommutes_gamma": _dev(fA @ gt + gt @ fA),
        "frakB_anticommutes_gamma": _dev(fB @ gt + gt @ fB),
        "frakA_prime_commutes_gamma": _dev(fAp @ gt - gt @ fAp),
        "frakA_prime_frakA": _dev(fAp @ fA - COPY_SYMPLECTIC),
        "frakA_frakA_prime": _dev(fA @ fAp + COPY_SYMPLECTIC),
        "frakA_commutes_frakB": _dev(fA @ fB - fB @ fA),
        "frakA_prime_commutes_frakB": _dev(fAp @ fB - fB @ fAp),
        "P_unitary": _dev(P.conj().T @ P - I8),
        "P_adjoint_formula": _dev(P.conj().T - (fA * math.sin(fr.theta) - fB * math.cos(fr.theta))),
        "P_anticommutes_gamma": _dev(P @ gt + gt @ P),
        "frakA_anticommutes_A": _scaled(fA @ At + At @ fA, 1, mu),
        "frakB_commutes_A": _scaled(fB @ At - At @ fB, 1, mu),
        "P_adjoint_A": _scaled(P.conj().T @ At + At @ P, 1, mu),
        # projection path
        "P_tilde_idempotent": _dev(Pt @ Pt - Pt),
        "P_tilde_selfadjoint": _dev(Pt.conj().T - Pt),
        "gamma_P_tilde_exchange": _dev(gt @ Pt - (I8 - Pt) @ gt),
        "P_tilde_commutes_A_sq": _scaled(Pt @ A2 - A2 @ Pt, 2, mu),
        "P_tilde_A_P_tilde": _scaled(Pt @ At @ Pt, 1, mu),
        "complement_A_complement": _scaled((I8 - Pt) @ At @ (I8 - Pt), 1, mu),
        # T(theta)
        "T_commutes_gamma": _dev(T @ gt - gt @ T),
        "T_commutes_A_sq": _scaled(T @ A2 - A2 @ T, 2, mu),
        "X_sq": _dev(fr.X @ fr.X + I8),
        "T_prime_formula": _dev(fr.T_prime() - (1j * fr.X @ fr.pi_plus
                                                + 0.5j * fr.theta * fB.conj().T @ fAp)),
        # endpoints
        "P_at_zero": _dev(f0.P_path - f0.frakB),
        "P_at_half_pi": _dev(f90.P_path - f90.frakA),
    }
    for k in ks:
        res[f"symbol_square_k{k}"] = symbol_square_residual(fr, k)
    b_sym = lambda f, k: f.gamma_tilde @ (1j * k * I8 + f.A_tilde)
    single = lambda k: fr.gamma @ (1j * k * np.eye(4) + fr.calA)
    res["symbol_at_zero"] = _dev(b_sym(f0, ks[0]) - np.kron(np.array([[0, 1], [1, 0]]), single(ks[0])))
    res["symbol_at_half_pi"] = _dev(b_sym(f90, ks[0]) - np.kron(np.diag([1, -1]), single(ks[0])))
    details = {"theta": fr.theta, "mu": mu,
               "T_A_commutator_norm": float(np.linalg.norm(T @ At - At @ T, 2))}
    return VerificationReport("theta-lemmas", res, tolerance, details=details)


def frame_from_fiber_like(fr: ThetaFrame, theta: float) -> ThetaFrame:
    fiber = TangentialFrame(fr.mu, fr.gamma, fr.calA, None, None, 0)
    return frame_from_fiber(fiber, theta, splitting=fr.splitting)


def conjugation_check(fr: ThetaFrame, tolerance: float = 1e-12) -> VerificationReport:
    """U P~(0) U* = P~(theta) and e^{iT} = U, each by two routes.

    The conjugated projection is read in the theta-dependent eigen-decomposition
    of gamma~(theta): P~(0) := (I + B pi_plus + B* pi_minus)/2.  The literal
    theta = 0 projection is reported as a diagnostic.
    """
    U = fr.U_mat
    p0_theta = 0.5 * (I8 + fr.frakB @ fr.pi_plus + fr.frakB.conj().T @ fr.pi_minus)
    literal = frame_from_fiber_like(fr, 0.0).P_tilde
    e_pade = expm(1j * fr.T_mat)
    e_closed = fr.exp_phase(1.0, +1)
    res = {
        "conjugation": _dev(U @ p0_theta @ U.conj().T - fr.P_tilde),
        "exp_iT_pade": _dev(e_pade - U),
        "exp_iT_closed_form": _dev(e_closed - U),
        "exp_closed_vs_pade": _dev(e_closed - e_pade),
        "U_unitary": _dev(U.conj().T @ U - I8),
        "X_sq": _dev(fr.X @ fr.X + I8),
        "inverse_phase": _dev(fr.exp_phase(1.0, -1) @ e_closed - I8),
    }
    tol = {"exp_closed_vs_pade": 1e-11, "exp_iT_pade": 1e-11}
    details = {"theta": fr.theta, "mu": fr.mu,
               "literal_zero_projection_residual": _dev(U @ literal @ U.conj().T - fr.P_tilde)}
    return VerificationReport("theta-conjugation", res, tolerance, tol, details)


def cyl_heat_kernel(fr: ThetaFrame, t: float, x: float, y: float) -> np.ndarray:
    """Heat kernel of B~(theta)^2 on the half-cylinder with the P~(theta) condition."""
    if not t > 0:
        raise ValueError("t must be positive")
    pref = math.exp(-t * fr.mu ** 2) / math.sqrt(4 * math.pi * t)
    return pref * (math.exp(-(x - y) ** 2 / (4 * t)) * I8
                   + (I8 - 2 * fr.P_tilde) * math.exp(-(x + y) ** 2 / (4 * t)))


def heat_kernel_checks(fr: ThetaFrame, t: float, y: float, x: float = 0.3, h: float = 1e-4) -> dict[str, float]:
    """Boundary conditions at x = 0 and the heat equation by central differences."""
    K0 = cyl_heat_kernel(fr, t, 0.0, y)
    dK0 = (cyl_heat_kernel(fr, t, h, y) - cyl_heat_kernel(fr, t, -h, y)) / (2 * h)
    # exact x-derivative at 0, to avoid finite-difference noise in the second condition
    pref = math.exp(-t * fr.mu ** 2) / math.sqrt(4 * math.pi * t)
    g = math.exp(-y * y / (4 * t))
    dK0_exact = pref * g * (y / (2 * t)) * (I8 - (I8 - 2 * fr.P_tilde))
    K = lambda tt, xx: cyl_heat_kernel(fr, tt, xx, y)
    dt = (K(t + h * t, x) - K(t - h * t, x)) / (2 * h * t)
    dxx = (K(t, x + h) - 2 * K(t, x) + K(t, x - h)) / h ** 2
    scale = max(1.0, _dev(K(t, x)) * (1 + fr.mu ** 2 + 1 / t))
    return {
        "kernel_boundary": _dev(fr.P_tilde @ K0),
        "kernel_boundary_derivative": _dev(fr.P_tilde @ fr.gamma_tilde @ (dK0_exact + fr.A_tilde @ K0)),
        "kernel_derivative_fd": _dev(dK0 - dK0_exact) / max(1.0, _dev(dK0_exact)),
        "heat_equation": _dev(dt - dxx + fr.mu ** 2 * K(t, x)) / scale,
    }


# cutoff and collar profiles for the x-dependent traces

def _smooth_step(x: np.ndarray, a: float, b: float) -> np.ndarray:
    u = np.clip((np.asarray(x, float) - a) / (b - a), 0.0, 1.0)
    f = lambda v: np.where(v > 0, np.exp(-1.0 / np.where(v > 0, v, 1.0)), 0.0)
    return f(u) / (f(u) + f(1 - u))


def collar_cutoff(x):
    """phi(x) = (1 + cos(pi x))/2 on [0, 1], zero beyond."""
    x = np.asarray(x, float)
    return np.where(x < 1.0, 0.5 * (1 + np.cos(np.pi * np.minimum(x, 1.0))), 0.0)


def collar_cutoff_prime(x):
    x = np.asarray(x, float)
    return np.where(x < 1.0, -0.5 * np.pi * np.sin(np.pi * np.minimum(x, 1.0)), 0.0)


def boundary_weight(x):
    """psi_1: one near the boundary, zero past x = 4/7."""
    return 1.0 - _smooth_step(x, 3 / 7, 4 / 7)


def q_tilde(fr: ThetaFrame, x: float, nodes: int = 48) -> np.ndarray:
    """int_1^x phi'(u) e^{i phi T} B* A' e^{-i phi T} du, as an integral in phi."""
    upper = float(collar_cutoff(x))
    if upper == 0.0:
        return np.zeros((8, 8), complex)
    v, w = np.polynomial.legendre.leggauss(nodes)
    v = 0.5 * upper * (v + 1)
    w = 0.5 * upper * w
    core = fr.frakB.conj().T @ fr.frakA_prime
    return sum(wi * fr.exp_phase(vi, +1) @ core @ fr.exp_phase(vi, -1) for vi, wi in zip(v, w))


def q_tilde_direct(fr: ThetaFrame, x: float, nodes: int = 64) -> np.ndarray:
    """Same integral in the collar variable u with the Pade exponential."""
    u, w = np.polynomial.legendre.leggauss(nodes)
    u = x + (1 - x) * 0.5 * (u + 1)
    w = (1 - x) * 0.5 * w
    core = fr.frakB.conj().T @ fr.frakA_prime
    acc = np.zeros((8, 8), complex)
    for ui, wi in zip(u, w):
        ph = float(collar_cutoff(ui))
        acc += wi * float(collar_cutoff_prime(ui)) * expm(1j * ph * fr.T_mat) @ core @ expm(-1j * ph * fr.T_mat)
    return -acc


def _collar_nodes(t: float, nodes: int = 64):
    top = min(1.0, 10 * math.sqrt(t))
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * top * (x + 1), 0.5 * top * w


def boundary_weights(t: float, nodes: int = 96) -> dict[str, float]:
    """The three scalar x-integrals multiplying the first decomposition."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (4 / 7) * (x + 1)
    w = 0.5 * (4 / 7) * w
    psi = boundary_weight(x)
    norm = 1 / math.sqrt(4 * math.pi * t)
    return {"a": norm * float(np.dot(w, -(x / t) * np.exp(-x * x / t) * psi)),
            "b": norm * float(np.dot(w, psi)),
            "c": norm * float(np.dot(w, psi * np.exp(-x * x / t)))}


def trace_pieces(fr: ThetaFrame, t: float, x_samples=(0.05, 0.3, 0.7)) -> dict[str, complex]:
    """Matrix traces whose vanishing makes the eta variation local and zero."""
    e = math.exp(-t * fr.mu ** 2)
    gt, At, fA, fAp, fB, Pt = (fr.gamma_tilde, fr.A_tilde, fr.frakA, fr.frakA_prime,
                               fr.frakB, fr.P_tilde)
    rot = np.kron(rotation_prime(fr.theta), fr.gamma)
    rot_A = np.kron(rotation_prime(fr.theta), fr.gamma @ fr.calA)
    refl = I8 - 2 * Pt
    X = fr.X
    Tp = fr.T_prime()
    XP = X @ fr.pi_plus
    GA = gt @ At
    tr = lambda m: complex(np.trace(m)) * e
    out: dict[str, complex] = {
        "a_reflection": tr(rot @ refl),
        "b_A": tr(rot_A),
        "c_A_reflection": tr(rot_A @ refl),
        "a_frakA": tr(rot @ fA),
        "a_frakB_gamma": tr(rot @ fB @ gt),
        "d_gamma_T_prime": tr(gt @ Tp),
        "e_X": tr(X),
        "e_gamma_X": tr(gt @ X),
        "f_A_frakB_adjoint": tr(At @ fB.conj().T),
        "f_A_frakA_gamma": tr(At @ fA @ gt),
        "frakA_prime": tr(fAp),
        "frakA_prime_gamma": tr(fAp @ gt),
        "frakB_adjoint_symplectic_gamma": tr(fB.conj().T @ COPY_SYMPLECTIC @ gt),
        "symplectic_frakB": tr(COPY_SYMPLECTIC @ fB),
        "g_commutator_X": tr((GA @ XP - XP @ GA) @ Pt),
    }
    qs = [q_tilde(fr, xs) for xs in x_samples]
    out["g_commutator_Q"] = max((tr((GA @ q - q @ GA) @ Pt) for q in qs), key=abs)
    out["gamma_Q_reflection"] = max((tr(gt @ q @ refl) for q in qs), key=abs)
    out["I2_integrand"] = max((tr(gt @ fr.exp_phase(float(collar_cutoff(xs)), 1) @ Tp
                                  @ fr.exp_phase(float(collar_cutoff(xs)), -1) @ refl)
                               for xs in x_samples), key=abs)
    return out


def chirality_trace_check(mode: ModeQuartet, t: float) -> float:
    """Tr(Gamma^Y e^{-t B_Y^2}) on even plus odd torus forms."""
    e = math.exp(-t * mode.mu ** 2)
    G = mode.gamma_Y
    return abs((np.trace(G[np.ix_([0, 3], [0, 3])]) + np.trace(G[np.ix_([1, 2], [1, 2])])) * e)


def eta_variation_integrand(fr: ThetaFrame, t: float, nodes: int = 64) -> dict[str, float]:
    """Per-mode small-time surrogate of Tr(dB^/dtheta e^{-t B^2}) split into its pieces."""
    e = math.exp(-t * fr.mu ** 2)
    gt, At, Pt = fr.gamma_tilde, fr.A_tilde, fr.P_tilde
    refl = I8 - 2 * Pt
    Tp = fr.T_prime()
    XP = fr.X @ fr.pi_plus
    GA = gt @ At
    norm = 1 / math.sqrt(4 * math.pi * t)
    w = boundary_weights(t)
    rot = np.kron(rotation_prime(fr.theta), fr.gamma)
    rot_A = np.kron(rotation_prime(fr.theta), fr.gamma @ fr.calA)
    first = (w["a"] * np.trace(rot @ refl) + w["b"] * np.trace(rot_A)
             + w["c"] * np.trace(rot_A @ refl)) * e
    # integral of phi' over [0, 1] is -1
    i1 = 1j * norm * -1.0 * np.trace(gt @ Tp) * e
    xs, ws = _collar_nodes(t, nodes)
    i2 = ii = iii = 0.0
    for x, wx in zip(xs, ws):
        g = math.exp(-x * x / t)
        ph = float(collar_cutoff(x))
        dph = float(collar_cutoff_prime(x))
        q = q_tilde(fr, x, 32)
        conj = fr.exp_phase(ph, 1) @ Tp @ fr.exp_phase(ph, -1)
        i2 += wx * 1j * norm * dph * g * np.trace(gt @ conj @ refl) * e
        ii += wx * fr.theta * norm * (x / t) * g * np.trace(gt @ q @ refl) * e
        iii += wx * norm * g * (fr.theta * np.trace((GA @ q - q @ GA) @ Pt)
                                + 2 * ph * np.trace((GA @ XP - XP @ GA) @ Pt)) * e
    return {"first_decomposition": complex(first), "I1": complex(i1), "I2": complex(i2),
            "II": complex(ii), "III": complex(iii)}


class FitRefused(ArithmeticError):
    pass


def fit_small_time(t_grid, values) -> dict[str, float]:
    """Least squares against c1 t^-1/2 log t + c0 t^-1/2 + c."""
    t = np.asarray(t_grid, float)
    if t.size < 8:
        raise FitRefused("small-time fit needs at least 8 grid points")
    v = np.asarray(values)
    basis = np.stack([t ** -0.5 * np.log(t), t ** -0.5, np.ones_like(t)], axis=1)
    out = {}
    for part, arr in (("re", v.real), ("im", v.imag)):
        coef, *_ = np.linalg.lstsq(basis, arr, rcond=None)
        out[part] = coef
    c1 = complex(out["re"][0], out["im"][0])
    c0 = complex(out["re"][1], out["im"][1])
    c = complex(out["re"][2], out["im"][2])
    return {"a_log": abs(c1), "a_half": abs(c0), "a_const": abs(c),
            "a_log_signed": c1, "a_half_signed": c0}


def eta_variation_coefficients(frames, t_grid) -> dict:
    """Fit the mode-summed variation trace over t_grid; both t^-1/2 coefficients should vanish."""
    t_grid = np.asarray(t_grid, float)
    if t_grid.size < 8:
        raise FitRefused("small-time fit needs at least 8 grid points")
    totals = []
    for t in t_grid:
        acc = 0.0 + 0.0j
        for fr in frames:
            acc += sum(eta_variation_integrand(fr, float(t)).values())
        totals.append(acc)
    fit = fit_small_time(t_grid, totals)
    fit["max_abs_total"] = float(np.max(np.abs(totals)))
    fit["lemma_coefficient"] = 4 / math.sqrt(math.pi) * fit["a_log"]
    return fit


def harmonic_control_frames(thetas=(math.pi / 4,)) -> list[ThetaFrame]:
    """Zero-frequency fiber with the tangential/normal sign as a stand-in splitting.

    The sign does not anticommute with gamma, so the trace identities that rely
    on acyclicity fail; the fit must see a nonzero t^-1/2 coefficient.
    """
    from .boundary_model import mode_from_wavevector
    fiber = build_tangential_frame(mode_from_wavevector((0.0, 0.0)))
    return [frame_from_fiber(fiber, th, splitting=fiber.normal_sign) for th in thetas]


def green_formula_defect(fr: ThetaFrame, n: int, length: float = 1.0) -> float:
    """<B~f, g> - <f, B~g> - <f(0), gamma~ g(0)> with trapezoid quadrature and central differences.

    f and g are smooth and vanish at x = length; the defect is O(h^2).
    """
    x = np.linspace(0.0, length, n + 1)
    h = x[1] - x[0]
    rng = np.random.default_rng(7)
    a = rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
    bump = np.cos(0.5 * np.pi * x / length)
    f = bump[:, None] * (a[0][None, :] * np.exp(np.sin(x))[:, None])
    g = bump[:, None] * (a[1][None, :] * np.cos(2 * x)[:, None])

    def apply(u):
        du = np.gradient(u, h, axis=0, edge_order=2)
        return (du + u @ fr.A_tilde.T) @ fr.gamma_tilde.T

    w = np.full(n + 1, h)
    w[0] = w[-1] = h / 2
    inner = lambda u, v: complex(np.sum(w[:, None] * u.conj() * v))
    return abs(inner(apply(f), g) - inner(f, apply(g)) - complex(f[0].conj() @ fr.gamma_tilde @ g[0]))


def green_formula_order(fr: ThetaFrame, grids=(100, 200, 400, 800)) -> tuple[list[float], float]:
    """Defects on refined grids and the observed convergence order."""
    errs = [green_formula_defect(fr, n) for n in grids]
    order = float(np.polyfit(np.log(grids), np.log(errs), 1)[0])
    return errs, -order
