import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.boundary_model import Character
from torsionlab.gluing import GluedGeometry, log_det_asymptotics, log_det_vec
from torsionlab.interval_spectra import (IntervalProblem, ScalarBC, dtn_entry, interval_eigenvalues,
                                         log_interval_determinant)
from torsionlab.lattice_zeta import regularized_mode_sum
from torsionlab.oracles import (fd_eigenvalues, fd_log_determinant, fd_tridiagonal, richardson,
                                shooting_dtn, shooting_propagator, tridiagonal_logdet)
from scipy.linalg import expm

BCS = [(a, b) for a in ScalarBC for b in ScalarBC]


def test_richardson_removes_second_order_error():
    exact = 1.25
    values = [exact + 3.0 / n ** 2 for n in (200, 400, 800)]
    assert richardson(values) == pytest.approx(exact, abs=1e-12)


def test_tridiagonal_logdet_matches_dense():
    rng = np.random.default_rng(3)
    d = 4 + rng.random(12)
    lo, up = -rng.random(11), -rng.random(11)
    dense = np.diag(d) + np.diag(lo, -1) + np.diag(up, 1)
    assert tridiagonal_logdet(d, lo, up) == pytest.approx(np.linalg.slogdet(dense)[1], rel=1e-12)


@pytest.mark.parametrize("left,right", BCS)
@pytest.mark.parametrize("mu,L", [(0.5, 1.0), (2.0, 1.5), (0.0, 2.0)])
def test_fd_log_determinant(mu, L, left, right):
    prob = IntervalProblem(mu, L, left, right)
    if mu == 0 and left == right == ScalarBC.N:
        pytest.skip("Neumann zero mode has no determinant")
    assert fd_log_determinant(prob) == pytest.approx(log_interval_determinant(prob), abs=1e-6)


@pytest.mark.parametrize("left,right", BCS)
def test_fd_eigenvalues(left, right):
    prob = IntervalProblem(1.3, 0.7, left, right)
    exact = interval_eigenvalues(prob, 5)
    assert np.allclose(fd_eigenvalues(prob, 5), exact, rtol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 6.0), st.floats(0.1, 3.0), st.sampled_from(list(ScalarBC)))
def test_shooting_dtn(mu, r, far):
    assert shooting_dtn(mu, r, far) == pytest.approx(dtn_entry(mu, r, far), rel=1e-9)


def test_shooting_propagator_matches_expm():
    rng = np.random.default_rng(1)
    M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.allclose(shooting_propagator(M, 0.8), expm(0.8 * M), atol=1e-10)


def test_fd_grid_shape():
    d, lo, up = fd_tridiagonal(IntervalProblem(1.0, 1.0, "N", "D"), 50)
    assert len(lo) == len(up) == len(d) - 1


@pytest.mark.parametrize("left,right", [("D", "D"), ("D", "N"), ("N", "N")])
def test_mode_sum_matches_heat_kernel_oracle(left, right):
    from torsionlab.oracles import heat_kernel_log_det
    ch = Character((0.3, 0.0))
    geom = GluedGeometry(1.0, ch)
    L = 2.0
    rv = regularized_mode_sum(geom.modes(), lambda m: log_det_vec(m, L, left, right),
                              log_det_asymptotics(L, left, right), ch)
    assert rv.finite_part == pytest.approx(heat_kernel_log_det(ch, L, left, right), abs=1e-6)
