import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.boundary_model import Character, enumerate_modes
from torsionlab.lattice_zeta import (Asymptotics, NonDecayingRemainder, epstein_zeta, heat_trace,
                                     heat_trace_branches, lattice_zeta, mellin_check, regularized_mode_sum)

CHARS = [Character((0.3, 0.0)), Character((0.5, 0.5)), Character((0.2, 0.7), ((1.0, 0.0), (0.3, 1.2)))]


def test_trivial_character_zeta_at_zero():
    ch = Character((0.0, 0.0), exclude_zero_mode=True)
    assert epstein_zeta(ch, 0, 0.0).real == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("q,mult", [(0, 1), (1, 2), (2, 1)])
def test_acyclic_zeta_at_zero_vanishes(q, mult):
    assert abs(epstein_zeta(Character((0.3, 0.0)), q, 0.0)) < 1e-14


def test_zero_mode_must_be_excluded():
    with pytest.raises(ValueError):
        lattice_zeta(Character((0.0, 0.0)))


def test_pole_rejected():
    with pytest.raises(ValueError):
        epstein_zeta(CHARS[0], 0, 1.0)


def test_invalid_degree_rejected():
    with pytest.raises(ValueError):
        heat_trace(CHARS[0], 3, 1.0)


@pytest.mark.parametrize("ch", CHARS)
def test_zeta_at_two_matches_brute_force(ch):
    mus = np.array([m.mu for m in enumerate_modes(ch, 200.0)])
    direct = float(np.sum(mus ** -4.0))
    # tail of sum lambda^-2 over lambda > R^2 is A/(4 pi R^2) with R^2 = 4e4
    direct += ch.area / (4 * math.pi * 4e4)
    assert epstein_zeta(ch, 0, 2.0).real == pytest.approx(direct, rel=1e-6)


@pytest.mark.parametrize("ch", CHARS)
def test_zeta_prime_at_zero_matches_numerical_derivative(ch):
    lz = lattice_zeta(ch)
    h = 1e-5
    fd = (lz.scalar_zeta(h).real - lz.scalar_zeta(-h).real) / (2 * h)
    assert lz.zeta_prime_at_zero() == pytest.approx(fd, abs=1e-8)


@pytest.mark.parametrize("ch", CHARS)
def test_zeta_at_minus_half_closed_form(ch):
    lz = lattice_zeta(ch)
    assert lz.zeta_at_minus_half() == pytest.approx(lz.scalar_zeta(-0.5).real, abs=1e-10)


def test_large_time_heat_trace_is_lowest_mode_shell():
    ch = Character((0.3, 0.0))
    lam1 = (2 * math.pi * 0.3) ** 2
    lam2 = (2 * math.pi * 0.7) ** 2
    expect = math.exp(-10 * lam1) + math.exp(-10 * lam2)
    assert heat_trace(ch, 0, 10.0) == pytest.approx(expect, rel=1e-6)
    assert heat_trace(ch, 0, 10.0) == pytest.approx(3.43e-16, rel=0.01)


@pytest.mark.parametrize("t", [1e-4, 1e-3])
def test_small_time_heat_trace(t):
    assert heat_trace(Character((0.3, 0.0)), 1, t) == pytest.approx(2 / (4 * math.pi * t), rel=1e-10)


@pytest.mark.parametrize("ch", CHARS)
@pytest.mark.parametrize("t", [0.05, 0.16, 0.4])
def test_heat_trace_branches_agree(ch, t):
    direct, poisson = heat_trace_branches(ch, 0, t)
    assert abs(direct - poisson) <= 1e-12 * max(1.0, abs(direct))


@pytest.mark.parametrize("ch", CHARS)
@pytest.mark.parametrize("s", [1.5, 2.0, 3.0])
def test_mellin_consistency(ch, s):
    assert mellin_check(ch, 0, s) < 1e-8


def test_mellin_needs_convergent_strip():
    with pytest.raises(ValueError):
        mellin_check(CHARS[0], 0, 0.5)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 0.95))
def test_zeta_at_zero_vanishes_for_random_acyclic_characters(a1, a2):
    assert abs(lattice_zeta(Character((a1, a2))).scalar_zeta(0.0)) < 1e-14


def test_regularized_sum_of_mu_is_zeta_value():
    ch = CHARS[0]
    modes = enumerate_modes(ch, 40 * math.pi)
    rv = regularized_mode_sum(modes, lambda mu: mu, Asymptotics(c1=1.0), ch)
    assert rv.finite_part == pytest.approx(lattice_zeta(ch).zeta_at_minus_half(), abs=1e-12)


def test_regularized_sum_is_cutoff_stable():
    ch = CHARS[0]
    g = lambda mu: np.log(2 * mu) + np.log1p(np.exp(-2 * mu))
    asym = Asymptotics(c0=math.log(2.0), c_log=1.0)
    a = regularized_mode_sum(enumerate_modes(ch, 40 * math.pi), g, asym, ch)
    b = regularized_mode_sum(enumerate_modes(ch, 60 * math.pi), g, asym, ch)
    assert abs(a.finite_part - b.finite_part) <= max(10 * a.truncation_error, 1e-9)


def test_wrong_asymptotics_refused():
    ch = CHARS[0]
    modes = enumerate_modes(ch, 40 * math.pi)
    with pytest.raises(NonDecayingRemainder):
        regularized_mode_sum(modes, lambda mu: 2 * mu, Asymptotics(c1=1.0), ch)


def test_log_sum_uses_zeta_prime():
    ch = CHARS[1]
    modes = enumerate_modes(ch, 40 * math.pi)
    rv = regularized_mode_sum(modes, np.log, Asymptotics(c_log=1.0), ch)
    assert rv.finite_part == pytest.approx(-0.5 * lattice_zeta(ch).zeta_prime_at_zero(), abs=1e-12)
