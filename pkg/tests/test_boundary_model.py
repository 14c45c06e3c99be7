import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.boundary_model import (Character, build_tangential_frame, enumerate_modes, make_mode,
                                       mode_from_wavevector, modes_csv, verify_structure)

alphas = st.tuples(st.floats(0.01, 0.99), st.floats(0.0, 0.99))


def test_lowest_mode_of_horizontal_character():
    modes = enumerate_modes(Character((0.3, 0.0)), 2.0)
    assert len(modes) == 1
    assert modes[0].n == (0, 0)
    assert modes[0].mu == pytest.approx(1.884956, abs=1e-6)


def test_trivial_character_has_zero_mode():
    ch = Character((0.0, 0.0))
    modes = enumerate_modes(ch, 1.0)
    assert [m.mu for m in modes] == [0.0]
    assert not ch.acyclic
    assert build_tangential_frame(modes[0]).harmonic_dim == 4


def test_diagonal_character_quartet():
    modes = enumerate_modes(Character((0.5, 0.5)), 2 * math.pi * 0.8)
    assert len(modes) == 4
    assert {m.n for m in modes} == {(0, 0), (-1, 0), (0, -1), (-1, -1)}
    for m in modes:
        assert m.mu == pytest.approx(4.442883, abs=1e-6)


def test_excluded_zero_mode_is_dropped():
    modes = enumerate_modes(Character((0.0, 0.0), exclude_zero_mode=True), 7.0)
    assert all(m.mu > 0 for m in modes)
    assert len(modes) == 4


@pytest.mark.parametrize("alpha", [(1.0, 0.0), (-0.1, 0.2), (0.2,)])
def test_character_rejects_bad_alpha(alpha):
    with pytest.raises(ValueError):
        Character(alpha)


def test_singular_lattice_rejected():
    with pytest.raises(ValueError):
        Character((0.3, 0.0), ((1.0, 2.0), (0.5, 1.0)))


def test_nonpositive_cutoff_rejected():
    with pytest.raises(ValueError):
        enumerate_modes(Character((0.3, 0.0)), 0.0)


def test_enumeration_sorted_and_complete():
    ch = Character((0.3, 0.1))
    modes = enumerate_modes(ch, 25.0)
    mus = np.array([m.mu for m in modes])
    # ties are ordered by n, so allow rounding-level inversions
    assert np.all(np.diff(mus) > -1e-12)
    # lattice-point count against the area law, loose
    assert abs(len(modes) - math.pi * 25.0 ** 2 / (4 * math.pi ** 2)) < 25


def test_modes_csv_reports_multiplicity():
    text = modes_csv(enumerate_modes(Character((0.5, 0.5)), 2 * math.pi * 0.8))
    header, *rows = text.strip().split("\r\n")
    assert header == "n1,n2,mu,multiplicity"
    assert len(rows) == 4
    assert all(row.endswith(",4") for row in rows)


@settings(max_examples=60, deadline=None)
@given(alphas, st.integers(-4, 4), st.integers(-4, 4))
def test_structure_identities_hold(alpha, n1, n2):
    mode = make_mode(Character(alpha), (n1, n2))
    rep = verify_structure(mode)
    assert rep.passed, rep.failures


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.7, 1.5), alphas)
def test_structure_on_sheared_lattices(shear, height, alpha):
    ch = Character(alpha, ((1.0, 0.0), (shear, height)))
    for mode in enumerate_modes(ch, 15.0):
        assert verify_structure(mode).passed


def test_projectors_split_fiber_in_half():
    fr = build_tangential_frame(mode_from_wavevector((1.3, -0.4)))
    assert np.trace(fr.proj_minus).real == pytest.approx(2.0)
    assert np.trace(fr.proj_plus).real == pytest.approx(2.0)
    s = fr.splitting
    assert np.allclose(s @ s, np.eye(4))


def test_hermitian_gamma_is_involution():
    fr = build_tangential_frame(mode_from_wavevector((0.2, 2.0)))
    ig = fr.hermitian_gamma
    assert np.allclose(ig, ig.conj().T)
    assert np.allclose(ig @ ig, np.eye(4))


def test_harmonic_frame_has_no_splitting():
    fr = build_tangential_frame(mode_from_wavevector((0.0, 0.0)))
    with pytest.raises(ValueError):
        fr.splitting


def test_broken_identity_is_caught():
    mode = mode_from_wavevector((1.0, 0.5))
    bad = type(mode)(mode.n, mode.mu * 1.01, mode.k, mode.nabla_Y, mode.hodge_Y, mode.gamma_Y, mode.beta)
    assert not verify_structure(bad).passed
