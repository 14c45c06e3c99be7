import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsionlab.boundary_model import Character
from torsionlab.gluing import (COMPONENT_DIMS, DEGREES, FitRefused, GluedGeometry, adiabatic_sweep,
                               assemble_dtn, bfk_check_per_mode, bfk_component_residual,
                               corollary28_residual, degree_weight, dtn_vec, far_side_positivity,
                               log_det_bvp, parity_bc, per_mode_weighted_identity, theorem211_compare)
from torsionlab.interval_spectra import BCK, ComponentClass, IntervalProblem, ScalarBC, log_interval_determinant
from torsionlab.oracles import fd_log_determinant

GEOM = GluedGeometry(1.0, Character((0.3, 0.0)))


def test_dtn_entry_sum_at_unit_lengths():
    got = dtn_vec(np.array([1.0]), 1.0, ScalarBC.D) + dtn_vec(np.array([1.0]), 1.0, ScalarBC.D)
    assert got[0] == pytest.approx(2.6260705710, abs=1e-9)


def test_assembled_dtn_matches_closed_form():
    dtn = assemble_dtn(GEOM, BCK.Rel, 1)
    j = dtn.components.index(ComponentClass.QMinus)
    mu = dtn.mus[0]
    expect = 2 * (mu + 2 * mu / math.expm1(2 * mu))
    assert dtn.entries[0, j] == pytest.approx(expect, rel=1e-13)
    assert dtn.matrix(0).shape == (len(dtn.components),) * 2


def test_assembled_dtn_rejects_zero_frequency():
    geom = GluedGeometry(1.0, Character((0.0, 0.0)))
    with pytest.raises(ValueError):
        assemble_dtn(geom, BCK.Rel, 0)


def test_bfk_example_left_side():
    rep = bfk_check_per_mode(1.0, 1.0, 1.0)
    assert rep.details["lhs"] == pytest.approx(math.log(7.2537208), abs=1e-7)
    assert rep.passed


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_bfk_identity(mu, a, b):
    assert bfk_check_per_mode(mu, a, b).residuals["bfk_per_mode"] <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_bfk_without_log2_misses_by_log2(mu, a, b):
    gap = bfk_check_per_mode(mu, a, b, include_log2=False).residuals["bfk_per_mode"]
    assert gap == pytest.approx(math.log(2.0), abs=1e-12)


@pytest.mark.parametrize("left", list(ScalarBC))
@pytest.mark.parametrize("right", list(ScalarBC))
def test_bfk_with_mixed_outer_ends(left, right):
    assert bfk_component_residual(3.0, 0.5, 2.5, left, right) <= 1e-12


@pytest.mark.parametrize("q", DEGREES)
def test_log_det_bvp_against_fd_mode_sum(q):
    geom = GluedGeometry(1.0, Character((0.3, 0.0)))
    tab = BCK.PMinus.reduction_table
    fd = exact = 0.0
    for mu in geom.mode_frequencies()[:30]:
        for comp, dim in COMPONENT_DIMS[q].items():
            if dim:
                prob = IntervalProblem(float(mu), geom.total_length, tab[comp], geom.far_bc[comp])
                fd += dim * fd_log_determinant(prob)
                exact += dim * log_interval_determinant(prob)
    assert fd == pytest.approx(exact, abs=1e-5)


def test_log_det_bvp_is_cutoff_stable():
    a = log_det_bvp(GEOM, BCK.PMinus, 1)
    b = log_det_bvp(GluedGeometry(1.0, GEOM.character, cutoff=1.5 * GEOM.cutoff), BCK.PMinus, 1)
    assert abs(a.finite_part - b.finite_part) <= max(10 * a.truncation_error, 1e-9)


def test_parity_schemes():
    assert parity_bc("P0", 0) == BCK.PMinus
    assert parity_bc("P0", 1) == BCK.PPlus
    assert parity_bc("P1", 0) == BCK.PPlus
    with pytest.raises(ValueError):
        parity_bc("P2", 0)


def test_degree_weights_alternate():
    assert [degree_weight(q) for q in DEGREES] == [(-1) ** (q + 1) * q for q in DEGREES]


def test_dtn_combination_vanishes_at_long_collar():
    rep = corollary28_residual(GEOM.with_r(4.0))
    assert rep.passed
    assert abs(rep.details["lhs"]) <= 1e-3 and abs(rep.details["rhs"]) <= 1e-3


@pytest.mark.parametrize("name", ["PMinus", "Rel"])
@pytest.mark.parametrize("comp", [ComponentClass.QMinus, ComponentClass.QprevPlus])
def test_dtn_combination_detects_flipped_entry(name, comp):
    table = BCK(name).reduction_table
    table[comp] = ScalarBC.N if table[comp] == ScalarBC.D else ScalarBC.D
    # the defect grows with r; at r = 1 it is only about 5e-3
    rep = corollary28_residual(GEOM.with_r(4.0), tables={name: table})
    assert rep.residuals["dtn_combination"] >= 1e-2


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_weighted_log_det_identity(r):
    rep = theorem211_compare(GEOM.with_r(r))
    assert rep.passed, rep.residuals


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 12.0), st.floats(0.2, 5.0), st.floats(0.2, 3.0))
def test_per_mode_weighted_identity(mu, r, far_len):
    assert per_mode_weighted_identity(mu, r, far_len) <= 1e-12 * max(1.0, mu * (r + far_len))


@pytest.mark.parametrize("alpha,mu1", [((0.3, 0.0), 1.884956), ((0.5, 0.5), 4.442883)])
def test_adiabatic_slope(alpha, mu1):
    sweep = adiabatic_sweep(GluedGeometry(1.0, Character(alpha)), [1.0, 2.0, 3.0, 4.0])
    assert sweep.expected_slope == pytest.approx(-2 * mu1, abs=1e-5)
    assert sweep.slope_rel_error <= 0.02
    assert np.all(sweep.delta_minus * sweep.delta_plus < 0)
    assert sweep.bound_ratio <= sweep.bound
    assert sweep.integral_residual <= 1e-10


def test_adiabatic_decay_rows():
    sweep = adiabatic_sweep(GEOM, [1.0, 2.0, 3.0, 4.0, 6.0, 8.0])
    mag = np.abs(sweep.delta_minus)
    assert np.all(np.diff(mag) < 0)
    assert len(sweep.rows()) == 6


@pytest.mark.parametrize("rs", [[1.0, 2.0, 3.0], [1.0, 1.5, 2.0, 3.0]])
def test_adiabatic_fit_refuses_thin_data(rs):
    with pytest.raises(FitRefused):
        adiabatic_sweep(GEOM, rs)


def test_far_side_positivity():
    assert far_side_positivity(GEOM) >= 1 - 1e-12


def test_geometry_validation():
    with pytest.raises(ValueError):
        GluedGeometry(0.0, Character((0.3, 0.0)))
    assert GEOM.with_r(3.0).total_length == 4.0
