from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqzsim import eo

LN = eo.EoMaterial()


def test_index_shift_zero_field():
    assert eo.index_shift(LN, 0.0) == (LN.n_o, LN.n_e)


def test_index_shift_extraordinary_value():
    _, ne = eo.index_shift(LN, 1e6)
    assert ne - LN.n_e == pytest.approx(-0.5 * 31e-12 * 2.14 ** 3 * 1e6)
    assert ne - LN.n_e == pytest.approx(-1.519e-4, rel=1e-3)


@settings(max_examples=50)
@given(e=st.floats(1.0, 1e8))
def test_index_shift_odd_in_field(e):
    no_p, ne_p = eo.index_shift(LN, e)
    no_m, ne_m = eo.index_shift(LN, -e)
    assert no_p - LN.n_o == pytest.approx(-(no_m - LN.n_o))
    assert ne_p - LN.n_e == pytest.approx(-(ne_m - LN.n_e))


def test_material_validation():
    with pytest.raises(ValueError):
        eo.EoMaterial(n_o=0.9)
    with pytest.raises(ValueError):
        eo.index_shift(LN, np.inf)


def test_vpi_design_point():
    assert eo.vpi_from_sensitivity(2.06e-5, 1544e-9, 2.5e-3) == pytest.approx(30.0, abs=0.1)
    assert eo.sensitivity_from_vpi(28.6, 1544e-9, 2.5e-3) == pytest.approx(2.16e-5, rel=2e-3)


def test_vpi_halves_with_double_length():
    assert eo.vpi_from_sensitivity(2e-5, 1.55e-6, 5e-3) == pytest.approx(
        eo.vpi_from_sensitivity(2e-5, 1.55e-6, 2.5e-3) / 2)


@pytest.mark.parametrize("bad", [0.0, -1e-5])
def test_vpi_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        eo.vpi_from_sensitivity(bad, 1.55e-6, 2.5e-3)


@settings(max_examples=50)
@given(s=st.floats(1e-7, 1e-3), length=st.floats(1e-4, 1e-1))
def test_vpi_roundtrip(s, length):
    v = eo.vpi_from_sensitivity(s, 1544e-9, length)
    assert eo.sensitivity_from_vpi(v, 1544e-9, length) == pytest.approx(s, rel=1e-12)


def test_phase_at():
    assert eo.phase_at(eo.PhaseShifter(28.6)) == 0.0
    assert eo.phase_at(eo.PhaseShifter(28.6, v_dc=28.6)) == pytest.approx(np.pi)
    ps = eo.PhaseShifter(28.6, v_pp=0.5, rf_freq=72e6)
    t = 1 / (4 * 72e6)   # sin = 1
    assert eo.phase_at(ps, t) == pytest.approx(np.pi * 0.5 / (2 * 28.6))


def test_47V_bias_routes_to_lo_port():
    bar, cross = eo.mzi_transfer(eo.PhaseShifter(47.0, v_dc=47.0).dc_phase)
    assert bar == pytest.approx(1.0) and cross == pytest.approx(0.0, abs=1e-30)


@settings(max_examples=50)
@given(v=st.floats(-100, 100), vpi=st.floats(1, 60))
def test_phase_period_is_two_vpi(v, vpi):
    a = eo.PhaseShifter(vpi, v_dc=v).dc_phase
    b = eo.PhaseShifter(vpi, v_dc=v + 2 * vpi).dc_phase
    assert np.exp(1j * a) == pytest.approx(np.exp(1j * b), abs=1e-9)


@pytest.mark.parametrize("phi,expected", [(0.0, (0, 1)), (np.pi, (1, 0)), (np.pi / 2, (0.5, 0.5))])
def test_mzi_points(phi, expected):
    np.testing.assert_allclose(eo.mzi_transfer(phi), expected, atol=1e-15)


@settings(max_examples=100)
@given(phi=st.floats(-20, 20))
def test_mzi_sums_to_one(phi):
    bar, cross = eo.mzi_transfer(phi)
    assert bar + cross == pytest.approx(1.0, abs=1e-15)


def test_filter_cascade():
    f = eo.DichroicFilter(6.0, 1.0, 3)
    assert f.total_extinction_db == 18.0
    fh, sh = eo.filter_cascade(f)
    assert fh == pytest.approx(0.0158, abs=1e-4)
    assert sh == 1.0
    assert eo.filter_cascade(eo.DichroicFilter(0.0, 0.9, 2)) == pytest.approx((1.0, 0.81))


def test_filter_validation():
    with pytest.raises(ValueError):
        eo.DichroicFilter(-1.0)
    with pytest.raises(ValueError):
        eo.DichroicFilter(6.0, 1.2)
    with pytest.raises(ValueError):
        eo.DichroicFilter(6.0, 1.0, 0)


def test_metal_loss_bound():
    assert eo.PhaseShifter(28.6, metal_loss_db_per_cm=0.04).insertion_loss_db() == pytest.approx(0.01)
    with pytest.raises(ValueError):
        eo.PhaseShifter(28.6, metal_loss_db_per_cm=0.05)
    with pytest.raises(ValueError):
        eo.PhaseShifter(0.0)


def test_drift_walk_seeded():
    np.testing.assert_array_equal(eo.drift_walk(50, 0.01, 1), eo.drift_walk(50, 0.01, 1))
    assert eo.drift_walk(10, 0.0, 1).tolist() == [0.0] * 10
