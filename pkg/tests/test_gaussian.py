from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from sqzsim import gaussian as g

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
squeeze = st.floats(0.0, 2.0, allow_nan=False)
transm = st.floats(0.0, 1.0, allow_nan=False)


def _fock_ops(n):
    a = np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)
    return a, a.conj().T


def _fock_quadrature_cov(state_vec, a):
    """Covariance of X=(a+a^)/2, Y=i(a^-a)/2 computed directly in a truncated Fock basis."""
    ad = a.conj().T
    x = (a + ad) / 2
    y = 1j * (ad - a) / 2
    ops = [x, y]
    ev = [np.vdot(state_vec, o @ state_vec).real for o in ops]
    cov = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            sym = (ops[i] @ ops[j] + ops[j] @ ops[i]) / 2
            cov[i, j] = np.vdot(state_vec, sym @ state_vec).real - ev[i] * ev[j]
    return np.array(ev), cov


@pytest.mark.parametrize("n", [1, 2, 3])
def test_vacuum(n):
    s = g.vacuum_state(n)
    assert s.n_modes == n
    np.testing.assert_array_equal(s.mean, np.zeros(2 * n))
    np.testing.assert_array_equal(s.cov, 0.25 * np.eye(2 * n))
    np.testing.assert_allclose(g.symplectic_eigenvalues(s.cov), 0.25)
    assert s.is_physical()


def test_vacuum_rejects_zero_modes():
    with pytest.raises(ValueError):
        g.vacuum_state(0)


def test_state_is_read_only():
    s = g.vacuum_state(1)
    with pytest.raises(ValueError):
        s.cov[0, 0] = 1.0


@pytest.mark.parametrize("r,theta", [(0.3, 0.0), (0.5, np.pi / 3), (0.8, -1.1)])
def test_squeezer_matches_fock_space(r, theta):
    # S(xi) = exp((xi* a^2 - xi a^2dag)/2), xi = r e^{i theta}
    n = 60
    a, ad = _fock_ops(n)
    xi = r * np.exp(1j * theta)
    op = expm((np.conj(xi) * a @ a - xi * ad @ ad) / 2)
    vac = np.zeros(n, complex)
    vac[0] = 1
    _, cov_ref = _fock_quadrature_cov(op @ vac, a)
    s = g.apply_squeezer(g.vacuum_state(1), 0, r, theta)
    np.testing.assert_allclose(s.cov, cov_ref, atol=1e-9)


def test_beam_splitter_mean_follows_amplitude_matrix():
    # coherent amplitudes transform exactly like the 2x2 amplitude matrix
    phi = 0.7
    amps = np.array([1.2 - 0.4j, -0.3 + 0.9j])
    s, c = np.sin(phi / 2), np.cos(phi / 2)
    out = np.array([[s, c], [c, -s]]) @ amps
    st_in = g.GaussianState(np.array([amps[0].real, amps[0].imag, amps[1].real, amps[1].imag]),
                            0.25 * np.eye(4))
    st_out = g.apply_beam_splitter(st_in, (0, 1), phi)
    np.testing.assert_allclose(st_out.mean, [out[0].real, out[0].imag, out[1].real, out[1].imag], atol=1e-14)


def test_dense_conjugation_on_three_modes():
    st0 = g.apply_squeezer(g.vacuum_state(3), 2, 0.4, 0.3)
    op = g.SymplecticOp(g.beam_splitter_matrix(1.1))
    full = op.embed(3, (2, 0))
    got = op.apply(st0, (2, 0)).cov
    np.testing.assert_allclose(got, full @ st0.cov @ full.T, atol=1e-14)


def test_loss_equals_beam_splitter_with_ancilla():
    zeta = 0.37
    st0 = g.apply_squeezer(g.vacuum_state(2), 0, 0.6, 0.2)
    direct = g.apply_loss(st0, 0, zeta)
    # embed in 3 modes, mix mode 0 with a vacuum ancilla, trace out the ancilla
    big = g.GaussianState(np.zeros(6), np.block([[st0.cov, np.zeros((4, 2))],
                                                [np.zeros((2, 4)), 0.25 * np.eye(2)]]))
    phi = 2 * np.arcsin(np.sqrt(zeta))   # sin^2(phi/2) = zeta in the first output
    mixed = g.apply_beam_splitter(big, (0, 2), phi)
    np.testing.assert_allclose(direct.cov, mixed.cov[:4, :4], atol=1e-14)


@pytest.mark.parametrize("bad", [-0.1, 1.1])
def test_loss_range(bad):
    with pytest.raises(ValueError):
        g.apply_loss(g.vacuum_state(1), 0, bad)


def test_invalid_modes():
    s = g.vacuum_state(2)
    with pytest.raises(ValueError):
        g.apply_beam_splitter(s, (1, 1), 0.3)
    with pytest.raises(ValueError):
        g.apply_phase_rotation(s, 2, 0.3)
    with pytest.raises(ValueError):
        g.apply_squeezer(s, 0, -0.1)


def test_squeezed_variances_and_db():
    s = g.apply_squeezer(g.vacuum_state(1), 0, 0.5)
    vx, vy = s.variances(0)
    assert vx == pytest.approx(0.25 * np.exp(-1.0))
    assert vy == pytest.approx(0.25 * np.exp(1.0))
    assert s.quadrature_variance(0, np.pi / 2) == pytest.approx(vy)
    assert g.ratio_to_db(vx / 0.25) == pytest.approx(-10 / np.log(10))
    assert g.db_to_transmissivity(10.0) == pytest.approx(0.1)


@settings(max_examples=60)
@given(r=squeeze, theta=angles, phi=angles)
def test_generators_are_symplectic(r, theta, phi):
    for m in (g.squeezer_matrix(r, theta), g.rotation(phi), g.beam_splitter_matrix(phi)):
        assert g.SymplecticOp(m).is_symplectic()


@settings(max_examples=60)
@given(r=squeeze, theta=angles, phi=angles, z1=transm, z2=transm)
def test_channels_keep_states_physical(r, theta, phi, z1, z2):
    s = g.apply_squeezer(g.vacuum_state(2), 0, r, theta)
    s = g.apply_squeezer(s, 1, r / 2, -theta)
    s = g.apply_beam_splitter(s, (0, 1), phi)
    s = g.apply_loss(s, 0, z1)
    s = g.apply_loss(s, 1, z2)
    assert s.is_physical()
    np.testing.assert_allclose(s.cov, s.cov.T, atol=0)


@settings(max_examples=40)
@given(r=squeeze, theta=angles)
def test_pure_squeezed_state_saturates_uncertainty(r, theta):
    s = g.apply_squeezer(g.vacuum_state(1), 0, r, theta)
    np.testing.assert_allclose(g.symplectic_eigenvalues(s.cov), 0.25, rtol=1e-9)
    assert np.linalg.det(s.cov) == pytest.approx(1 / 16, rel=1e-9)


@settings(max_examples=40)
@given(z=transm, phi=angles)
def test_loss_and_rotation_commute_on_vacuum(z, phi):
    v = g.vacuum_state(1)
    a = g.apply_phase_rotation(g.apply_loss(v, 0, z), 0, phi)
    b = g.apply_loss(g.apply_phase_rotation(v, 0, phi), 0, z)
    np.testing.assert_allclose(a.cov, b.cov, atol=1e-15)


def test_unphysical_state_detected():
    s = g.GaussianState(np.zeros(2), np.diag([0.1, 0.2]))
    assert not s.is_physical()
