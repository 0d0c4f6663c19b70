"""Gaussian states in quadrature space and the linear operations acting on them.

Quadratures follow X = (A + A*)/2, Y = i(A - A*)/2 with the ordering
(X1, Y1, X2, Y2, ...). Under this convention the vacuum variance of each
quadrature is 1/4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VACUUM_VARIANCE = 0.25


@dataclass
class Tolerances:
    symplectic: float = 1e-10
    physical: float = 1e-12


TOL = Tolerances()


def symplectic_form(n_modes: int) -> np.ndarray:
    one = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.kron(np.eye(n_modes), one)


def rotation(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    n = cov.shape[0] // 2
    eig = np.linalg.eigvals(1j * symplectic_form(n) @ cov)
    return np.sort(np.abs(eig.real))[::2]


@dataclass(frozen=True)
class GaussianState:
    """First and second quadrature moments of an ``n_modes`` Gaussian state."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be square with even size, got {cov.shape}")
        if mean.shape != (cov.shape[0],):
            raise ValueError("mean length must match covariance size")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def mode_cov(self, mode: int) -> np.ndarray:
        i = 2 * mode
        return np.array(self.cov[i:i + 2, i:i + 2])

    def variances(self, mode: int) -> tuple[float, float]:
        c = self.mode_cov(mode)
        return float(c[0, 0]), float(c[1, 1])

    def quadrature_variance(self, mode: int, angle: float) -> float:
        """Variance of X cos(angle) + Y sin(angle) on ``mode``."""
        v = np.array([np.cos(angle), np.sin(angle)])
        return float(v @ self.mode_cov(mode) @ v)

    def is_physical(self, tol: float | None = None) -> bool:
        tol = TOL.physical if tol is None else tol
        if not np.allclose(self.cov, self.cov.T, atol=tol, rtol=0):
            return False
        return bool(np.all(symplectic_eigenvalues(self.cov) >= VACUUM_VARIANCE - tol))


def vacuum_state(n_modes: int) -> GaussianState:
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    dim = 2 * n_modes
    return GaussianState(np.zeros(dim), VACUUM_VARIANCE * np.eye(dim))


@dataclass(frozen=True)
class SymplecticOp:
    """Affine symplectic map x -> S x + d acting on a subset of modes."""

    matrix: np.ndarray
    displacement: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def is_symplectic(self, tol: float | None = None) -> bool:
        tol = TOL.symplectic if tol is None else tol
        om = symplectic_form(self.n_modes)
        err = self.matrix.T @ om @ self.matrix - om
        return bool(np.max(np.abs(err)) < tol)

    def embed(self, n_modes: int, modes: tuple[int, ...]) -> np.ndarray:
        if len(modes) != self.n_modes:
            raise ValueError("mode count does not match operator size")
        idx = np.array([2 * m + k for m in modes for k in (0, 1)])
        full = np.eye(2 * n_modes)
        full[np.ix_(idx, idx)] = self.matrix
        return full

    def apply(self, state: GaussianState, modes: tuple[int, ...]) -> GaussianState:
        _check_modes(state, modes)
        s = self.embed(state.n_modes, modes)
        mean = s @ state.mean
        if self.displacement is not None:
            idx = np.array([2 * m + k for m in modes for k in (0, 1)])
            mean[idx] += self.displacement
        return GaussianState(mean, _congruence(s, state.cov))


def _congruence(m: np.ndarray, cov: np.ndarray) -> np.ndarray:
    # round-off leaves M C M^T a few ulp off symmetric; restore it exactly
    out = m @ cov @ m.T
    return 0.5 * (out + out.T)


def _check_modes(state: GaussianState, modes) -> None:
    for m in modes:
        if not 0 <= m < state.n_modes:
            raise ValueError(f"mode {m} out of range for {state.n_modes}-mode state")
    if len(set(modes)) != len(modes):
        raise ValueError(f"modes must be distinct, got {modes}")


def squeezer_matrix(r: float, theta: float = 0.0) -> np.ndarray:
    # squeezed axis at theta/2 in phase space; theta=0 squeezes X
    rot = rotation(theta / 2)
    return rot @ np.diag([np.exp(-r), np.exp(r)]) @ rot.T


def beam_splitter_matrix(phi: float) -> np.ndarray:
    """Quadrature-space matrix of the 2x2 amplitude transform
    [[sin(phi/2), cos(phi/2)], [cos(phi/2), -sin(phi/2)]].
    """
    s, c = np.sin(phi / 2), np.cos(phi / 2)
    return np.kron(np.array([[s, c], [c, -s]]), np.eye(2))


def apply_squeezer(state: GaussianState, mode: int, r: float, theta: float = 0.0) -> GaussianState:
    if r < 0:
        raise ValueError(f"squeeze parameter must be >= 0, got {r}")
    return SymplecticOp(squeezer_matrix(r, theta)).apply(state, (mode,))


def apply_beam_splitter(state: GaussianState, modes: tuple[int, int], phi: float) -> GaussianState:
    i, j = modes
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    return SymplecticOp(beam_splitter_matrix(phi)).apply(state, (i, j))


def apply_phase_rotation(state: GaussianState, mode: int, phi: float) -> GaussianState:
    return SymplecticOp(rotation(phi)).apply(state, (mode,))


def apply_loss(state: GaussianState, mode: int, transmissivity: float) -> GaussianState:
    """Pure-loss channel: mixes ``mode`` with vacuum at the given power transmissivity."""
    zeta = float(transmissivity)
    if not 0.0 <= zeta <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {zeta}")
    _check_modes(state, (mode,))
    idx = slice(2 * mode, 2 * mode + 2)
    x = np.eye(2 * state.n_modes)
    x[idx, idx] *= np.sqrt(zeta)
    noise = np.zeros_like(x)
    noise[idx, idx] = (1.0 - zeta) * VACUUM_VARIANCE * np.eye(2)
    return GaussianState(x @ state.mean, _congruence(x, state.cov) + noise)


def db_to_transmissivity(loss_db: float) -> float:
    return float(10.0 ** (-loss_db / 10.0))


def ratio_to_db(ratio):
    return 10.0 * np.log10(ratio)
