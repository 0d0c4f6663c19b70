"""Degenerate three-wave mixing: SHG pump generation, OPA squeezing and QPM response.

Amplitudes are power normalized (sqrt(W)), lengths are in cm and the
normalized efficiency ``eta`` is in 1/(W cm^2). 100 %/(W cm^2) = 1 /(W cm^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

PERCENT_PER_W_CM2 = 0.01
DEFAULT_STEPS_PER_CM = 1024

DeltaK = Union[float, Callable[[float], float]]


def eta_from_percent(eta_percent: float) -> float:
    return eta_percent * PERCENT_PER_W_CM2


def eta_to_percent(eta: float) -> float:
    return eta / PERCENT_PER_W_CM2


@dataclass(frozen=True)
class TwmParams:
    eta: float
    length: float
    delta_k: DeltaK = 0.0
    p_in: float = 0.0

    def __post_init__(self):
        if not self.eta >= 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length}")
        if not self.p_in >= 0:
            raise ValueError(f"p_in must be >= 0, got {self.p_in}")

    def mismatch(self, z: float) -> float:
        return self.delta_k(z) if callable(self.delta_k) else self.delta_k


def _twm_rhs(z, a, b, root_eta, params):
    dk = params.mismatch(z)
    da = -1j * root_eta * b * np.conj(a) * np.exp(-1j * dk * z)
    db = -1j * root_eta * a * a * np.exp(1j * dk * z)
    return da, db


def integrate_twm(a0: complex, b0: complex, params: TwmParams, steps: int | None = None):
    """Propagate the FH/SH coupled-mode equations over ``params.length`` with fixed-step RK4.

    Returns the complex amplitudes ``(a, b)`` at the end of the interaction region.
    """
    if steps is None:
        steps = max(16, int(np.ceil(DEFAULT_STEPS_PER_CM * params.length)))
    if steps < 16:
        raise ValueError(f"steps must be >= 16, got {steps}")
    a, b = complex(a0), complex(b0)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("amplitudes must be finite")
    root_eta = np.sqrt(params.eta)
    h = params.length / steps
    z = 0.0
    for _ in range(steps):
        k1a, k1b = _twm_rhs(z, a, b, root_eta, params)
        k2a, k2b = _twm_rhs(z + h / 2, a + h / 2 * k1a, b + h / 2 * k1b, root_eta, params)
        k3a, k3b = _twm_rhs(z + h / 2, a + h / 2 * k2a, b + h / 2 * k2b, root_eta, params)
        k4a, k4b = _twm_rhs(z + h, a + h * k3a, b + h * k3b, root_eta, params)
        a += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b += h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        z += h
    return a, b


def shg_power(p_in, eta, length):
    """Phase-matched SH power P_in tanh^2(L sqrt(eta P_in)), including pump depletion."""
    p_in = np.asarray(p_in, dtype=float)
    g = length * np.sqrt(eta * p_in)
    return p_in * np.tanh(g) ** 2


def squeezing_ratio(p_in, eta, length):
    """Squeezed-quadrature variance relative to vacuum for a SHG-pumped OPA of equal length."""
    g = length * np.sqrt(eta * np.asarray(p_in, dtype=float))
    return np.exp(-2.0 * g * np.tanh(g))


def squeezing_db(p_in, eta, length):
    return 10.0 * np.log10(squeezing_ratio(p_in, eta, length))


def opa_gain_exponent(p_sh, eta, length):
    # undepleted SH pump: constant |B| = sqrt(P_SH) along the OPA
    return np.sqrt(eta) * np.sqrt(p_sh) * length


def opa_quadrature_gain(p_sh, eta, length):
    """Amplitude gains (g_X, g_Y) of the de-amplified and amplified quadratures."""
    r = opa_gain_exponent(p_sh, eta, length)
    return np.exp(-r), np.exp(r)


@dataclass(frozen=True)
class PolingProfile:
    """Poling grating with optional per-segment phase and duty-cycle errors.

    ``phase_errors`` holds one accumulated grating-phase error (rad) per
    equal-length segment along z; ``duty`` the matching duty cycles.
    """

    period_um: float
    length: float
    phase_errors: np.ndarray = field(default_factory=lambda: np.zeros(1))
    duty: np.ndarray | None = None

    def __post_init__(self):
        if not self.period_um > 0:
            raise ValueError(f"poling period must be > 0, got {self.period_um}")
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length}")
        pe = np.atleast_1d(np.asarray(self.phase_errors, dtype=float))
        if not np.all(np.isfinite(pe)):
            raise ValueError("phase error samples must be finite")
        object.__setattr__(self, "phase_errors", pe)
        if self.duty is not None:
            duty = np.asarray(self.duty, dtype=float)
            if duty.shape != pe.shape or not np.all(np.isfinite(duty)):
                raise ValueError("duty samples must be finite and match phase_errors")
            object.__setattr__(self, "duty", duty)

    @property
    def grating_k(self) -> float:
        """Grating wavevector 2 pi / period in rad/cm."""
        return 2 * np.pi / (self.period_um * 1e-4)

    @property
    def n_segments(self) -> int:
        return self.phase_errors.size

    def weights(self) -> np.ndarray:
        if self.duty is None:
            return np.ones(self.n_segments)
        return np.sin(np.pi * self.duty)


def uniform_profile(period_um: float, length: float) -> PolingProfile:
    return PolingProfile(period_um, length)


def random_walk_profile(period_um: float, length: float, sigma: float,
                        n_segments: int = 400, rng=None) -> PolingProfile:
    """Grating whose phase error performs a random walk with diffusion ``sigma`` rad/sqrt(cm)."""
    rng = np.random.default_rng(rng)
    dz = length / n_segments
    steps = rng.normal(0.0, sigma * np.sqrt(dz), n_segments)
    return PolingProfile(period_um, length, np.cumsum(steps))


def transfer_vs_mismatch(profile: PolingProfile, dk_eff) -> np.ndarray:
    """|(1/L) integral of w(z) exp(i dk z + i phi(z)) dz|^2 for effective mismatch ``dk_eff`` (rad/cm).

    Each segment has constant phase and weight, so the segment integrals are exact.
    """
    dk = np.atleast_1d(np.asarray(dk_eff, dtype=float))
    n = profile.n_segments
    edges = np.linspace(0.0, profile.length, n + 1)
    dz = profile.length / n
    coef = profile.weights() * np.exp(1j * profile.phase_errors)
    centers = 0.5 * (edges[:-1] + edges[1:])
    # segment integral = dz * exp(i dk zc) * sinc(dk dz / 2)
    seg = np.exp(1j * np.outer(dk, centers)) * np.sinc(dk * dz / (2 * np.pi))[:, None]
    amp = seg @ coef * dz / profile.length
    return np.abs(amp) ** 2


def sinc2_transfer(dk_eff, length):
    x = np.asarray(dk_eff, dtype=float) * length / 2
    return np.sinc(x / np.pi) ** 2


class DispersionTable:
    """Tabulated material phase mismatch 2k_FH - k_SH (rad/cm) versus FH wavelength (nm)."""

    def __init__(self, wavelength_nm, delta_k):
        wl = np.asarray(wavelength_nm, dtype=float)
        dk = np.asarray(delta_k, dtype=float)
        if wl.shape != dk.shape or wl.ndim != 1 or wl.size < 2:
            raise ValueError("dispersion table needs two equal-length columns with >= 2 rows")
        order = np.argsort(wl)
        self.wavelength_nm = wl[order]
        self.delta_k = dk[order]

    @classmethod
    def load(cls, path) -> "DispersionTable":
        data = np.loadtxt(Path(path), comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns (wavelength_nm, delta_k_rad_per_cm)")
        return cls(data[:, 0], data[:, 1])

    def __call__(self, wavelength_nm):
        wl = np.asarray(wavelength_nm, dtype=float)
        lo, hi = self.wavelength_nm[0], self.wavelength_nm[-1]
        if np.any(wl < lo) or np.any(wl > hi):
            raise RangeError(f"wavelength outside dispersion table range [{lo}, {hi}] nm")
        return np.interp(wl, self.wavelength_nm, self.delta_k)


class RangeError(ValueError):
    pass


def linear_dispersion(center_nm: float, slope: float, period_um: float):
    """Mismatch that is phase matched by ``period_um`` at ``center_nm`` with d(dk)/d(lambda) = ``slope``."""
    k_g = 2 * np.pi / (period_um * 1e-4)

    def delta_k(wavelength_nm):
        return k_g + slope * (np.asarray(wavelength_nm, dtype=float) - center_nm)

    return delta_k


def qpm_transfer(profile: PolingProfile, dispersion, wavelengths_nm) -> np.ndarray:
    """Normalized SHG efficiency vs FH wavelength; 1.0 is the ideal phase-matched peak."""
    dk_eff = np.asarray(dispersion(wavelengths_nm), dtype=float) - profile.grating_k
    return transfer_vs_mismatch(profile, dk_eff)


def peak_efficiency(profile: PolingProfile, n_grid: int = 801) -> float:
    """Maximum of the transfer function over a mismatch window of +-6 pi / L."""
    span = 6 * np.pi / profile.length
    return float(transfer_vs_mismatch(profile, np.linspace(-span, span, n_grid)).max())


def mean_peak_efficiency(sigma: float, length: float, n_realizations: int = 200,
                         n_segments: int = 200, seed: int = 0, n_grid: int = 241) -> float:
    """Monte-Carlo mean of :func:`peak_efficiency` over random-walk gratings."""
    rng = np.random.default_rng(seed)
    dz = length / n_segments
    phases = np.cumsum(rng.normal(0.0, sigma * np.sqrt(dz), (n_segments, n_realizations)), axis=0)
    span = 6 * np.pi / length
    dk = np.linspace(-span, span, n_grid)
    centers = (np.arange(n_segments) + 0.5) * dz
    seg = np.exp(1j * np.outer(dk, centers)) * np.sinc(dk * dz / (2 * np.pi))[:, None]
    amp = seg @ np.exp(1j * phases) * dz / length
    return float(np.mean(np.max(np.abs(amp) ** 2, axis=0)))


def calibrate_phase_noise(target_peak: float, length: float, n_realizations: int = 200,
                          n_segments: int = 200, seed: int = 0, tol: float = 1e-3) -> float:
    """Random-walk strength whose Monte-Carlo mean peak efficiency equals ``target_peak``."""
    if not 0 < target_peak < 1:
        raise ValueError("target peak must lie in (0, 1)")
    lo, hi = 0.0, 1.0
    while mean_peak_efficiency(hi, length, n_realizations, n_segments, seed) > target_peak:
        hi *= 2
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mean_peak_efficiency(mid, length, n_realizations, n_segments, seed) > target_peak:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
