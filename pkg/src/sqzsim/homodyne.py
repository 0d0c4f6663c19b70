"""Balanced homodyne detection with coherent FH leakage in the squeezed path.

Mode 0 carries the squeezed field plus a leaked coherent amplitude
sqrt(eps) * alpha_LO; mode 1 carries the LO, rotated by ``phi_lo``. The
output splitter is set by ``phi2``.

Noise ratios are normalized to the shot noise of the LO alone (vacuum in the
squeezed path, no leakage), which is what the spectrum-analyzer traces are
referenced to.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gaussian import VACUUM_VARIANCE, GaussianState

PLANCK = 6.62607015e-34
LIGHT_SPEED = 299792458.0

# "derived": leakage enters the linearized difference current with sqrt(eps).
# "printed": the 2*sqrt(eps) coefficient of the closed-form published expression.
LEAK_COEFFICIENT = {"derived": 1.0, "printed": 2.0}


def lock_phase(eps, phi_lo):
    """Output-splitter phase that zeroes the DC difference signal."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps < 0) or np.any(eps >= 1):
        raise ValueError("leakage ratio must satisfy 0 <= eps < 1")
    c = np.cos(phi_lo)
    root = np.sqrt(eps)
    denom = np.sqrt(4 * eps * c * c + eps * eps - 2 * eps + 1)
    arg = np.clip(-2 * root * c / denom, -1.0, 1.0)
    # arccos branch gives sin(phi2) = (1 - eps)/denom > 0, which satisfies the lock
    return np.arccos(arg)


def lock_residual(eps, phi2, phi_lo):
    return np.cos(phi2) * (1 - eps) + 2 * np.sin(phi2) * np.sqrt(eps) * np.cos(phi_lo)


def bhd_dc(eps, phi2, phi_lo, p_lo):
    """DC difference power |A_out1|^2 - |A_out2|^2."""
    return np.cos(phi2) * p_lo * (1 - eps) + 2 * np.sin(phi2) * np.sqrt(eps) * p_lo * np.cos(phi_lo)


def bhd_noise(eps, phi2, phi_lo, sq_var, lo_var=(VACUUM_VARIANCE, VACUUM_VARIANCE),
              convention="derived"):
    """Difference-current noise power relative to LO shot noise.

    ``sq_var`` = (var X, var Y) of the squeezed path with X the squeezed
    quadrature; ``lo_var`` likewise for the LO-path fluctuations. Variances are
    absolute (vacuum = 1/4). Both quadrature pairs are taken uncorrelated.
    """
    k = LEAK_COEFFICIENT[convention] * np.sqrt(eps)
    x1, x2 = (np.asarray(v, dtype=float) / VACUUM_VARIANCE for v in sq_var)
    l1, l2 = (np.asarray(v, dtype=float) / VACUUM_VARIANCE for v in lo_var)
    c2, s2 = np.cos(phi_lo) ** 2, np.sin(phi_lo) ** 2
    return (np.cos(phi2) ** 2 * (c2 * l1 + s2 * l2 + k * k * x1)
            + np.sin(phi2) ** 2 * (c2 * x1 + s2 * x2 + k * k * l1)
            + np.sin(2 * phi2) * k * np.cos(phi_lo) * (l1 - x1))


def readout_vector(eps, phi2, phi_lo, convention="derived"):
    """Weights of (X_sq, Y_sq, X_LO, Y_LO) fluctuations in the difference current / 2|alpha_LO|."""
    k = LEAK_COEFFICIENT[convention] * np.sqrt(eps)
    c, s = np.cos(phi_lo), np.sin(phi_lo)
    return (np.sin(phi2) * np.array([c, s, k, 0.0])
            + np.cos(phi2) * np.array([-k, 0.0, c, s]))


def bhd_noise_state(state: GaussianState, eps, phi2, phi_lo, convention="derived") -> float:
    """Same noise ratio evaluated as a quadratic form on a two-mode covariance matrix."""
    if state.n_modes != 2:
        raise ValueError("expected a two-mode state (squeezed path, LO path)")
    v = readout_vector(eps, phi2, phi_lo, convention)
    return float(v @ state.cov @ v / VACUUM_VARIANCE)


def locked_noise_curve(phi_lo, eps, sq_var, lo_var=(VACUUM_VARIANCE, VACUUM_VARIANCE),
                       convention="derived"):
    """Noise ratio vs LO phase with the output splitter re-locked at every point."""
    phi_lo = np.asarray(phi_lo, dtype=float)
    return bhd_noise(eps, lock_phase(eps, phi_lo), phi_lo, sq_var, lo_var, convention)


def detected_variances(onchip_ratio: float, zeta: float) -> tuple[float, float]:
    """(var X, var Y) after a pure squeezer of ratio ``onchip_ratio`` and detection efficiency ``zeta``."""
    vx = zeta * onchip_ratio + (1 - zeta)
    vy = zeta / onchip_ratio + (1 - zeta)
    return VACUUM_VARIANCE * vx, VACUUM_VARIANCE * vy


def cal_peak_power(v_dc, v_pp, eps, vpi, p_lo, responsivity, impedance):
    """Electrical power of the LO phase-modulation tone seen through the leakage."""
    if not np.all(np.asarray(vpi) > 0):
        raise ValueError("Vpi must be > 0")
    amp = 2 * eps * responsivity ** 2 * p_lo ** 2 / impedance * (np.pi / 2) ** 3 * v_pp / vpi
    return amp * np.sin(np.pi * np.asarray(v_dc, dtype=float) / vpi) ** 2


@dataclass(frozen=True)
class BhdConfig:
    responsivity: float = 1.0           # A/W
    conversion_gain: float = 1.25e5     # V/W
    impedance: float = 50.0             # ohm
    quantum_efficiency: float = 0.832   # 0.8 dB
    electronic_floor: float = 6.3e-14   # W/Hz at the analyzer
    rbw: float = 60e3                   # Hz
    wavelength: float = 1544e-9         # m

    def __post_init__(self):
        for name in ("responsivity", "conversion_gain", "impedance", "electronic_floor", "rbw",
                     "wavelength"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 < self.quantum_efficiency <= 1:
            raise ValueError("quantum_efficiency must lie in (0, 1]")

    @property
    def photon_energy(self) -> float:
        return PLANCK * LIGHT_SPEED / self.wavelength


def shot_noise_psd(p_lo, cfg: BhdConfig):
    """Analyzer-referred shot-noise PSD (W/Hz) of a balanced receiver with LO power ``p_lo``.

    The conversion gain is referenced to optical power at the photodiodes.
    """
    return 2 * cfg.photon_energy * np.asarray(p_lo, dtype=float) * cfg.conversion_gain ** 2 / cfg.impedance


@dataclass(frozen=True)
class RfSpectrum:
    freqs: np.ndarray   # Hz
    psd: np.ndarray     # W per RBW bin
    rbw: float
    p_lo: float = 0.0

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        psd = np.asarray(self.psd, dtype=float)
        if freqs.shape != psd.shape:
            raise ValueError("freqs and psd must have the same shape")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if not np.all(np.isfinite(psd)):
            raise ValueError("psd must be finite")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "psd", psd)

    @property
    def psd_dbm(self) -> np.ndarray:
        return 10 * np.log10(self.psd / 1e-3)

    def bin_of(self, freq: float) -> int:
        return int(np.argmin(np.abs(self.freqs - freq)))

    def integrated(self, exclude=(), guard: int = 0) -> float:
        """Sum of bin powers, skipping bins within ``guard`` of each excluded frequency."""
        mask = np.ones(self.freqs.size, dtype=bool)
        for f in exclude:
            i = self.bin_of(f)
            mask[max(i - guard, 0):i + guard + 1] = False
        return float(self.psd[mask].sum())

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            fh.write(f"# rbw_Hz={self.rbw:.6g} p_lo_W={self.p_lo:.6g}\n")
            w = csv.writer(fh)
            w.writerow(["freq_Hz", "psd_dBm"])
            for f, p in zip(self.freqs, self.psd_dbm):
                w.writerow([f"{f:.6f}", f"{p:.6f}"])

    @classmethod
    def from_csv(cls, path) -> "RfSpectrum":
        with open(Path(path)) as fh:
            header = fh.readline().lstrip("#").split()
            meta = dict(item.split("=", 1) for item in header)
            rows = list(csv.reader(fh))
        data = np.array([[float(x) for x in r] for r in rows[1:]])
        return cls(data[:, 0], 1e-3 * 10 ** (data[:, 1] / 10), float(meta["rbw_Hz"]),
                   float(meta.get("p_lo_W", 0.0)))


def synth_spectrum(noise_ratio, p_lo, tones, cfg: BhdConfig, f_start: float, f_stop: float) -> RfSpectrum:
    """Analyzer trace: shot-noise floor scaled by ``noise_ratio`` plus electronic floor and tones.

    Each tone ``(freq_Hz, power_W)`` lands in the single RBW bin nearest its frequency.
    """
    if not 0 < f_start < f_stop:
        raise ValueError("frequency range must satisfy 0 < f_start < f_stop")
    if p_lo < 0:
        raise ValueError("LO power must be >= 0")
    n = int(np.floor((f_stop - f_start) / cfg.rbw)) + 1
    freqs = f_start + cfg.rbw * np.arange(n)
    floor = (shot_noise_psd(p_lo, cfg) * noise_ratio + cfg.electronic_floor) * cfg.rbw
    psd = np.full(n, floor, dtype=float)
    for freq, power in tones:
        if f_start <= freq <= f_stop:
            psd[int(np.argmin(np.abs(freqs - freq)))] += power
    return RfSpectrum(freqs, psd, cfg.rbw, p_lo)


class ToneNotFound(LookupError):
    pass


def _tone_and_floor(spec: RfSpectrum, freq: float, window: int):
    i = spec.bin_of(freq)
    if abs(spec.freqs[i] - freq) > spec.rbw:
        raise ToneNotFound(f"{freq:g} Hz is outside the spectrum grid")
    lo, hi = max(i - window, 0), min(i + window + 1, spec.freqs.size)
    neighbours = np.concatenate([spec.psd[lo:i], spec.psd[i + 1:hi]])
    floor = float(np.median(neighbours))
    excess = float(spec.psd[i] - floor)
    if not excess > 1e-6 * floor:
        raise ToneNotFound(f"no tone above the floor at {freq:g} Hz")
    return excess, floor


def snr_improvement(squeezed: RfSpectrum, reference: RfSpectrum, freq: float,
                    electronic_floor: float = 0.0, window: int = 20) -> float:
    """Fractional SNR gain of ``squeezed`` over ``reference`` for the tone at ``freq``.

    SNR is tone excess over the local floor median; ``electronic_floor`` (W per
    bin) is subtracted from both floors first.
    """
    if not np.array_equal(squeezed.freqs, reference.freqs):
        raise ValueError("spectra must share a frequency grid")
    t_sq, f_sq = _tone_and_floor(squeezed, freq, window)
    t_ref, f_ref = _tone_and_floor(reference, freq, window)
    snr_sq = t_sq / (f_sq - electronic_floor)
    snr_ref = t_ref / (f_ref - electronic_floor)
    return snr_sq / snr_ref - 1.0
