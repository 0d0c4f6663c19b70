"""Electro-optic phase shifters, MZI splitters and dichroic directional-coupler filters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METAL_LOSS_LIMIT_DB_PER_CM = 0.05


@dataclass(frozen=True)
class EoMaterial:
    n_o: float = 2.21
    n_e: float = 2.14
    r13: float = 10.0  # pm/V
    r33: float = 31.0  # pm/V

    def __post_init__(self):
        if not (self.n_o > 1 and self.n_e > 1):
            raise ValueError("refractive indices must exceed 1")
        if not (np.isfinite(self.r13) and np.isfinite(self.r33)):
            raise ValueError("electro-optic coefficients must be finite")


def index_shift(material: EoMaterial, e_z: float) -> tuple[float, float]:
    """Ordinary and extraordinary indices under a static field ``e_z`` (V/m)."""
    if not np.isfinite(e_z):
        raise ValueError("field must be finite")
    n_o = material.n_o - 0.5 * material.r13 * 1e-12 * material.n_o ** 3 * e_z
    n_e = material.n_e - 0.5 * material.r33 * 1e-12 * material.n_e ** 3 * e_z
    return n_o, n_e


def vpi_from_sensitivity(dneff_dv: float, wavelength: float, electrode_length: float) -> float:
    """Half-wave voltage from the effective-index slope (1/V); lengths in metres."""
    if not dneff_dv > 0:
        raise ValueError(f"dneff/dV must be > 0, got {dneff_dv}")
    return wavelength / (dneff_dv * electrode_length)


def sensitivity_from_vpi(vpi: float, wavelength: float, electrode_length: float) -> float:
    if not vpi > 0:
        raise ValueError(f"Vpi must be > 0, got {vpi}")
    return wavelength / (vpi * electrode_length)


@dataclass(frozen=True)
class PhaseShifter:
    """DC-biased phase shifter with an optional sinusoidal RF tone.

    ``drift`` is a quasi-static phase offset (rad) added on top of the bias.
    """

    vpi: float
    v_dc: float = 0.0
    v_pp: float = 0.0
    rf_freq: float = 0.0
    electrode_length_mm: float = 2.5
    metal_loss_db_per_cm: float = 0.0
    drift: float = 0.0

    def __post_init__(self):
        if not self.vpi > 0:
            raise ValueError(f"Vpi must be > 0, got {self.vpi}")
        if not 0 <= self.metal_loss_db_per_cm < METAL_LOSS_LIMIT_DB_PER_CM:
            raise ValueError(
                f"metal proximity loss must lie in [0, {METAL_LOSS_LIMIT_DB_PER_CM}) dB/cm")

    @property
    def dc_phase(self) -> float:
        return np.pi * self.v_dc / self.vpi + self.drift

    @property
    def modulation_depth(self) -> float:
        return np.pi * self.v_pp / (2 * self.vpi)

    def insertion_loss_db(self) -> float:
        return self.metal_loss_db_per_cm * self.electrode_length_mm / 10.0


def phase_at(shifter: PhaseShifter, t: float = 0.0):
    return shifter.dc_phase + shifter.modulation_depth * np.sin(2 * np.pi * shifter.rf_freq * np.asarray(t))


def mzi_transfer(phi):
    """Bar and cross power fractions of an MZI with differential phase ``phi``."""
    return np.sin(phi / 2) ** 2, np.cos(phi / 2) ** 2


def drift_walk(n_steps: int, step_rad: float, rng=None) -> np.ndarray:
    """Slow random-walk phase offsets for a phase shifter sampled at ``n_steps`` times."""
    rng = np.random.default_rng(rng)
    return np.cumsum(rng.normal(0.0, step_rad, n_steps))


@dataclass(frozen=True)
class DichroicFilter:
    """Cascade of directional couplers that separate FH from SH.

    Per stage, ``extinction_fh_db`` sets the FH fraction left in the through
    waveguide and ``transmission_sh`` the SH fraction left there; the rest
    crosses to the drop waveguide. Couplers are lossless.
    """

    extinction_fh_db: float = 6.0
    transmission_sh: float = 1.0
    stages: int = 3

    def __post_init__(self):
        if not self.extinction_fh_db >= 0:
            raise ValueError("FH extinction must be >= 0 dB")
        if not 0 <= self.transmission_sh <= 1:
            raise ValueError("SH transmission must lie in [0, 1]")
        if self.stages < 1:
            raise ValueError("filter needs at least one stage")

    @property
    def total_extinction_db(self) -> float:
        return self.extinction_fh_db * self.stages


def filter_cascade(filt: DichroicFilter) -> tuple[float, float]:
    """Through-port power fractions (FH leakage, SH transmission) of the whole cascade."""
    fh = 10.0 ** (-filt.total_extinction_db / 10.0)
    return fh, filt.transmission_sh ** filt.stages
