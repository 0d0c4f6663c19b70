"""Built-in experiments, each reproducing one measurement of the sensor as synthetic data."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import homodyne as bhd
from .config import Config
from .fitting import fit_cal_curve, fit_linear, fit_shg_efficiency, noise_model_band, quadratic_residuals
from .gaussian import db_to_transmissivity
from .netlist import build_pic, detection_efficiency, propagate
from .nonlinear import (DispersionTable, eta_from_percent, linear_dispersion, peak_efficiency,
                        qpm_transfer, random_walk_profile, shg_power, squeezing_ratio,
                        transfer_vs_mismatch, uniform_profile)
from .svg import line_plot

MANIFEST_SCHEMA_VERSION = 1

DEFAULT_SCENARIOS = {
    "shg-efficiency": {"seed": 1, "grid": list(np.linspace(0.0, 20.0, 21))},
    "qpm-curve": {"seed": 0, "grid": list(np.linspace(1540.0, 1548.0, 801))},
    "shot-noise-sweep": {"seed": 2, "grid": list(np.linspace(0.0, 8.8, 8))},
    "lo-calibration": {"seed": 3, "grid": list(np.linspace(0.0, 60.0, 25))},
    "lo-phase-sweep": {"seed": 4, "grid": list(np.linspace(0.0, 2 * np.pi, 361))},
    "quantum-enhanced-snr": {"seed": 5},
    "loss-projection": {"seed": 6, "grid": list(np.linspace(0.0, 96.0, 100))},
}


@dataclass
class ScenarioOutput:
    tables: dict[str, tuple[list[str], np.ndarray]] = field(default_factory=dict)
    documents: dict[str, dict] = field(default_factory=dict)
    plots: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def bhd_config(cfg: Config) -> bhd.BhdConfig:
    return bhd.BhdConfig(
        responsivity=cfg["detection.responsivity_A_per_W"],
        conversion_gain=cfg["detection.conversion_gain_V_per_W"],
        impedance=cfg["detection.impedance_ohm"],
        quantum_efficiency=db_to_transmissivity(cfg["detection.detector_qe_dB"]),
        electronic_floor=1e-3 * 10 ** (cfg["detection.electronic_floor_dBm_per_Hz"] / 10),
        rbw=cfg["detection.rbw_kHz"] * 1e3,
        wavelength=cfg["laser.wavelength_nm"] * 1e-9,
    )


def _eta(cfg):
    return eta_from_percent(cfg["squeezer.eta_pct_per_W_cm2"])


def pump_power(cfg: Config) -> float:
    """FH power reaching the SHG section at the configured laser power, W."""
    res = propagate(build_pic(cfg), cfg["laser.power_mW"] * 1e-3)
    return res.nodes["shg_in_fh"]


def shg_efficiency(cfg: Config, grid, rng) -> ScenarioOutput:
    p_fh = np.asarray(grid) * 1e-3
    eta, length = _eta(cfg), cfg["squeezer.length_cm"]
    clean = shg_power(p_fh, eta, length)
    p_sh = clean * (1 + cfg["noise.shg_relative"] * rng.standard_normal(p_fh.size))
    p_sh = np.clip(p_sh, 0, None)
    fit = fit_shg_efficiency(p_fh, p_sh, length, model="tanh2")
    # low-conversion subset for the quadratic law; margin keeps the fitted eta under the 0.3 cap
    low = length * np.sqrt(fit.params["eta"] * p_fh) < 0.25
    quad = fit_shg_efficiency(p_fh[low], p_sh[low], length) if low.sum() >= 2 else None
    resid = quadratic_residuals(p_fh, p_sh, length, quad.params["eta"] if quad else fit.params["eta"])
    table = np.column_stack([p_fh * 1e3, p_sh * 1e3, shg_power(p_fh, fit.params["eta"], length) * 1e3,
                             resid * 1e3])
    out = ScenarioOutput()
    out.tables["shg_efficiency.csv"] = (["p_fh_mW", "p_sh_mW", "fit_tanh2_mW", "quadratic_residual_mW"], table)
    out.documents["fit.json"] = fit.to_dict()
    if quad is not None:
        out.documents["fit_quadratic.json"] = quad.to_dict()
    out.plots["shg_efficiency.svg"] = line_plot(
        [("data", table[:, 0], table[:, 1]), ("tanh^2 fit", table[:, 0], table[:, 2])],
        "SH vs FH power", "FH power (mW)", "SH power (mW)")
    out.summary = {"eta_pct_per_W_cm2": fit.params["eta_percent"],
                   "eta_sigma_pct_per_W_cm2": fit.sigma["eta_percent"],
                   "eta_quadratic_pct_per_W_cm2": quad.params["eta_percent"] if quad else None,
                   "quadratic_points": int(low.sum()),
                   "max_quadratic_residual_mW": float(np.max(np.abs(resid)) * 1e3)}
    return out


def qpm_curve(cfg: Config, grid, rng) -> ScenarioOutput:
    wl = np.asarray(grid, dtype=float)
    period, length = cfg["qpm.period_um"], cfg["qpm.length_cm"]
    if cfg["qpm.dispersion_file"]:
        dispersion = DispersionTable.load(cfg["qpm.dispersion_file"])
    else:
        dispersion = linear_dispersion(cfg["qpm.center_nm"], cfg["qpm.dispersion_slope_rad_per_cm_nm"], period)
    ideal = uniform_profile(period, length)
    noisy = random_walk_profile(period, length, cfg["qpm.phase_noise_rad_per_sqrt_cm"],
                                cfg["qpm.segments"], rng)
    t_ideal = qpm_transfer(ideal, dispersion, wl)
    t_noisy = qpm_transfer(noisy, dispersion, wl)
    peak = peak_efficiency(noisy)
    out = ScenarioOutput()
    out.tables["qpm_curve.csv"] = (["wavelength_nm", "ideal", "distorted"],
                                   np.column_stack([wl, t_ideal, t_noisy]))
    out.tables["phase_profile.csv"] = (["z_cm", "phase_error_rad"], np.column_stack(
        [(np.arange(noisy.n_segments) + 0.5) * length / noisy.n_segments, noisy.phase_errors]))
    out.plots["qpm_curve.svg"] = line_plot([("ideal", wl, t_ideal), ("distorted", wl, t_noisy)],
                                           "QPM transfer function", "wavelength (nm)", "normalized SHG")
    out.summary = {"peak_ratio": peak, "peak_on_grid": float(t_noisy.max()),
                   "ideal_peak": float(transfer_vs_mismatch(ideal, 0.0)[0])}
    return out


def shot_noise_sweep(cfg: Config, grid, rng) -> ScenarioOutput:
    bcfg = bhd_config(cfg)
    f0, f1 = cfg["detection.f_start_MHz"] * 1e6, cfg["detection.f_stop_MHz"] * 1e6
    p_lo = np.asarray(grid) * 1e-3
    noise = np.array([bhd.synth_spectrum(1.0, p, [], bcfg, f0, f1).integrated() for p in p_lo])
    fit = fit_linear(p_lo * 1e3, noise)
    p_op = cfg["detection.lo_power_mW"] * 1e-3
    above = 10 * np.log10(bhd.shot_noise_psd(p_op, bcfg) / bcfg.electronic_floor)
    spec = bhd.synth_spectrum(1.0, p_op, [], bcfg, f0, f1)
    out = ScenarioOutput()
    out.tables["shot_noise.csv"] = (["p_lo_mW", "integrated_noise_W", "integrated_noise_dBm"],
                                    np.column_stack([p_lo * 1e3, noise, 10 * np.log10(noise / 1e-3)]))
    out.tables["spectrum_operating_lo.csv"] = (["freq_Hz", "psd_dBm"], np.column_stack([spec.freqs, spec.psd_dbm]))
    out.documents["fit.json"] = fit.to_dict()
    out.plots["shot_noise.svg"] = line_plot(
        [("integrated noise", p_lo * 1e3, noise * 1e3),
         ("linear fit", p_lo * 1e3, (fit.params["slope"] * p_lo * 1e3 + fit.params["intercept"]) * 1e3)],
        "Integrated noise vs LO power", "LO power (mW)", "noise power (mW)")
    out.summary = {"r_squared": fit.r_squared, "slope_W_per_mW": fit.params["slope"],
                   "shot_above_electronic_dB": float(above)}
    return out


def lo_calibration(cfg: Config, grid, rng) -> ScenarioOutput:
    v = np.asarray(grid, dtype=float)
    args = dict(v_pp=cfg["lo.vpp_V"], p_lo=cfg["detection.lo_power_mW"] * 1e-3,
                responsivity=cfg["detection.responsivity_A_per_W"], impedance=cfg["detection.impedance_ohm"])
    clean = bhd.cal_peak_power(v, args["v_pp"], cfg["leakage.epsilon"], cfg["lo.vpi_V"], args["p_lo"],
                               args["responsivity"], args["impedance"])
    data = clean * (1 + cfg["noise.cal_relative"] * rng.standard_normal(v.size))
    fit = fit_cal_curve(v, data, **args)
    model = bhd.cal_peak_power(v, args["v_pp"], fit.params["eps"], fit.params["vpi"], args["p_lo"],
                               args["responsivity"], args["impedance"])
    out = ScenarioOutput()
    out.tables["lo_calibration.csv"] = (["v_dc_V", "peak_power_W", "fit_W"], np.column_stack([v, data, model]))
    out.documents["fit.json"] = fit.to_dict()
    out.plots["lo_calibration.svg"] = line_plot([("data", v, data * 1e9), ("fit", v, model * 1e9)],
                                                "LO calibration tone", "DC bias (V)", "peak power (nW)")
    out.summary = {"eps": fit.params["eps"], "eps_sigma": fit.sigma["eps"],
                   "vpi_V": fit.params["vpi"], "vpi_sigma_V": fit.sigma["vpi"]}
    return out


def lo_phase_sweep(cfg: Config, grid, rng) -> ScenarioOutput:
    phi = np.asarray(grid, dtype=float)
    p_in, length = pump_power(cfg), cfg["squeezer.length_cm"]
    band = noise_model_band(cfg["squeezer.eta_pct_per_W_cm2"], cfg["model_band.eta_sigma_pct_per_W_cm2"],
                            cfg["model_band.phase_offset_rad"], cfg["model_band.phase_sigma_rad"],
                            cfg["leakage.epsilon"], detection_efficiency(cfg), p_in, length, phi,
                            convention=cfg["model_band.convention"])
    out = ScenarioOutput()
    out.tables["lo_phase_sweep.csv"] = (["phi_lo_rad", "noise_ratio", "band_lower", "band_upper"],
                                        np.column_stack([phi, band.nominal, band.lower, band.upper]))
    out.documents["model_band.json"] = {"phi_lo_rad": phi.tolist(), "lower": band.lower.tolist(),
                                        "upper": band.upper.tolist()}
    out.plots["lo_phase_sweep.svg"] = line_plot(
        [("model", phi, band.nominal), ("lower", phi, band.lower), ("upper", phi, band.upper)],
        "Noise vs LO phase", "LO phase (rad)", "noise / shot noise")
    out.summary = {"min_ratio": float(band.nominal.min()), "max_ratio": float(band.nominal.max()),
                   "band_min": float(band.lower.min()), "band_max": float(band.upper.max()),
                   "squeezing_percent": float(100 * (1 - band.nominal.min())),
                   "antisqueezing_percent": float(100 * (band.nominal.max() - 1)),
                   "onchip_squeezing_dB": float(10 * np.log10(squeezing_ratio(p_in, _eta(cfg), length))),
                   "pump_mW": p_in * 1e3}
    return out


def signal_tone_power(cfg: Config, bcfg: bhd.BhdConfig, p_lo: float) -> float:
    """Analyzer power of the signal-interferometer tone for the configured RF drive."""
    drive = 1e-3 * 10 ** ((cfg["signal.tone_dBm"] - cfg["signal.rf_insertion_loss_dB"]) / 10)
    v_peak = np.sqrt(2 * drive * 50.0)
    dphi = np.pi * v_peak / cfg["signal.vpi_V"]
    # balanced point: d(difference power)/d(phi2) = P_LO
    v_out = bcfg.conversion_gain * p_lo * dphi
    return float(v_out ** 2 / (2 * bcfg.impedance))


def quantum_enhanced_snr(cfg: Config, grid, rng) -> ScenarioOutput:
    bcfg = bhd_config(cfg)
    f0, f1 = cfg["detection.f_start_MHz"] * 1e6, cfg["detection.f_stop_MHz"] * 1e6
    p_lo = cfg["detection.lo_power_mW"] * 1e-3
    f_sig = cfg["signal.tone_MHz"] * 1e6
    tones = [(f_sig, signal_tone_power(cfg, bcfg, p_lo))]
    ratio = 1.0 - cfg["snr.floor_suppression"]
    shot = bhd.synth_spectrum(1.0, p_lo, tones, bcfg, f0, f1)
    sq = bhd.synth_spectrum(ratio, p_lo, tones, bcfg, f0, f1)
    el_bin = bcfg.electronic_floor * bcfg.rbw
    gain = bhd.snr_improvement(sq, shot, f_sig, electronic_floor=el_bin)
    gain_raw = bhd.snr_improvement(sq, shot, f_sig)
    out = ScenarioOutput()
    out.tables["spectra.csv"] = (["freq_Hz", "shot_limited_dBm", "squeezed_dBm"],
                                 np.column_stack([shot.freqs, shot.psd_dbm, sq.psd_dbm]))
    out.plots["spectra.svg"] = line_plot([("shot noise", shot.freqs / 1e6, shot.psd_dbm),
                                          ("squeezed", sq.freqs / 1e6, sq.psd_dbm)],
                                         "Quantum-enhanced RF measurement", "frequency (MHz)", "PSD (dBm/RBW)")
    out.summary = {"snr_improvement": gain, "snr_improvement_raw": gain_raw,
                   "tone_dBm": float(10 * np.log10(tones[0][1] / 1e-3)), "noise_ratio": ratio}
    return out


def loss_projection(cfg: Config, grid, rng) -> ScenarioOutput:
    p = np.asarray(grid) * 1e-3
    eta, length = _eta(cfg), cfg["squeezer.length_cm"]
    onchip = squeezing_ratio(p, eta, length)
    z_red = db_to_transmissivity(cfg["projection.detection_loss_dB"])
    z_cur = detection_efficiency(cfg)
    reduced = z_red * onchip + 1 - z_red
    current = z_cur * onchip + 1 - z_cur
    laser = p / db_to_transmissivity(cfg["projection.laser_coupling_dB"])
    out = ScenarioOutput()
    out.tables["loss_projection.csv"] = (
        ["onchip_mW", "laser_mW", "onchip_dB", "reduced_loss_dB", "current_dB", "reduced_loss_factor"],
        np.column_stack([p * 1e3, laser * 1e3, 10 * np.log10(onchip), 10 * np.log10(reduced),
                         10 * np.log10(current), 1 / reduced]))
    out.plots["loss_projection.svg"] = line_plot(
        [("reduced loss", p * 1e3, -10 * np.log10(reduced)), ("current", p * 1e3, -10 * np.log10(current))],
        "Projected squeezing", "on-chip pump (mW)", "squeezing (dB)")
    i = int(np.argmax(p))
    out.summary = {"max_onchip_mW": float(p[i] * 1e3), "observed_squeezing_dB": float(-10 * np.log10(reduced[i])),
                   "squeezing_factor": float(1 / reduced[i]),
                   "onchip_squeezing_dB": float(-10 * np.log10(onchip[i])),
                   "current_squeezing_dB": float(-10 * np.log10(current[i]))}
    return out


SCENARIOS: dict[str, Callable[..., ScenarioOutput]] = {
    "shg-efficiency": shg_efficiency,
    "qpm-curve": qpm_curve,
    "shot-noise-sweep": shot_noise_sweep,
    "lo-calibration": lo_calibration,
    "lo-phase-sweep": lo_phase_sweep,
    "quantum-enhanced-snr": quantum_enhanced_snr,
    "loss-projection": loss_projection,
}


def _csv_bytes(columns, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in np.atleast_2d(rows):
        w.writerow([f"{x:.12g}" for x in row])
    return buf.getvalue().encode()


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n").encode()


def resolve_scenario(cfg: Config, name: str, seed: int | None = None) -> dict:
    if name not in SCENARIOS:
        raise KeyError(name)
    spec = dict(DEFAULT_SCENARIOS[name])
    spec.update(cfg.scenarios.get(name, {}))
    if seed is not None:
        spec["seed"] = seed
    spec.setdefault("outputs", ["csv", "svg"])
    return spec


def execute(cfg: Config, name: str, seed: int | None = None) -> tuple[ScenarioOutput, dict]:
    spec = resolve_scenario(cfg, name, seed)
    rng = np.random.default_rng(spec["seed"])
    return SCENARIOS[name](cfg, spec.get("grid"), rng), spec


def run_scenario(cfg: Config, name: str, out_dir, seed: int | None = None) -> dict:
    """Run ``name`` and write its CSV/JSON/SVG artifacts plus ``manifest.json`` into ``out_dir``."""
    result, spec = execute(cfg, name, seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files: list[tuple[str, str, bytes]] = []
    for fname, (cols, rows) in result.tables.items():
        files.append((fname, "csv", _csv_bytes(cols, rows)))
    for fname, doc in result.documents.items():
        files.append((fname, "json", _json_bytes(doc)))
    if "svg" in spec["outputs"]:
        for fname, svg in result.plots.items():
            files.append((fname, "svg", svg.encode()))
    files.append(("summary.json", "json", _json_bytes(result.summary)))
    entries = []
    for fname, kind, data in files:
        (out_dir / fname).write_bytes(data)
        entries.append({"path": fname, "kind": kind, "bytes": len(data),
                        "sha256": hashlib.sha256(data).hexdigest()})
    entries.append({"path": "manifest.json", "kind": "manifest"})
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "scenario": name,
        "seed": spec["seed"],
        "grid": spec.get("grid"),
        "config_source": cfg.source,
        "parameters": cfg.values,
        "summary": result.summary,
        "files": entries,
    }
    (out_dir / "manifest.json").write_bytes(_json_bytes(manifest))
    return manifest
