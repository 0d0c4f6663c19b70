"""Scenario configuration: a TOML document with dotted sections and unit-suffixed keys."""

from __future__ import annotations

import copy
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

REQUIRED = object()


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConfigWarning(UserWarning):
    pass


def _nonneg(x):
    return x >= 0


def _pos(x):
    return x > 0


def _unit(x):
    return 0 <= x <= 1


def _any(x):
    return True


# dotted key -> (default, unit, check, description)
SCHEMA: dict[str, tuple[Any, str, Any, str]] = {
    "laser.power_mW": (125.0, "mW", _nonneg, "off-chip laser power"),
    "laser.wavelength_nm": (1544.0, "nm", _pos, "FH wavelength"),
    "coupling.input_facet_dB": (0.0, "dB", _nonneg, "fiber-to-chip input coupling loss"),
    "input_splitter.vpi_V": (REQUIRED, "V", _pos, "input tunable splitter half-wave voltage"),
    "input_splitter.bias_V": (0.0, "V", _any, "input splitter DC bias"),
    "squeezer.eta_pct_per_W_cm2": (REQUIRED, "%/(W cm^2)", _nonneg, "SHG/OPA normalized efficiency"),
    "squeezer.length_cm": (REQUIRED, "cm", _pos, "poled length of each of the SHG and OPA sections"),
    "squeezer.delta_k_rad_per_cm": (0.0, "rad/cm", _any, "residual phase mismatch in the SHG section"),
    "squeezer.rk4_steps": (1024, "", lambda x: x >= 16, "RK4 steps for the SHG section"),
    "pump_filter.extinction_per_stage_dB": (6.0, "dB", _nonneg, "FH extinction per coupler after SHG"),
    "pump_filter.sh_transmission": (1.0, "", _unit, "SH through-fraction per coupler after SHG"),
    "pump_filter.stages": (3, "", lambda x: x >= 1, "couplers after SHG"),
    "output_filter.extinction_per_stage_dB": (6.0, "dB", _nonneg, "FH extinction per coupler after OPA"),
    "output_filter.sh_transmission": (1.0, "", _unit, "SH through-fraction per coupler after OPA"),
    "output_filter.stages": (3, "", lambda x: x >= 1, "couplers after OPA"),
    "paths.squeezer_in_dB": (0.0, "dB", _nonneg, "loss from input splitter to SHG"),
    "paths.sh_dB": (0.0, "dB", _nonneg, "SH loss between pump filter and OPA"),
    "paths.squeezer_out_dB": (0.0, "dB", _nonneg, "loss from output filter to signal interferometer"),
    "paths.lo_dB": (0.0, "dB", _nonneg, "LO path loss"),
    "lo.vpi_V": (REQUIRED, "V", _pos, "LO phase shifter half-wave voltage"),
    "lo.bias_V": (0.0, "V", _any, "LO phase shifter DC bias"),
    "lo.vpp_V": (0.5, "V", _nonneg, "LO calibration tone peak-to-peak voltage"),
    "lo.tone_MHz": (72.0, "MHz", _nonneg, "LO calibration tone frequency"),
    "lo.electrode_length_mm": (2.5, "mm", _pos, "LO electrode length"),
    "lo.metal_loss_dB_per_cm": (0.0, "dB/cm", lambda x: 0 <= x < 0.05, "metal proximity loss"),
    "lo.drift_rad": (0.0, "rad", _any, "quasi-static phase drift"),
    "signal.tone_MHz": (60.0, "MHz", _pos, "signal-interferometer tone frequency"),
    "signal.tone_dBm": (-83.0, "dBm", _any, "RF drive power of the signal tone into 50 ohm"),
    "signal.vpi_V": (28.6, "V", _pos, "signal-interferometer half-wave voltage"),
    "signal.rf_insertion_loss_dB": (1.22, "dB", _nonneg, "cable, DC block and bias-tee loss"),
    "detection.propagation_dB": (0.8, "dB", _nonneg, "waveguide propagation loss seen by the squeezed state"),
    "detection.collection_dB": (5.4, "dB", _nonneg, "lensed multimode fiber collection loss"),
    "detection.detector_qe_dB": (0.8, "dB", _nonneg, "photodiode quantum-efficiency loss"),
    "detection.responsivity_A_per_W": (1.0, "A/W", _pos, "responsivity in the calibration-tone law"),
    "detection.conversion_gain_V_per_W": (1.25e5, "V/W", _pos, "receiver RF conversion gain"),
    "detection.impedance_ohm": (50.0, "ohm", _pos, "detector/analyzer impedance"),
    "detection.electronic_floor_dBm_per_Hz": (-102.0, "dBm/Hz", _any, "electronic noise floor"),
    "detection.rbw_kHz": (60.0, "kHz", _pos, "analyzer resolution bandwidth"),
    "detection.f_start_MHz": (50.0, "MHz", _pos, "analyzer start frequency"),
    "detection.f_stop_MHz": (80.0, "MHz", _pos, "analyzer stop frequency"),
    "detection.lo_power_mW": (7.8, "mW", _nonneg, "LO power for squeezing runs"),
    "leakage.epsilon": (0.04, "", lambda x: 0 <= x < 1, "leakage-to-LO power ratio used by the BHD model"),
    "model_band.eta_sigma_pct_per_W_cm2": (200.0, "%/(W cm^2)", _nonneg, "eta uncertainty"),
    "model_band.phase_offset_rad": (0.0, "rad", _any, "squeezed-axis offset from calibrated LO phase"),
    "model_band.phase_sigma_rad": (0.05, "rad", _nonneg, "phase offset uncertainty"),
    "model_band.convention": ("derived", "", lambda x: x in ("derived", "printed"), "leakage coefficient"),
    "qpm.period_um": (3.7, "um", _pos, "poling period"),
    "qpm.length_cm": (0.81, "cm", _pos, "diagnostic waveguide length"),
    "qpm.phase_noise_rad_per_sqrt_cm": (7.0, "rad/sqrt(cm)", _nonneg, "random-walk poling phase noise"),
    "qpm.segments": (200, "", lambda x: x >= 1, "phase samples along z"),
    "qpm.center_nm": (1544.0, "nm", _pos, "phase-matched FH wavelength"),
    "qpm.dispersion_slope_rad_per_cm_nm": (3.5, "rad/(cm nm)", _any, "d(delta k)/d(lambda)"),
    "qpm.dispersion_file": ("", "", _any, "optional two-column table (nm, rad/cm)"),
    "projection.detection_loss_dB": (0.8, "dB", _nonneg, "reduced-loss detection chain"),
    "projection.laser_coupling_dB": (0.6, "dB", _nonneg, "reduced-loss laser insertion"),
    "projection.max_onchip_mW": (96.0, "mW", _pos, "highest on-chip pump power"),
    "noise.cal_relative": (0.05, "", _nonneg, "multiplicative noise on calibration-tone samples"),
    "noise.shg_relative": (0.0, "", _nonneg, "multiplicative noise on synthetic SHG samples"),
    "snr.floor_suppression": (0.04, "", lambda x: 0 <= x < 1, "shot-noise floor reduction by squeezing"),
}

SCENARIO_KEYS = {"grid", "seed", "outputs", "sweep", "description"}


def default_config_path() -> Path:
    return Path(str(resources.files("sqzsim") / "data" / "operating_point.toml"))


def _flatten(doc: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


@dataclass
class Config:
    values: dict[str, Any]
    scenarios: dict[str, dict]
    warnings: list[str]
    source: str = ""

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def section(self, name: str) -> dict[str, Any]:
        pre = name + "."
        return {k[len(pre):]: v for k, v in self.values.items() if k.startswith(pre)}

    def report(self) -> list[str]:
        lines = []
        for key in sorted(self.values):
            unit = SCHEMA[key][1] if key in SCHEMA else ""
            lines.append(f"{key} = {self.values[key]!r}" + (f"  [{unit}]" if unit else ""))
        for name in sorted(self.scenarios):
            lines.append(f"scenario.{name} = {self.scenarios[name]!r}")
        return lines


def parse_override(item: str) -> tuple[str, Any]:
    if "=" not in item:
        raise ConfigError(item, "override must look like key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def _check_grid(name: str, grid) -> list[float]:
    path = f"scenario.{name}.grid"
    if isinstance(grid, dict):
        try:
            start, stop, num = float(grid["start"]), float(grid["stop"]), int(grid["num"])
        except KeyError as exc:
            raise ConfigError(path, f"missing {exc.args[0]!r}") from None
        if num < 1:
            raise ConfigError(path, "sweep grid is empty")
        return [float(x) for x in np.linspace(start, stop, num)]
    if isinstance(grid, list):
        if not grid:
            raise ConfigError(path, "sweep grid is empty")
        return [float(x) for x in grid]
    raise ConfigError(path, "grid must be a list or a {start, stop, num} table")


def load_config(path=None, overrides=()) -> Config:
    """Parse, default-fill and validate a scenario configuration.

    Parse failures raise :class:`ConfigError` carrying tomli's line/column text.
    Unknown keys produce warnings only.
    """
    path = Path(path) if path is not None else default_config_path()
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"parse error: {exc}") from None
    return build_config(doc, overrides, source=str(path))


def build_config(doc: dict, overrides=(), source: str = "") -> Config:
    doc = copy.deepcopy(doc)
    raw_scen = doc.pop("scenario", {})
    flat = _flatten(doc)
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        if key.startswith("scenario."):
            _, name, field = key.split(".", 2)
            raw_scen.setdefault(name, {})[field] = value
        else:
            flat[key] = value

    notes = []
    for key in sorted(set(flat) - set(SCHEMA)):
        msg = f"unknown key {key!r} ignored"
        notes.append(msg)
        warnings.warn(msg, ConfigWarning, stacklevel=2)

    values: dict[str, Any] = {}
    for key, (default, unit, check, _desc) in SCHEMA.items():
        if key in flat:
            value = flat[key]
        elif default is REQUIRED:
            raise ConfigError(key, "required parameter is missing")
        else:
            value = default
        if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if default is not REQUIRED and default is not None and not isinstance(value, type(default)):
            raise ConfigError(key, f"expected {type(default).__name__}, got {value!r}")
        if default is REQUIRED and not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        if not check(value):
            raise ConfigError(key, f"value {value!r} out of range")
        values[key] = value

    scenarios = {}
    for name, spec in raw_scen.items():
        if not isinstance(spec, dict):
            raise ConfigError(f"scenario.{name}", "must be a table")
        for k in set(spec) - SCENARIO_KEYS:
            msg = f"unknown key 'scenario.{name}.{k}' ignored"
            notes.append(msg)
            warnings.warn(msg, ConfigWarning, stacklevel=2)
        if "seed" not in spec:
            raise ConfigError(f"scenario.{name}.seed", "seed is mandatory")
        if not isinstance(spec["seed"], int):
            raise ConfigError(f"scenario.{name}.seed", "seed must be an integer")
        entry = {"seed": spec["seed"], "outputs": list(spec.get("outputs", ["csv", "svg"])),
                 "sweep": spec.get("sweep", "")}
        if "grid" in spec:
            entry["grid"] = _check_grid(name, spec["grid"])
        scenarios[name] = entry
    return Config(values, scenarios, notes, source)


def validate_config(path) -> list[str]:
    """Resolved-parameter report for ``path``; raises :class:`ConfigError` on failure."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConfigWarning)
        cfg = load_config(path)
    return [f"warning: {w}" for w in cfg.warnings] + cfg.report()
