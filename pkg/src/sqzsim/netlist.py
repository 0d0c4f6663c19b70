"""Photonic circuit of the squeezed-light sensor and its classical/Gaussian propagation.

Topology::

    laser -> facet -> input MZI --cross--> SHG -> pump filter -> OPA -> output filter --> BHD input 0
                               \\--bar----> LO phase shifter ----------------------------> BHD input 1
                                                   |                 |
                                            FH monitor (drop)   SH monitor (through)

The pump filter keeps SH in its through waveguide and drops FH; the output
filter is used the other way round, crossing the squeezed FH to the output
and leaving SH in the through waveguide for the monitor.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gaussian as g
from .eo import DichroicFilter, PhaseShifter, filter_cascade, mzi_transfer
from .homodyne import lock_phase
from .nonlinear import TwmParams, eta_from_percent, integrate_twm, opa_gain_exponent, shg_power

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PicNetlist:
    input_facet_db: float
    input_splitter: PhaseShifter
    eta: float                      # 1/(W cm^2)
    length_cm: float
    delta_k: float
    rk4_steps: int
    pump_filter: DichroicFilter
    output_filter: DichroicFilter
    lo_shifter: PhaseShifter
    squeezer_in_db: float = 0.0
    sh_db: float = 0.0
    squeezer_out_db: float = 0.0
    lo_db: float = 0.0
    phi2: float | None = None       # None: lock the output splitter to zero DC

    def __post_init__(self):
        for name in ("input_facet_db", "squeezer_in_db", "sh_db", "squeezer_out_db", "lo_db"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def phi1(self) -> float:
        return self.input_splitter.dc_phase

    @property
    def phi_lo(self) -> float:
        return self.lo_shifter.dc_phase

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PicNetlist":
        d = dict(d)
        d.pop("schema_version", None)
        for key, typ in (("input_splitter", PhaseShifter), ("lo_shifter", PhaseShifter),
                         ("pump_filter", DichroicFilter), ("output_filter", DichroicFilter)):
            d[key] = typ(**d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "PicNetlist":
        return cls.from_dict(json.loads(text))


def build_pic(cfg) -> PicNetlist:
    """Netlist from a validated :class:`~sqzsim.config.Config`."""
    return PicNetlist(
        input_facet_db=cfg["coupling.input_facet_dB"],
        input_splitter=PhaseShifter(vpi=cfg["input_splitter.vpi_V"], v_dc=cfg["input_splitter.bias_V"]),
        eta=eta_from_percent(cfg["squeezer.eta_pct_per_W_cm2"]),
        length_cm=cfg["squeezer.length_cm"],
        delta_k=cfg["squeezer.delta_k_rad_per_cm"],
        rk4_steps=cfg["squeezer.rk4_steps"],
        pump_filter=DichroicFilter(cfg["pump_filter.extinction_per_stage_dB"],
                                   cfg["pump_filter.sh_transmission"], cfg["pump_filter.stages"]),
        output_filter=DichroicFilter(cfg["output_filter.extinction_per_stage_dB"],
                                     cfg["output_filter.sh_transmission"], cfg["output_filter.stages"]),
        lo_shifter=PhaseShifter(vpi=cfg["lo.vpi_V"], v_dc=cfg["lo.bias_V"], v_pp=cfg["lo.vpp_V"],
                                rf_freq=cfg["lo.tone_MHz"] * 1e6,
                                electrode_length_mm=cfg["lo.electrode_length_mm"],
                                metal_loss_db_per_cm=cfg["lo.metal_loss_dB_per_cm"],
                                drift=cfg["lo.drift_rad"]),
        squeezer_in_db=cfg["paths.squeezer_in_dB"],
        sh_db=cfg["paths.sh_dB"],
        squeezer_out_db=cfg["paths.squeezer_out_dB"],
        lo_db=cfg["paths.lo_dB"],
    )


@dataclass
class PropagationResult:
    nodes: dict[str, float]          # classical power at named nodes, W
    ports: dict[str, float]          # power leaving the circuit through each port, W
    losses: dict[str, float]         # power dissipated per lossy element, W
    state: g.GaussianState           # (squeezed path, LO path) at the signal interferometer
    eps: float
    phi2: float
    squeezing_parameter: float
    input_power: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def sqrt_eps(self) -> float:
        """Leakage amplitude over LO amplitude at the signal interferometer."""
        return float(np.sqrt(self.eps))

    @property
    def onchip_ratio(self) -> float:
        return self.state.variances(0)[0] / g.VACUUM_VARIANCE

    def balance_error(self) -> float:
        total = sum(self.ports.values()) + sum(self.losses.values())
        return abs(total - self.input_power) / max(self.input_power, 1e-300)


def _attenuate(power, loss_db, name, losses):
    out = float(power * g.db_to_transmissivity(loss_db))
    losses[name] = float(power) - out
    return out


def propagate(net: PicNetlist, laser_power: float) -> PropagationResult:
    """Steady-state classical powers and squeezed-path Gaussian state for ``laser_power`` W off chip."""
    if not laser_power >= 0:
        raise ValueError("laser power must be >= 0")
    nodes: dict[str, float] = {"laser": laser_power}
    losses: dict[str, float] = {}
    ports: dict[str, float] = {}

    chip = _attenuate(laser_power, net.input_facet_db, "input_facet", losses)
    nodes["chip_in"] = chip
    bar, cross = mzi_transfer(net.phi1)
    nodes["split_lo"] = chip * bar
    nodes["split_squeezer"] = chip * cross

    pump = _attenuate(nodes["split_squeezer"], net.squeezer_in_db, "squeezer_in", losses)
    nodes["shg_in_fh"] = pump
    if net.delta_k == 0:
        p_sh = float(shg_power(pump, net.eta, net.length_cm))
    else:
        _, b = integrate_twm(np.sqrt(pump), 0.0, TwmParams(net.eta, net.length_cm, net.delta_k),
                             net.rk4_steps)
        p_sh = abs(b) ** 2
    p_fh = pump - p_sh
    nodes["shg_out_fh"], nodes["shg_out_sh"] = p_fh, p_sh

    fh_thru, sh_thru = filter_cascade(net.pump_filter)
    leak = p_fh * fh_thru
    ports["fh_monitor"] = float(p_fh * (1 - fh_thru) + p_sh * (1 - sh_thru))
    nodes["fh_monitor_fh"] = p_fh * (1 - fh_thru)
    sh_pump = _attenuate(p_sh * sh_thru, net.sh_db, "sh_path", losses)
    nodes["opa_pump_sh"] = sh_pump
    nodes["opa_in_fh"] = leak

    # OPA: undepleted SH pump; the classical FH leak passes at unit gain
    r = float(opa_gain_exponent(sh_pump, net.eta, net.length_cm))

    out_fh_thru, out_sh_thru = filter_cascade(net.output_filter)
    fh_out = leak * (1 - out_fh_thru)
    ports["sh_monitor"] = float(sh_pump * out_sh_thru + leak * out_fh_thru)
    nodes["sh_monitor_sh"] = sh_pump * out_sh_thru
    sh_spill = sh_pump * (1 - out_sh_thru)
    t_out = g.db_to_transmissivity(net.squeezer_out_db)
    leak_bhd = _attenuate(fh_out, net.squeezer_out_db, "squeezer_out_fh", losses)
    ports["bhd_sh_spill"] = _attenuate(sh_spill, net.squeezer_out_db, "squeezer_out_sh", losses)
    nodes["bhd_in_leak"] = leak_bhd

    lo = _attenuate(nodes["split_lo"], net.lo_db, "lo_path", losses)
    lo = _attenuate(lo, net.lo_shifter.insertion_loss_db(), "lo_metal", losses)
    nodes["bhd_in_lo"] = lo

    if lo > 0:
        eps = leak_bhd / lo
    else:
        eps = 0.0 if leak_bhd == 0 else float("inf")
    phi_lo = net.phi_lo
    if net.phi2 is not None:
        phi2 = net.phi2
    elif eps < 1:
        phi2 = float(lock_phase(eps, phi_lo))
    else:
        phi2 = np.pi / 2
    s, c = np.sin(phi2 / 2), np.cos(phi2 / 2)
    a_leak = np.sqrt(leak_bhd)
    a_lo = np.sqrt(lo) * np.exp(1j * phi_lo)
    ports["bhd_out1"] = float(abs(s * a_leak + c * a_lo) ** 2)
    ports["bhd_out2"] = float(abs(c * a_leak - s * a_lo) ** 2)

    st = g.vacuum_state(2)
    st = g.apply_squeezer(st, 0, r)
    st = g.apply_loss(st, 0, 1 - out_fh_thru)
    st = g.apply_loss(st, 0, t_out)
    st = g.apply_loss(st, 1, g.db_to_transmissivity(net.lo_db))
    st = g.apply_phase_rotation(st, 1, phi_lo)

    return PropagationResult(nodes=nodes, ports=ports, losses=losses, state=st, eps=float(eps),
                             phi2=float(phi2), squeezing_parameter=r, input_power=laser_power,
                             extra={"phi1": net.phi1, "phi_lo": phi_lo})


def monitor_readout(result: PropagationResult) -> tuple[float, float]:
    """(FH monitor, SH monitor) port powers in W."""
    return result.ports["fh_monitor"], result.ports["sh_monitor"]


def detection_efficiency(cfg) -> float:
    """End-to-end detection transmissivity from the configured loss budget."""
    total = cfg["detection.propagation_dB"] + cfg["detection.collection_dB"] + cfg["detection.detector_qe_dB"]
    return g.db_to_transmissivity(total)
