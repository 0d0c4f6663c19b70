"""Simulation and calibration toolkit for an integrated squeezed-light phase sensor."""

from __future__ import annotations

from .config import Config, ConfigError, load_config
from .fitting import FitError, FitResult, ModelBand
from .gaussian import GaussianState, SymplecticOp, vacuum_state
from .homodyne import BhdConfig, RfSpectrum
from .netlist import PicNetlist, PropagationResult, build_pic, propagate
from .nonlinear import PolingProfile, TwmParams

__version__ = "0.1.0"

__all__ = [
    "BhdConfig", "Config", "ConfigError", "FitError", "FitResult", "GaussianState", "ModelBand",
    "PicNetlist", "PolingProfile", "PropagationResult", "RfSpectrum", "SymplecticOp", "TwmParams",
    "build_pic", "load_config", "propagate", "vacuum_state",
]
