"""Nanowire analysis toolkit: weak-localization fitting, GPA strain maps,
TLM contact analysis and cross-section shape energetics."""

from .errors import DegenerateFitError, FitError, ParseError
from .fitting import FitConfig, FitResult, MagnetoTrace, fit_wl, lso_lower_bound, simulate_trace
from .transport import MaterialParams, TransportGeometry, WlParams, wl_delta_g, wl_so_delta_g

__version__ = "0.1.0"

__all__ = [
    "DegenerateFitError",
    "FitConfig",
    "FitError",
    "FitResult",
    "MagnetoTrace",
    "MaterialParams",
    "ParseError",
    "TransportGeometry",
    "WlParams",
    "fit_wl",
    "lso_lower_bound",
    "simulate_trace",
    "wl_delta_g",
    "wl_so_delta_g",
]
