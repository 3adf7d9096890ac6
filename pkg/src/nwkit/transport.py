"""Quasi-1D weak-localization magnetoconductance of a diffusive nanowire.

All functions accept scalars or numpy arrays for the field ``B`` and only
ever use ``|B|``. Zero field maps the magnetic lengths and dephasing time to
``math.inf``; the conductance kernels work with the inverse squared
dephasing length, which is simply zero there.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

# Exact SI values (2019 redefinition).
E_CHARGE = 1.602176634e-19
H_PLANCK = 6.62607015e-34
HBAR = H_PLANCK / (2.0 * math.pi)

INFINITE_LENGTH = math.inf
INFINITE_TIME = math.inf

# Minimum width/mean-free-path ratio for the diffusive quasi-1D model.
DIFFUSIVE_WIDTH_RATIO = 5.0


@dataclass(frozen=True)
class PhysicalConstants:
    e: float = E_CHARGE
    h: float = H_PLANCK
    hbar: float = HBAR

    @property
    def conductance_quantum(self) -> float:
        """G0 = 2e^2/h in siemens."""
        return 2.0 * self.e**2 / self.h


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class TransportGeometry:
    """Contact spacing ``L`` and conducting channel width ``W`` (meters).

    ``mean_free_path`` is optional; when given, ``is_diffusive`` reports
    whether ``W >= 5 * l_e``. A violation only warns.
    """

    L: float
    W: float
    mean_free_path: Optional[float] = None

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"contact spacing L must be positive, got {self.L!r}")
        if not (self.W > 0 and math.isfinite(self.W)):
            raise ValueError(f"channel width W must be positive, got {self.W!r}")
        if self.mean_free_path is not None:
            if not self.mean_free_path > 0:
                raise ValueError("mean free path must be positive")
            if not self.is_diffusive:
                warnings.warn(
                    f"W = {self.W:.3g} m is below {DIFFUSIVE_WIDTH_RATIO:g} x l_e; "
                    "the diffusive quasi-1D model may not apply",
                    stacklevel=3,
                )

    @property
    def is_diffusive(self) -> bool:
        if self.mean_free_path is None:
            return True
        return self.W >= DIFFUSIVE_WIDTH_RATIO * self.mean_free_path


@dataclass(frozen=True)
class WlParams:
    l_phi: float
    geometry: TransportGeometry
    l_so: Optional[float] = None

    def __post_init__(self):
        if not (self.l_phi > 0 and math.isfinite(self.l_phi)):
            raise ValueError(f"l_phi must be positive, got {self.l_phi!r}")
        if self.l_so is not None and not self.l_so > 0:
            raise ValueError(f"l_so must be positive when given, got {self.l_so!r}")

    @property
    def has_spin_orbit(self) -> bool:
        return self.l_so is not None


@dataclass(frozen=True)
class MaterialParams:
    fermi_velocity: float
    mean_free_path: float

    def __post_init__(self):
        if not self.fermi_velocity > 0:
            raise ValueError("Fermi velocity must be positive")
        if not self.mean_free_path > 0:
            raise ValueError("mean free path must be positive")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def magnetic_length(B):
    """sqrt(hbar / (e |B|)); infinite at B = 0."""
    b = np.abs(np.asarray(B, dtype=float))
    with np.errstate(divide="ignore"):
        lm = np.sqrt(HBAR / (E_CHARGE * b))
    return _out(lm)


def magnetic_dephasing_length(B, W):
    """sqrt(3) l_m^2 / W. The diffusion constant cancels out."""
    if not W > 0:
        raise ValueError("W must be positive")
    b = np.abs(np.asarray(B, dtype=float))
    with np.errstate(divide="ignore"):
        lb = math.sqrt(3.0) * HBAR / (E_CHARGE * b * W)
    return _out(lb)


def magnetic_dephasing_time(B, W, D):
    """3 l_m^4 / (W^2 D) in seconds; infinite at B = 0."""
    if not W > 0:
        raise ValueError("W must be positive")
    if not D > 0:
        raise ValueError(f"diffusion constant must be positive, got {D!r}")
    lm = np.asarray(magnetic_length(B), dtype=float)
    return _out(3.0 * lm**4 / (W**2 * D))


def diffusion_constant_1d(material: MaterialParams) -> float:
    return material.fermi_velocity * material.mean_free_path


def inverse_dephasing_length_sq(B, W):
    """1 / l_B^2 = W^2 (e B / hbar)^2 / 3, finite (zero) at B = 0."""
    b = np.asarray(B, dtype=float)
    return (W * E_CHARGE * b / HBAR) ** 2 / 3.0


def delta_g_base(B, l_phi, W, L):
    """Base WL correction from raw floats; see :func:`wl_delta_g`."""
    s = 1.0 / l_phi**2 + inverse_dephasing_length_sq(B, W)
    return -(2.0 * E_CHARGE**2 / (H_PLANCK * L)) / np.sqrt(s)


def delta_g_spin_orbit(B, l_phi, l_so, W, L):
    """Triplet/singlet WL correction from raw floats; see :func:`wl_so_delta_g`."""
    s = 1.0 / l_phi**2 + inverse_dephasing_length_sq(B, W)
    t = s + 4.0 / (3.0 * l_so**2)
    return -(E_CHARGE**2 / (H_PLANCK * L)) * (3.0 / np.sqrt(t) - 1.0 / np.sqrt(s))


def wl_delta_g(B, params: WlParams):
    """Weak-localization conductance correction in siemens.

    ``-(2e^2 / hL) * (1/l_phi^2 + 1/l_B^2)^(-1/2)``; at zero field this is
    ``-(2e^2/h) * l_phi / L``. Any ``l_so`` on ``params`` is ignored.
    """
    g = params.geometry
    return _out(delta_g_base(B, params.l_phi, g.W, g.L))


def wl_so_delta_g(B, params: WlParams):
    """WL correction with spin-orbit scattering (triplet minus singlet).

    Reduces to :func:`wl_delta_g` as ``l_so -> inf`` and turns positive
    (anti-localization) at zero field once ``l_so`` is well below ``l_phi``.
    """
    if params.l_so is None:
        raise ValueError("wl_so_delta_g requires params.l_so")
    g = params.geometry
    return _out(delta_g_spin_orbit(B, params.l_phi, params.l_so, g.W, g.L))


def model_delta_g(B, params: WlParams):
    """Dispatch on whether ``params`` carries a spin-orbit length."""
    if params.has_spin_orbit:
        return wl_so_delta_g(B, params)
    return wl_delta_g(B, params)
