"""Cross-section shape from surface plus relaxed elastic energy.

The wire has a rectangular cross-section of fixed area ``A``: two vertical
side facets of height ``h``, a flat top facet of width ``w``, and a base of
width ``w`` where the top-facet energy is replaced by an interface energy.
With aspect ratio ``r = h/w`` the energy per unit length is::

    E(r) = 2 gamma_side h + (gamma_top - gamma_interface) w + M eps0^2 A / (1 + k r)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

# Bulk lattice constants (nm).
A_INAS = 0.60583
A_GAAS = 0.56533


def misfit_strain(a_film: float, a_substrate: float) -> float:
    """(a_substrate - a_film) / a_substrate; negative for compressive films."""
    return (a_substrate - a_film) / a_substrate


def biaxial_modulus(c11: float, c12: float) -> float:
    """Biaxial modulus c11 + c12 - 2 c12^2 / c11 of a cubic crystal."""
    return c11 + c12 - 2.0 * c12**2 / c11


@dataclass(frozen=True)
class CrossSectionModel:
    gamma_top: float
    gamma_side: float
    area: float
    gamma_interface: float = 0.0
    misfit_eps0: float = 0.0
    elastic_modulus: float = 0.0
    relaxation_k: float = 0.0

    def __post_init__(self):
        for name in ("gamma_top", "gamma_side", "gamma_interface"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.area > 0:
            raise ValueError("area must be positive")
        if self.elastic_modulus < 0:
            raise ValueError("elastic_modulus must be non-negative")
        if self.relaxation_k < 0:
            raise ValueError("relaxation_k must be non-negative")

    @classmethod
    def from_mapping(cls, cfg: dict) -> "CrossSectionModel":
        fields = cls.__dataclass_fields__
        unknown = set(cfg) - set(fields)
        if unknown:
            raise ValueError(f"unknown shape parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in cfg.items()})

    @property
    def strain_energy_density(self) -> float:
        """M eps0^2 in J/m^3."""
        return self.elastic_modulus * self.misfit_eps0**2

    def scaled(self, k: float) -> "CrossSectionModel":
        """All energy coefficients multiplied by ``k``."""
        return CrossSectionModel(
            gamma_top=self.gamma_top * k,
            gamma_side=self.gamma_side * k,
            area=self.area,
            gamma_interface=self.gamma_interface * k,
            misfit_eps0=self.misfit_eps0,
            elastic_modulus=self.elastic_modulus * k,
            relaxation_k=self.relaxation_k,
        )


def default_model() -> CrossSectionModel:
    """InAs-on-GaAs defaults shipped in ``data/inas_on_gaas.cfg``."""
    from .io import parse_kv_text

    text = resources.files("nwkit").joinpath("data/inas_on_gaas.cfg").read_text()
    return CrossSectionModel.from_mapping(parse_kv_text(text))


@dataclass(frozen=True)
class CrossSectionShape:
    width: float
    height: float

    @classmethod
    def from_aspect_ratio(cls, area: float, r: float) -> "CrossSectionShape":
        return cls(width=math.sqrt(area / r), height=math.sqrt(area * r))

    @property
    def aspect_ratio(self) -> float:
        return self.height / self.width

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class ShapeOptimum:
    aspect_ratio: float
    energy: float
    shape: CrossSectionShape
    edge_minimum: bool


def facet_dihedral(plane1, plane2) -> float:
    """Angle in degrees between two cubic lattice planes given by Miller indices."""
    n1 = np.asarray(plane1, dtype=float)
    n2 = np.asarray(plane2, dtype=float)
    m1, m2 = np.linalg.norm(n1), np.linalg.norm(n2)
    if m1 == 0 or m2 == 0:
        raise ValueError("Miller indices must not all be zero")
    # atan2 stays accurate for nearly parallel planes, where acos does not
    return math.degrees(math.atan2(float(np.linalg.norm(np.cross(n1, n2))), abs(float(n1 @ n2))))


def relaxation_factor(r, k: float):
    """Fraction of misfit energy retained, 1 / (1 + k r)."""
    return 1.0 / (1.0 + k * np.asarray(r, dtype=float))


def total_energy(model: CrossSectionModel, r):
    """Energy per unit length (J/m) at aspect ratio ``r``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("aspect ratio must be positive")
    h = np.sqrt(model.area * r_arr)
    w = np.sqrt(model.area / r_arr)
    e = (
        2.0 * model.gamma_side * h
        + (model.gamma_top - model.gamma_interface) * w
        + model.strain_energy_density * model.area * relaxation_factor(r_arr, model.relaxation_k)
    )
    return float(e) if e.ndim == 0 else e


def golden_section(f, lo: float, hi: float, rtol: float = 1e-8):
    """Minimize a unimodal ``f`` on ``[lo, hi]``, searching in ``log(x)``.

    Returns ``(x_min, f(x_min))`` once the bracket is below ``rtol`` relative.
    """
    a, b = math.log(lo), math.log(hi)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    # log-bracket width approximates the relative width in x
    while b - a > rtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(math.exp(d))
    x = math.exp(0.5 * (a + b))
    return x, f(x)


def minimize_aspect_ratio(model: CrossSectionModel, bracket=(0.01, 100.0), rtol: float = 1e-8) -> ShapeOptimum:
    """Golden-section minimum of :func:`total_energy` over ``bracket``.

    ``edge_minimum`` is set when the optimum lands within ten tolerances of
    a bracket end, i.e. the true minimum may lie outside.
    """
    lo, hi = (float(v) for v in bracket)
    if not 0 < lo < hi:
        raise ValueError(f"bracket must satisfy 0 < r_lo < r_hi, got {bracket}")
    r, e = golden_section(lambda x: total_energy(model, x), lo, hi, rtol)
    edge = math.log(r / lo) < 10 * rtol or math.log(hi / r) < 10 * rtol
    return ShapeOptimum(r, e, CrossSectionShape.from_aspect_ratio(model.area, r), edge)


def energy_table(model: CrossSectionModel, bracket=(0.01, 100.0), n: int = 201):
    """Log-spaced ``(r, E(r))`` arrays for tabulation."""
    r = np.geomspace(bracket[0], bracket[1], n)
    return r, total_energy(model, r)
