"""Transmission-line measurement analysis.

Resistances of ``n_parallel`` identical wires measured together are turned
into per-wire values (``R * n_parallel``) and fitted with
``R = 2 Rc + rho_lin * L``: the intercept counts two identical contacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

CONDUCTION_THRESHOLD = 1e5


@dataclass
class TlmDataset:
    length_m: np.ndarray
    resistance_ohm: np.ndarray
    n_parallel: int = 1
    temperature_K: float = 300.0
    label: str = ""

    def __post_init__(self):
        self.length_m = np.asarray(self.length_m, dtype=float)
        self.resistance_ohm = np.asarray(self.resistance_ohm, dtype=float)
        if self.length_m.ndim != 1 or self.length_m.shape != self.resistance_ohm.shape:
            raise ValueError("lengths and resistances must be 1-D and of equal length")
        if self.length_m.size < 2:
            raise ValueError("a TLM dataset needs at least 2 points")
        if not np.all(self.resistance_ohm > 0):
            raise ValueError("resistances must be positive")
        if not np.all(np.isfinite(self.length_m)):
            raise ValueError("lengths must be finite")
        if int(self.n_parallel) != self.n_parallel or self.n_parallel < 1:
            raise ValueError("n_parallel must be a positive integer")
        self.n_parallel = int(self.n_parallel)

    @classmethod
    def from_points(cls, points, **kw) -> "TlmDataset":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1], **kw)

    @property
    def per_wire_resistance(self) -> np.ndarray:
        return self.resistance_ohm * self.n_parallel


@dataclass
class TlmResult:
    contact_resistance: float
    resistance_per_length: float
    r_squared: float
    std_errors: dict
    mean_resistance: float
    n_points: int
    nonphysical_contact: bool = False


def fit_tlm(data: TlmDataset) -> TlmResult:
    """Ordinary least squares of per-wire resistance against segment length.

    Standard errors are NaN for two points (no residual degrees of freedom).
    A negative contact resistance is returned with ``nonphysical_contact``
    set rather than raised.
    """
    L = data.length_m
    R = data.per_wire_resistance
    n = L.size
    if np.unique(L).size < 2:
        raise ValueError("degenerate TLM data: all segment lengths are identical")
    Lm, Rm = L.mean(), R.mean()
    sxx = float(np.sum((L - Lm) ** 2))
    slope = float(np.sum((L - Lm) * (R - Rm)) / sxx)
    intercept = float(Rm - slope * Lm)
    resid = R - (intercept + slope * L)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((R - Rm) ** 2))
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    if n > 2:
        s2 = ss_res / (n - 2)
        se_slope = math.sqrt(s2 / sxx)
        se_int = math.sqrt(s2 * (1.0 / n + Lm**2 / sxx))
    else:
        se_slope = se_int = math.nan
    rc = intercept / 2.0
    return TlmResult(
        contact_resistance=rc,
        resistance_per_length=slope,
        r_squared=r2,
        std_errors={"contact_resistance": se_int / 2.0, "resistance_per_length": se_slope},
        mean_resistance=float(data.resistance_ohm.mean()),
        n_points=n,
        nonphysical_contact=rc < 0,
    )


def control_ratio(
    sample: Union[TlmResult, float],
    control: float,
    threshold: float = CONDUCTION_THRESHOLD,
):
    """``control / sample`` resistance and whether it reaches ``threshold``.

    A ratio of at least ``threshold`` (five orders of magnitude by default)
    attributes the conduction to the sample's deposited channel.
    """
    r_sample = sample.mean_resistance if isinstance(sample, TlmResult) else float(sample)
    control = float(control)
    if not (r_sample > 0 and control > 0):
        raise ValueError("resistances must be positive")
    ratio = control / r_sample
    return ratio, ratio >= threshold
