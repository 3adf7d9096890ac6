"""Least-squares extraction of coherence and spin-orbit lengths.

Lengths are optimized in log space (keeps them positive and makes steps
relative); the background conductance is optimized in units of the data's
peak-to-peak swing. Uncertainties are reported in SI units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from .errors import DegenerateFitError, FitError
from .transport import (
    CONSTANTS,
    TransportGeometry,
    WlParams,
    delta_g_base,
    delta_g_spin_orbit,
    inverse_dephasing_length_sq,
    model_delta_g,
)

MODELS = ("base", "spin_orbit")
LENGTH_PARAMS = ("l_phi", "l_so", "W")
# Order of free parameters in Jacobians and covariance matrices.
PARAM_ORDER = ("l_phi", "l_so", "W", "G_bg")

DEFAULT_WIDTH = 20e-9
DEFAULT_LENGTH = 1.25e-6
DEFAULT_INITIAL = {"l_phi": 100e-9, "l_so": 1e-6, "W": DEFAULT_WIDTH}

# Dynamic-range guard for attempting a fit.
LOW_FIELD_T = 0.5
HIGH_FIELD_T = 2.0

# Returned by lso_lower_bound when no grid value is rejected.
UNBOUNDED = 0.0
# Profile refits only need chi^2, which is quadratic in the parameter error.
PROFILE_STEP_TOL = 1e-7
PROFILE_CHI2_RTOL = 1e-9

_RANK_RTOL = 1e-10
_LENGTH_LIMITS = (1e-12, 1.0)


@dataclass
class MagnetoTrace:
    field_T: np.ndarray
    conductance_S: np.ndarray
    bias_mV: float = 0.0
    temperature_K: float = 1.5
    n_parallel: int = 1
    label: str = ""

    def __post_init__(self):
        self.field_T = np.asarray(self.field_T, dtype=float)
        self.conductance_S = np.asarray(self.conductance_S, dtype=float)
        if self.field_T.ndim != 1 or self.field_T.shape != self.conductance_S.shape:
            raise ValueError("field and conductance arrays must be 1-D and of equal length")
        if self.field_T.size < 5:
            raise ValueError(f"a trace needs at least 5 points, got {self.field_T.size}")
        if not np.all(np.isfinite(self.field_T)):
            raise ValueError("field values must be finite")
        if not np.all(np.isfinite(self.conductance_S)):
            raise ValueError("conductance values must be finite")
        if int(self.n_parallel) != self.n_parallel or self.n_parallel < 1:
            raise ValueError(f"n_parallel must be a positive integer, got {self.n_parallel!r}")
        self.n_parallel = int(self.n_parallel)

    def __len__(self):
        return self.field_T.size

    @property
    def per_wire_conductance(self) -> np.ndarray:
        return self.conductance_S / self.n_parallel

    def check_dynamic_range(self):
        b = np.abs(self.field_T)
        if not (b.min() <= LOW_FIELD_T and b.max() >= HIGH_FIELD_T):
            raise ValueError(
                f"trace must reach |B| <= {LOW_FIELD_T} T and |B| >= {HIGH_FIELD_T} T "
                f"(has {b.min():.3g} .. {b.max():.3g} T)"
            )


@dataclass
class FitConfig:
    """Fit settings.

    ``fixed`` holds parameters pinned to a value; ``L`` must always be
    present. Removing ``W`` from ``fixed`` frees the channel width.
    ``field_window`` restricts the fit to ``|B| <= field_window``.
    ``chi2_rtol > 0`` stops early once an accepted step lowers chi^2 by less
    than that fraction; such a stop does not count as converged.
    """

    model: str = "base"
    fixed: dict = field(default_factory=lambda: {"W": DEFAULT_WIDTH, "L": DEFAULT_LENGTH})
    initial: dict = field(default_factory=dict)
    max_iterations: int = 200
    convergence_tol: float = 1e-10
    damping_init: float = 1e-3
    chi2_rtol: float = 0.0
    field_window: Optional[float] = None
    lso_grid_min: float = 10e-9
    lso_grid_max: float = 10e-6
    lso_per_decade: int = 60

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if "L" not in self.fixed:
            raise ValueError("contact spacing 'L' must be given in FitConfig.fixed")
        unknown = set(self.fixed) - {"L", *PARAM_ORDER}
        if unknown:
            raise ValueError(f"unknown fixed parameters: {sorted(unknown)}")
        for name, val in self.initial.items():
            if name in LENGTH_PARAMS and not val > 0:
                raise ValueError(f"initial {name} must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if not self.damping_init > 0:
            raise ValueError("damping_init must be positive")

    @property
    def free_parameters(self) -> tuple:
        names = ["l_phi", "W", "G_bg"]
        if self.model == "spin_orbit":
            names.append("l_so")
        return tuple(p for p in PARAM_ORDER if p in names and p not in self.fixed)


@dataclass
class FitResult:
    params: WlParams
    background_G: float
    free: tuple
    std_errors: dict
    covariance: np.ndarray
    chi2: float
    n_iterations: int
    converged: bool
    n_points: int
    chi2_history: list = field(default_factory=list)
    message: str = ""

    def value(self, name: str) -> float:
        if name == "G_bg":
            return self.background_G
        if name == "W":
            return self.params.geometry.W
        if name == "L":
            return self.params.geometry.L
        return getattr(self.params, name)

    def model(self, B):
        """Per-wire conductance predicted by the fit."""
        return self.background_G + model_delta_g(B, self.params)


def model_jacobian(B, values: dict, names, model: str = "base"):
    """Analytic derivatives of ``G_bg + dG(B)`` w.r.t. ``names``.

    ``values`` must hold ``l_phi, W, L, G_bg`` (and ``l_so`` for the
    spin-orbit model). Returns an ``(len(B), len(names))`` array.
    """
    B = np.asarray(B, dtype=float)
    l_phi, W, L = values["l_phi"], values["W"], values["L"]
    beta = inverse_dephasing_length_sq(B, 1.0)  # 1/l_B^2 = W^2 * beta
    s = 1.0 / l_phi**2 + W**2 * beta
    c = 2.0 * CONSTANTS.e**2 / (CONSTANTS.h * L)
    if model == "base":
        core = s**-1.5
        d = {
            "l_phi": -c * core / l_phi**3,
            "W": c * core * W * beta,
        }
    else:
        l_so = values["l_so"]
        t = s + 4.0 / (3.0 * l_so**2)
        core = 3.0 * t**-1.5 - s**-1.5
        d = {
            "l_phi": -0.5 * c * core / l_phi**3,
            "W": 0.5 * c * core * W * beta,
            "l_so": -2.0 * c * t**-1.5 / l_so**3,
        }
    d["G_bg"] = np.ones_like(B)
    return np.column_stack([d[n] for n in names])


def _model_values(B, values, model):
    if model == "base":
        dg = delta_g_base(B, values["l_phi"], values["W"], values["L"])
    else:
        dg = delta_g_spin_orbit(B, values["l_phi"], values["l_so"], values["W"], values["L"])
    return values["G_bg"] + dg


def parameter_uncertainty(jacobian, residuals, names=None):
    """Linearized covariance ``s^2 (J^T J)^-1`` with ``s^2 = chi2 / (n - p)``.

    Returns ``(std_errors, covariance)``. Columns are rescaled to unit norm
    before the SVD so that mixed units do not masquerade as rank deficiency.
    """
    J = np.asarray(jacobian, dtype=float)
    r = np.asarray(residuals, dtype=float)
    n, p = J.shape
    if names is None:
        names = [f"p{j}" for j in range(p)]
    if n <= p:
        raise FitError(f"need more points than parameters (n={n}, p={p})")
    _check_rank(J, names)
    norms = np.linalg.norm(J, axis=0)
    _, sv, vt = np.linalg.svd(J / norms, full_matrices=False)
    inv_n = (vt.T / sv**2) @ vt
    s2 = float(r @ r) / (n - p)
    cov = s2 * inv_n / np.outer(norms, norms)
    cov = 0.5 * (cov + cov.T)
    return np.sqrt(np.clip(np.diag(cov), 0.0, None)), cov


def _check_rank(J, names):
    norms = np.linalg.norm(J, axis=0)
    top = norms.max() if norms.size else 0.0
    for j, nrm in enumerate(norms):
        if not nrm > _RANK_RTOL * top or not np.isfinite(nrm):
            raise DegenerateFitError(names[j], "zero sensitivity")
    _, sv, vt = np.linalg.svd(J / norms, full_matrices=False)
    if sv[-1] < _RANK_RTOL * sv[0]:
        worst = int(np.argmax(np.abs(vt[-1])))
        raise DegenerateFitError(names[worst], f"condition number {sv[0] / sv[-1]:.2e}")


class _Problem:
    """Residuals and Jacobian in the internal (log-length, scaled-G) space."""

    def __init__(self, B, G, config: FitConfig):
        self.B = B
        self.G = G
        self.model = config.model
        self.free = config.free_parameters
        self.fixed = dict(config.fixed)
        self.gscale = float(np.ptp(G))

    def values(self, theta):
        vals = dict(self.fixed)
        for name, th in zip(self.free, theta):
            vals[name] = th * self.gscale if name == "G_bg" else math.exp(th)
        return vals

    def to_theta(self, vals):
        return np.array(
            [vals[n] / self.gscale if n == "G_bg" else math.log(vals[n]) for n in self.free]
        )

    def residuals(self, theta):
        return _model_values(self.B, self.values(theta), self.model) - self.G

    def jacobian(self, theta):
        vals = self.values(theta)
        J = model_jacobian(self.B, vals, self.free, self.model)
        scale = [self.gscale if n == "G_bg" else vals[n] for n in self.free]
        return J * np.asarray(scale)

    def step_size(self, theta, delta):
        rel = [
            abs(d) / max(abs(t), 1.0) if n == "G_bg" else abs(d)
            for n, t, d in zip(self.free, theta, delta)
        ]
        return max(rel)


def _initial_values(B, G, config: FitConfig):
    vals = dict(config.fixed)
    for name in ("W", "l_so"):
        if name not in vals:
            vals[name] = config.initial.get(name, DEFAULT_INITIAL[name])
    if "l_phi" not in vals:
        if "l_phi" in config.initial:
            vals["l_phi"] = config.initial["l_phi"]
        else:
            # Zero-field dip depth ~ G0 * l_phi / L when l_B(B_max) << l_phi.
            order = np.argsort(np.abs(B))
            dip = np.mean(G[order[-3:]]) - np.mean(G[order[:3]])
            est = dip * vals["L"] / CONSTANTS.conductance_quantum
            vals["l_phi"] = est if est > 5e-9 else DEFAULT_INITIAL["l_phi"]
    if "G_bg" not in vals:
        if "G_bg" in config.initial:
            vals["G_bg"] = config.initial["G_bg"]
        else:
            vals["G_bg"] = 0.0
            vals["G_bg"] = float(np.mean(G - _model_values(B, vals, config.model)))
    return vals


def fit_wl(trace: MagnetoTrace, config: Optional[FitConfig] = None) -> FitResult:
    """Fit the weak-localization model to a magnetoconductance trace.

    The measured conductance is divided by ``trace.n_parallel`` first.
    Minimization is a damped Gauss-Newton iteration with Marquardt scaling:
    damping is halved after an accepted step and quadrupled after a
    rejected one. Non-convergence is reported through ``converged``;
    an unidentifiable parameter raises :class:`DegenerateFitError`.
    """
    config = config or FitConfig()
    trace.check_dynamic_range()
    B = trace.field_T
    G = trace.per_wire_conductance
    if config.field_window is not None:
        keep = np.abs(B) <= config.field_window
        B, G = B[keep], G[keep]
    free = config.free_parameters
    if B.size <= len(free):
        raise FitError(f"{B.size} points cannot constrain {len(free)} parameters")
    if not np.ptp(G) > 0:
        raise DegenerateFitError("l_phi", "conductance shows no field dependence")

    prob = _Problem(B, G, config)
    theta = prob.to_theta(_initial_values(B, G, config))
    r = prob.residuals(theta)
    chi2 = float(r @ r)
    history = [chi2]
    lam = config.damping_init
    J = prob.jacobian(theta)
    _check_rank(J, free)
    converged = False
    message = "maximum iterations reached"
    it = 0
    while it < config.max_iterations:
        it += 1
        A = J.T @ J
        grad = J.T @ r
        try:
            delta = np.linalg.solve(A + lam * np.diag(np.diag(A)), -grad)
        except np.linalg.LinAlgError:
            raise DegenerateFitError(free[0], "singular normal matrix") from None
        step = prob.step_size(theta, delta)
        trial = theta + delta
        r_new = prob.residuals(trial)
        chi2_new = float(r_new @ r_new)
        if np.isfinite(chi2_new) and chi2_new <= chi2:
            stalled = chi2 - chi2_new < config.chi2_rtol * chi2
            theta, r, chi2 = trial, r_new, chi2_new
            history.append(chi2)
            lam *= 0.5
            J = prob.jacobian(theta)
            _check_rank(J, free)
            if step < config.convergence_tol:
                converged, message = True, "relative step below tolerance"
                break
            if stalled:
                message = "chi2 decrease below chi2_rtol"
                break
        else:
            lam *= 4.0
            if step < config.convergence_tol:
                converged, message = True, "no further decrease at tolerance"
                break
        vals = prob.values(theta)
        for name in free:
            if name in LENGTH_PARAMS and not _LENGTH_LIMITS[0] < vals[name] < _LENGTH_LIMITS[1]:
                raise DegenerateFitError(name, f"diverged to {vals[name]:.3g} m")

    vals = prob.values(theta)
    J_phys = model_jacobian(B, vals, free, config.model)
    std, cov = parameter_uncertainty(J_phys, r, free)
    geometry = TransportGeometry(L=vals["L"], W=vals["W"])
    params = WlParams(
        l_phi=vals["l_phi"],
        geometry=geometry,
        l_so=vals["l_so"] if config.model == "spin_orbit" else None,
    )
    return FitResult(
        params=params,
        background_G=vals["G_bg"],
        free=free,
        std_errors=dict(zip(free, map(float, std))),
        covariance=cov,
        chi2=chi2,
        n_iterations=it,
        converged=converged,
        n_points=int(B.size),
        chi2_history=history,
        message=message,
    )


def chi2_threshold(confidence: float, dof: int = 1) -> float:
    """Delta chi^2 for a profile interval at ``confidence`` (3.84 at 95%, 1 dof)."""
    if not 0.0 <= confidence < 1.0:
        raise ValueError("confidence must lie in [0, 1)")
    return float(stats.chi2.ppf(confidence, dof))


def lso_grid(config: FitConfig) -> np.ndarray:
    """Decreasing, log-spaced spin-orbit lengths for the profile scan."""
    lo, hi = config.lso_grid_min, config.lso_grid_max
    if not 0 < lo < hi:
        raise ValueError("need 0 < lso_grid_min < lso_grid_max")
    n = int(round(math.log10(hi / lo) * config.lso_per_decade)) + 1
    return np.geomspace(hi, lo, n)


@dataclass
class LsoProfile:
    """Profile of the spin-orbit length.

    ``chi2`` is normalized by the noise variance, so it is directly
    comparable with ``chi2_min + threshold``.
    """

    l_so: np.ndarray
    chi2: np.ndarray
    chi2_min: float
    threshold: float
    noise_sigma: float
    base_fit: FitResult

    @property
    def accepted(self) -> np.ndarray:
        return self.chi2 <= self.chi2_min + self.threshold

    @property
    def lower_bound(self) -> float:
        acc = self.accepted
        if acc.all():
            return UNBOUNDED
        return float(self.l_so[acc].min())


def lso_profile(
    trace: MagnetoTrace,
    config: FitConfig,
    confidence: float = 0.95,
    noise_sigma: Optional[float] = None,
) -> LsoProfile:
    """Profile chi^2 over a decreasing grid of fixed spin-orbit lengths.

    Each grid point refits the remaining free parameters, warm-started from
    the previous grid point. Without ``noise_sigma`` the noise level is
    estimated from the residuals of the base-model fit.
    """
    dchi2 = chi2_threshold(confidence)
    base_cfg = replace(
        config, model="base", fixed={k: v for k, v in config.fixed.items() if k != "l_so"}
    )
    base = fit_wl(trace, base_cfg)
    if not base.converged:
        raise FitError("base-model fit did not converge; cannot profile l_so")
    if noise_sigma is None:
        noise_sigma = math.sqrt(base.chi2 / (base.n_points - len(base.free)))
    var = max(noise_sigma**2, np.finfo(float).tiny)
    initial = {n: base.value(n) for n in base.free}
    grid = lso_grid(config)
    chi2 = np.empty_like(grid)
    for i, lso in enumerate(grid):
        cfg = replace(
            config,
            model="spin_orbit",
            fixed={**base_cfg.fixed, "l_so": float(lso)},
            initial=initial,
            convergence_tol=max(config.convergence_tol, PROFILE_STEP_TOL),
            chi2_rtol=max(config.chi2_rtol, PROFILE_CHI2_RTOL),
        )
        res = fit_wl(trace, cfg)
        chi2[i] = res.chi2 / var
        initial = {n: res.value(n) for n in res.free}
    return LsoProfile(
        l_so=grid,
        chi2=chi2,
        chi2_min=float(chi2.min()),
        threshold=dchi2,
        noise_sigma=float(noise_sigma),
        base_fit=base,
    )


def lso_lower_bound(
    trace: MagnetoTrace,
    config: FitConfig,
    confidence: float = 0.95,
    noise_sigma: Optional[float] = None,
) -> float:
    """Smallest grid ``l_so`` whose profile chi^2 stays within the threshold.

    Returns :data:`UNBOUNDED` when every grid value is accepted.
    """
    return lso_profile(trace, config, confidence, noise_sigma).lower_bound


def simulate_trace(
    params: WlParams,
    background_G: float,
    field_grid,
    noise_sigma: float = 0.0,
    seed: int = 0,
    **metadata,
) -> MagnetoTrace:
    """Synthetic per-wire trace: model plus seeded Gaussian noise."""
    B = np.asarray(field_grid, dtype=float)
    if B.size == 0:
        raise ValueError("field grid is empty")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    G = background_G + np.asarray(model_delta_g(B, params), dtype=float)
    if noise_sigma > 0:
        G = G + np.random.default_rng(seed).normal(0.0, noise_sigma, size=B.shape)
    return MagnetoTrace(B, G, n_parallel=1, **metadata)
