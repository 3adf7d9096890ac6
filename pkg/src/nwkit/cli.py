"""Command-line entry point.

    nwkit <command> [INPUT ...] [--config FILE] [--out DIR] [--seed N] [--set key=value ...]

Parameters resolve as ``--set`` > ``--config`` file > command defaults.
Exit status: 0 success, 1 domain or fit error (and unknown command),
2 parse error. Errors go to stderr prefixed ``error[parse]``,
``error[domain]`` or ``error[fit]``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import fitting, gpa, io, morphology, tlm
from .errors import FitError, ParseError
from .transport import TransportGeometry, WlParams

COMMANDS = ("fit-wl", "simulate-wl", "gpa", "line-scan", "shape-minimize", "tlm")

USAGE = f"""usage: nwkit <command> [INPUT ...] [--config FILE] [--out DIR] [--seed N] [--set key=value ...]

commands:
  simulate-wl     write a synthetic magnetoconductance trace (trace.csv)
  fit-wl          fit l_phi (and optionally bound l_so) on a trace CSV
  gpa             strain map of a GPA1 raster for one reflection g
  line-scan       profile along a segment of a strain raster
  shape-minimize  aspect ratio minimizing the cross-section energy
  tlm             contact resistance and resistance per length from a TLM CSV
"""


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    output_dir: Path = Path(".")
    seed: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        self.output_dir = Path(self.output_dir)
        self.inputs = [Path(p) for p in self.inputs]


class _Params:
    """Typed access to string parameters with per-command defaults."""

    def __init__(self, defaults: dict, given: dict):
        unknown = set(given) - set(defaults)
        if unknown:
            raise ValueError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        self.raw = {**defaults, **given}

    def str(self, key) -> str:
        return self.raw[key]

    def float(self, key) -> Optional[float]:
        v = self.raw[key]
        if v in ("", "none", "None"):
            return None
        try:
            return float(v)
        except ValueError:
            raise ValueError(f"parameter {key} must be a number, got {v!r}") from None

    def int(self, key) -> int:
        v = self.float(key)
        if v is None or v != int(v):
            raise ValueError(f"parameter {key} must be an integer")
        return int(v)

    def bool(self, key) -> bool:
        v = self.raw[key].lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"parameter {key} must be a boolean, got {v!r}")

    def ints(self, key, n) -> Optional[tuple]:
        v = self.raw[key]
        if v in ("", "none", "None"):
            return None
        try:
            out = tuple(int(float(p)) for p in v.split(","))
        except ValueError:
            raise ValueError(f"parameter {key} must be {n} comma-separated integers") from None
        if len(out) != n:
            raise ValueError(f"parameter {key} must be {n} comma-separated integers")
        return out


def _one_input(cfg: RunConfig) -> Path:
    if len(cfg.inputs) != 1:
        raise ValueError(f"{cfg.command} takes exactly one input file")
    path = cfg.inputs[0]
    if not path.is_file():
        raise ParseError("input file not found", None, path)
    return path


def _write_report(out: Path, lines):
    (out / "report.txt").write_text("\n".join(lines) + "\n")


# --- simulate-wl ---------------------------------------------------------

SIMULATE_DEFAULTS = {
    "l_phi": "130e-9",
    "l_so": "none",
    "W": "20e-9",
    "L": "1.25e-6",
    "background_G": "0.0",
    "B_min": "-8.0",
    "B_max": "8.0",
    "n_points": "201",
    "noise_sigma": "0.0",
    "bias_mV": "0.0",
    "temperature_K": "1.5",
    "label": "synthetic",
}


def cmd_simulate(cfg: RunConfig, p: _Params):
    params = WlParams(
        l_phi=p.float("l_phi"),
        geometry=TransportGeometry(L=p.float("L"), W=p.float("W")),
        l_so=p.float("l_so"),
    )
    grid = np.linspace(p.float("B_min"), p.float("B_max"), p.int("n_points"))
    trace = fitting.simulate_trace(
        params,
        p.float("background_G"),
        grid,
        p.float("noise_sigma"),
        cfg.seed,
        bias_mV=p.float("bias_mV"),
        temperature_K=p.float("temperature_K"),
        label=p.str("label"),
    )
    io.write_trace_csv(cfg.output_dir / "trace.csv", trace)
    io.write_table(
        cfg.output_dir / "trace_vs_B.txt",
        {"B_T": trace.field_T, "G_S": trace.conductance_S},
    )
    _write_report(
        cfg.output_dir,
        [
            "simulate-wl",
            f"l_phi = {params.l_phi * 1e9:.4g} nm",
            f"l_so = {'none' if params.l_so is None else f'{params.l_so * 1e9:.4g} nm'}",
            f"W = {params.geometry.W * 1e9:.4g} nm, L = {params.geometry.L * 1e6:.4g} um",
            f"points = {len(trace)}, B in [{grid[0]:g}, {grid[-1]:g}] T",
            f"noise sigma = {p.float('noise_sigma') * 1e6:.4g} uS, seed = {cfg.seed}",
        ],
    )


# --- fit-wl --------------------------------------------------------------

FIT_DEFAULTS = {
    "model": "base",
    "W": "20e-9",
    "L": "1.25e-6",
    "free_W": "false",
    "l_phi_init": "none",
    "l_so_init": "none",
    "W_init": "none",
    "max_iterations": "200",
    "convergence_tol": "1e-10",
    "damping_init": "1e-3",
    "field_window": "none",
    "lso_bound": "false",
    "confidence": "0.95",
    "lso_grid_min": "10e-9",
    "lso_grid_max": "10e-6",
    "lso_per_decade": "60",
}


def _fit_config(p: _Params) -> fitting.FitConfig:
    fixed = {"L": p.float("L")}
    if not p.bool("free_W"):
        fixed["W"] = p.float("W")
    initial = {}
    for name in ("l_phi", "l_so", "W"):
        v = p.float(f"{name}_init")
        if v is not None:
            initial[name] = v
    if p.bool("free_W") and "W" not in initial:
        initial["W"] = p.float("W")
    return fitting.FitConfig(
        model=p.str("model"),
        fixed=fixed,
        initial=initial,
        max_iterations=p.int("max_iterations"),
        convergence_tol=p.float("convergence_tol"),
        damping_init=p.float("damping_init"),
        field_window=p.float("field_window"),
        lso_grid_min=p.float("lso_grid_min"),
        lso_grid_max=p.float("lso_grid_max"),
        lso_per_decade=p.int("lso_per_decade"),
    )


def cmd_fit(cfg: RunConfig, p: _Params):
    trace = io.parse_trace_csv(_one_input(cfg))
    fc = _fit_config(p)
    res = fitting.fit_wl(trace, fc)
    out = cfg.output_dir
    B = np.sort(trace.field_T)
    io.write_table(out / "model_vs_B.txt", {"B_T": B, "G_model_S": res.model(B)})
    io.write_table(
        out / "data_vs_B.txt",
        {"B_T": trace.field_T, "G_per_wire_S": trace.per_wire_conductance},
    )
    summary = {
        "model": fc.model,
        "converged": str(res.converged).lower(),
        "n_iterations": res.n_iterations,
        "chi2": float(res.chi2),
    }
    for name in ("l_phi", "l_so", "W", "L", "G_bg"):
        if name == "l_so" and fc.model != "spin_orbit":
            continue
        summary[name] = float(res.value(name))
        if name in res.std_errors:
            summary[f"{name}_stderr"] = res.std_errors[name]
    lines = [
        f"fit-wl  model={fc.model}  trace={trace.label!r}  n_parallel={trace.n_parallel}",
        f"converged: {res.converged} after {res.n_iterations} iterations ({res.message})",
        f"l_phi = {res.params.l_phi * 1e9:.4g} +/- {res.std_errors.get('l_phi', 0.0) * 1e9:.2g} nm",
    ]
    if res.params.l_so is not None:
        lines.append(
            f"l_so = {res.params.l_so * 1e9:.4g} +/- {res.std_errors.get('l_so', 0.0) * 1e9:.2g} nm"
        )
    lines += [
        f"W = {res.params.geometry.W * 1e9:.4g} nm ({'free' if 'W' in res.free else 'fixed'}), "
        f"L = {res.params.geometry.L * 1e6:.4g} um (fixed)",
        f"G_bg = {res.background_G * 1e6:.6g} uS per wire",
        f"chi2 = {res.chi2:.4g} S^2 over {res.n_points} points",
    ]
    if p.bool("lso_bound"):
        prof = fitting.lso_profile(trace, fc, p.float("confidence"))
        bound = prof.lower_bound
        summary["lso_lower_bound"] = bound
        io.write_table(out / "lso_profile.txt", {"l_so_m": prof.l_so, "chi2": prof.chi2})
        text = "unbounded" if bound == fitting.UNBOUNDED else f"{bound * 1e9:.4g} nm"
        lines.append(f"l_so lower bound ({p.float('confidence'):.0%}): {text}")
    io.write_kv_file(out / "fit.txt", summary, comments=["fit-wl result, SI units"])
    _write_report(out, lines)


# --- gpa / line-scan -----------------------------------------------------

GPA_DEFAULTS = {
    "gx": "none",
    "gy": "0.0",
    "mask_sigma": "none",
    "ref_region": "none",
    "scan": "none",
    "scan_width": "1",
}


def cmd_gpa(cfg: RunConfig, p: _Params):
    image = io.parse_raster(_one_input(cfg))
    if p.float("gx") is None:
        raise ValueError("gpa needs gx (and gy) in cycles/nm")
    region = p.ints("ref_region", 4)
    if region is None:
        raise ValueError("gpa needs ref_region=row0,row1,col0,col1")
    peak = gpa.ReciprocalPeak((p.float("gx"), p.float("gy")), p.float("mask_sigma"))
    phase = gpa.compute_phase_map(image, peak)
    smap = gpa.strain_from_phase(gpa.unwrap_phase(phase), peak, region)
    out = cfg.output_dir
    io.write_raster(out / "phase.gpa", phase.values, image.pixel_size_nm)
    io.write_raster(out / "strain.gpa", smap.values, image.pixel_size_nm)
    inner = smap.values[smap.valid]
    lines = [
        f"gpa  g = ({peak.g[0]:.4g}, {peak.g[1]:.4g}) /nm  mask sigma = {peak.mask_sigma:.4g} /nm",
        f"image {image.rows}x{image.cols}, {image.pixel_size_nm:g} nm/pixel",
        f"reference region rows {region[0]}:{region[1]}, cols {region[2]}:{region[3]}",
    ]
    if inner.size:
        lines.append(
            f"strain inside trusted area: min {inner.min():.4%}, max {inner.max():.4%}"
        )
    scan = p.ints("scan", 4)
    if scan is not None:
        prof = gpa.line_scan(smap, scan[:2], scan[2:], p.int("scan_width"))
        io.write_table(out / "profile.txt", {"distance_nm": prof.distance_nm, "strain": prof.strain})
        lines.append(f"line scan {scan[:2]} -> {scan[2:]}: {len(prof.strain)} samples")
    _write_report(out, lines)


SCAN_DEFAULTS = {"p0": "none", "p1": "none", "width": "1"}


def cmd_line_scan(cfg: RunConfig, p: _Params):
    image = io.parse_raster(_one_input(cfg))
    p0, p1 = p.ints("p0", 2), p.ints("p1", 2)
    if p0 is None or p1 is None:
        raise ValueError("line-scan needs p0=row,col and p1=row,col")
    smap = gpa.StrainMap(image.pixels, image.pixel_size_nm, reference_region=None)
    prof = gpa.line_scan(smap, p0, p1, p.int("width"))
    io.write_table(
        cfg.output_dir / "profile.txt", {"distance_nm": prof.distance_nm, "strain": prof.strain}
    )
    _write_report(
        cfg.output_dir,
        [
            f"line-scan {p0} -> {p1}, width {p.int('width')} px",
            f"{len(prof.strain)} samples over {prof.distance_nm[-1]:.4g} nm",
            f"strain range {prof.strain.min():.4%} .. {prof.strain.max():.4%}",
        ],
    )


# --- shape-minimize ------------------------------------------------------

def _shape_defaults() -> dict:
    m = morphology.default_model()
    d = {k: io.fmt(getattr(m, k)) for k in m.__dataclass_fields__}
    d.update({"r_lo": "0.01", "r_hi": "100", "n_table": "201"})
    return d


def cmd_shape(cfg: RunConfig, p: _Params):
    model = morphology.CrossSectionModel.from_mapping(
        {k: p.float(k) for k in morphology.CrossSectionModel.__dataclass_fields__}
    )
    bracket = (p.float("r_lo"), p.float("r_hi"))
    opt = morphology.minimize_aspect_ratio(model, bracket)
    r, e = morphology.energy_table(model, bracket, p.int("n_table"))
    out = cfg.output_dir
    io.write_table(out / "energy_vs_r.txt", {"r": r, "E_J_per_m": e})
    io.write_kv_file(
        out / "optimum.txt",
        {
            "aspect_ratio": opt.aspect_ratio,
            "energy_J_per_m": opt.energy,
            "width_m": opt.shape.width,
            "height_m": opt.shape.height,
            "edge_minimum": str(opt.edge_minimum).lower(),
        },
        comments=["shape-minimize optimum, SI units"],
    )
    lines = [
        "shape-minimize",
        f"optimal aspect ratio h/w = {opt.aspect_ratio:.6g}",
        f"width = {opt.shape.width * 1e9:.4g} nm, height = {opt.shape.height * 1e9:.4g} nm",
        f"energy = {opt.energy:.6g} J/m",
    ]
    if opt.edge_minimum:
        lines.append("warning: minimum sits at the bracket edge")
    _write_report(out, lines)


# --- tlm -----------------------------------------------------------------

TLM_DEFAULTS = {"control_R": "none", "threshold": "1e5"}


def cmd_tlm(cfg: RunConfig, p: _Params):
    data = io.parse_tlm_csv(_one_input(cfg))
    res = tlm.fit_tlm(data)
    out = cfg.output_dir
    io.write_table(out / "r_vs_l.txt", {"L_m": data.length_m, "R_per_wire_ohm": data.per_wire_resistance})
    Ls = np.sort(np.unique(data.length_m))
    io.write_table(
        out / "tlm_model.txt",
        {"L_m": Ls, "R_model_ohm": 2 * res.contact_resistance + res.resistance_per_length * Ls},
    )
    summary = {
        "contact_resistance_ohm": res.contact_resistance,
        "contact_resistance_stderr": res.std_errors["contact_resistance"],
        "resistance_per_length_ohm_per_m": res.resistance_per_length,
        "resistance_per_length_stderr": res.std_errors["resistance_per_length"],
        "r_squared": res.r_squared,
        "n_parallel": data.n_parallel,
    }
    lines = [
        f"tlm  {data.label!r}  {res.n_points} points  T = {data.temperature_K:g} K  "
        f"n_parallel = {data.n_parallel}",
        "per-wire fit R = 2 Rc + rho_lin L (intercept counts two contacts)",
        f"Rc = {res.contact_resistance:.6g} ohm per contact",
        f"rho_lin = {res.resistance_per_length * 1e-6:.6g} ohm/um",
        f"r^2 = {res.r_squared:.6f}",
    ]
    if res.nonphysical_contact:
        lines.append("warning: negative contact resistance (non-physical)")
    control = p.float("control_R")
    if control is not None:
        ratio, attributed = tlm.control_ratio(res, control, p.float("threshold"))
        summary["control_ratio"] = ratio
        summary["conduction_attributed"] = str(attributed).lower()
        lines.append(
            f"control/sample resistance = {ratio:.4g}; "
            + ("conduction attributed to the wires" if attributed else "below threshold")
        )
    io.write_kv_file(out / "tlm_fit.txt", summary, comments=["tlm result, SI units"])
    _write_report(out, lines)


HANDLERS = {
    "simulate-wl": (cmd_simulate, lambda: SIMULATE_DEFAULTS),
    "fit-wl": (cmd_fit, lambda: FIT_DEFAULTS),
    "gpa": (cmd_gpa, lambda: GPA_DEFAULTS),
    "line-scan": (cmd_line_scan, lambda: SCAN_DEFAULTS),
    "shape-minimize": (cmd_shape, _shape_defaults),
    "tlm": (cmd_tlm, lambda: TLM_DEFAULTS),
}


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    handler, defaults = HANDLERS[config.command]
    try:
        params = _Params(defaults(), config.params)
        config.output_dir.mkdir(parents=True, exist_ok=True)
        handler(config, params)
    except ParseError as exc:
        print(f"error[parse] {exc}", file=sys.stderr)
        return 2
    except FitError as exc:
        print(f"error[fit] {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error[domain] {exc}", file=sys.stderr)
        return 1
    return 0


def _parser(command: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog=f"nwkit {command}")
    ap.add_argument("inputs", nargs="*", help="input file(s)")
    ap.add_argument("--config", help="key=value parameter file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return ap


def build_config(argv) -> RunConfig:
    command, rest = argv[0], argv[1:]
    args = _parser(command).parse_args(rest)
    params = {}
    if args.config:
        params.update(io.parse_kv_file(args.config))
    for item in args.set:
        if "=" not in item:
            raise ParseError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    return RunConfig(command, args.inputs, params, Path(args.out), args.seed)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in COMMANDS:
        if argv and argv[0] in ("-h", "--help"):
            print(USAGE)
            return 0
        if argv:
            print(f"error[domain] unknown command {argv[0]!r}", file=sys.stderr)
        print(USAGE, file=sys.stderr)
        return 1
    try:
        config = build_config(argv)
    except ParseError as exc:
        print(f"error[parse] {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[parse] {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
