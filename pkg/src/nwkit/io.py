"""File formats. Every file boundary uses SI units.

Magnetoconductance traces and TLM data are CSV with ``# key=value``
metadata lines; rasters are a one-line text header followed by
little-endian float32 pixels; plottable curves are whitespace-separated
numeric tables.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .fitting import MagnetoTrace
from .gpa import LatticeImage
from .tlm import TlmDataset

RASTER_MAGIC = "GPA1"
TRACE_HEADER = ("B_T", "G_S")
TLM_HEADER = ("L_m", "R_ohm")


def fmt(x) -> str:
    """Shortest round-trip decimal form of a float."""
    return repr(float(x))


def parse_kv_text(text: str, source=None) -> dict:
    """``key=value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", lineno, source)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno, source)
        out[key] = value
    return out


def parse_kv_file(path) -> dict:
    path = Path(path)
    return parse_kv_text(path.read_text(), source=path)


def write_kv_file(path, values: dict, comments=()):
    lines = [f"# {c}" for c in comments]
    for k, v in values.items():
        lines.append(f"{k}={fmt(v) if isinstance(v, (float, np.floating)) else v}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_csv(path, header, meta_types):
    """Shared reader for metadata-plus-two-column CSV files."""
    path = Path(path)
    meta = {}
    rows = []
    seen_header = False
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and not seen_header:
                key, value = (p.strip() for p in body.split("=", 1))
                if key in meta_types:
                    try:
                        meta[key] = meta_types[key](value)
                    except ValueError:
                        raise ParseError(f"bad value for {key}: {value!r}", lineno, path) from None
            continue
        cells = [c.strip() for c in line.split(",")]
        if not seen_header:
            if tuple(cells) != header:
                raise ParseError(
                    f"missing column header {','.join(header)!r}, got {line!r}", lineno, path
                )
            seen_header = True
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} columns, found {len(cells)}", lineno, path)
        try:
            values = [float(c) for c in cells]
        except ValueError:
            bad = next(c for c in cells if not _is_float(c))
            raise ParseError(f"non-numeric value {bad!r}", lineno, path) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite value", lineno, path)
        rows.append(values)
    if not seen_header:
        raise ParseError(f"missing column header {','.join(header)!r}", None, path)
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return meta, data


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _int_meta(value):
    f = float(value)
    if f != int(f):
        raise ValueError(value)
    return int(f)


_TRACE_META = {"bias_mV": float, "temperature_K": float, "n_parallel": _int_meta, "label": str}
_TLM_META = {"temperature_K": float, "n_parallel": _int_meta, "label": str}


def parse_trace_csv(path) -> MagnetoTrace:
    meta, data = _read_csv(path, TRACE_HEADER, _TRACE_META)
    try:
        return MagnetoTrace(data[:, 0], data[:, 1], **meta)
    except ValueError as exc:
        raise ParseError(str(exc), None, Path(path)) from None


def write_trace_csv(path, trace: MagnetoTrace):
    lines = [
        f"# bias_mV={fmt(trace.bias_mV)}",
        f"# temperature_K={fmt(trace.temperature_K)}",
        f"# n_parallel={trace.n_parallel}",
        f"# label={trace.label}",
        ",".join(TRACE_HEADER),
    ]
    lines += [f"{fmt(b)},{fmt(g)}" for b, g in zip(trace.field_T, trace.conductance_S)]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_tlm_csv(path) -> TlmDataset:
    meta, data = _read_csv(path, TLM_HEADER, _TLM_META)
    try:
        return TlmDataset(data[:, 0], data[:, 1], **meta)
    except ValueError as exc:
        raise ParseError(str(exc), None, Path(path)) from None


def write_tlm_csv(path, data: TlmDataset):
    lines = [
        f"# temperature_K={fmt(data.temperature_K)}",
        f"# n_parallel={data.n_parallel}",
        f"# label={data.label}",
        ",".join(TLM_HEADER),
    ]
    lines += [f"{fmt(L)},{fmt(R)}" for L, R in zip(data.length_m, data.resistance_ohm)]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_raster(path) -> LatticeImage:
    """Read ``GPA1 <rows> <cols> <pixel_size_nm>\\n`` + row-major float32 LE."""
    path = Path(path)
    blob = path.read_bytes()
    nl = blob.find(b"\n")
    if nl < 0:
        raise ParseError("missing raster header line", 1, path)
    try:
        parts = blob[:nl].decode("ascii").split()
    except UnicodeDecodeError:
        raise ParseError("raster header is not ASCII text", 1, path) from None
    if not parts or parts[0] != RASTER_MAGIC:
        raise ParseError(f"bad magic: expected {RASTER_MAGIC!r}", 1, path)
    if len(parts) != 4:
        raise ParseError("header must read 'GPA1 <rows> <cols> <pixel_size_nm>'", 1, path)
    try:
        rows, cols = int(parts[1]), int(parts[2])
        pixel_size = float(parts[3])
    except ValueError:
        raise ParseError("non-numeric raster header field", 1, path) from None
    if rows <= 0 or cols <= 0:
        raise ParseError("raster dimensions must be positive", 1, path)
    if not (pixel_size > 0 and math.isfinite(pixel_size)):
        raise ParseError(f"pixel_size_nm must be positive, got {parts[3]}", 1, path)
    payload = blob[nl + 1 :]
    expected = rows * cols
    if len(payload) % 4 or len(payload) // 4 != expected:
        raise ParseError(f"expected {expected} floats, found {len(payload) / 4:g}", None, path)
    pixels = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    if not np.all(np.isfinite(pixels)):
        raise ParseError("raster contains non-finite values", None, path)
    try:
        return LatticeImage(pixels.astype(np.float64), pixel_size)
    except ValueError as exc:
        raise ParseError(str(exc), None, path) from None


def write_raster(path, values, pixel_size_nm: float):
    """Write a 2-D array (stored as float32) in raster format."""
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError("raster must be 2-D")
    header = f"{RASTER_MAGIC} {arr.shape[0]} {arr.shape[1]} {fmt(pixel_size_nm)}\n"
    Path(path).write_bytes(header.encode("ascii") + arr.astype("<f4").tobytes(order="C"))


def write_table(path, columns: dict, comments=()):
    """Whitespace-separated numeric table with a ``# name name`` header."""
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    lines = [f"# {c}" for c in comments]
    lines.append("# " + " ".join(names))
    lines += [" ".join(fmt(v) for v in row) for row in zip(*arrays)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_table(path):
    """Return ``(names, data)`` for a table written by :func:`write_table`."""
    path = Path(path)
    names = None
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            names = line[1:].split()
            continue
        cells = line.split()
        if names is not None and len(cells) != len(names):
            raise ParseError(f"expected {len(names)} columns, found {len(cells)}", lineno, path)
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ParseError(f"non-numeric row {line!r}", lineno, path) from None
    if names is None:
        raise ParseError("missing column-name header", None, path)
    return names, np.array(rows, dtype=float).reshape(-1, len(names))
