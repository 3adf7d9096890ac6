"""Geometric phase analysis of atomic-resolution lattice images.

Coordinates follow the raster: ``x`` runs along columns and ``y`` along
rows, both in nanometers (``pixel_size_nm`` per pixel). Reciprocal vectors
``g = (gx, gy)`` are in cycles per nanometer in the same frame. Rectangles
are half-open ``(row0, row1, col0, col1)`` pixel ranges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import ndimage

MIN_IMAGE_SIDE = 32
MIN_PERIOD_PX = 4.0
MIN_REFERENCE_AREA = 16
DEFAULT_MASK_FRACTION = 1.0 / 6.0
# Border (in mask correlation lengths) whose strain is flagged as untrusted.
BORDER_CORRELATION_LENGTHS = 3.0


@dataclass
class LatticeImage:
    pixels: np.ndarray
    pixel_size_nm: float

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2:
            raise ValueError("lattice image must be 2-D")
        if min(self.pixels.shape) < MIN_IMAGE_SIDE:
            raise ValueError(
                f"image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {self.pixels.shape}"
            )
        if not (self.pixel_size_nm > 0 and math.isfinite(self.pixel_size_nm)):
            raise ValueError(f"pixel_size_nm must be positive, got {self.pixel_size_nm!r}")
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("image intensities must be finite")

    @property
    def rows(self) -> int:
        return self.pixels.shape[0]

    @property
    def cols(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class ReciprocalPeak:
    """Bragg reflection ``g`` (cycles/nm) with a Gaussian mask of width ``mask_sigma``.

    ``mask_sigma`` defaults to ``|g|/6`` and must stay below ``|g|/2`` so
    the mask does not pick up the central beam.
    """

    g: tuple
    mask_sigma: Optional[float] = None

    def __post_init__(self):
        g = tuple(float(v) for v in self.g)
        if len(g) != 2:
            raise ValueError("g must be a 2-vector (gx, gy)")
        object.__setattr__(self, "g", g)
        mag = math.hypot(*g)
        if not mag > 0:
            raise ValueError("g must be nonzero")
        if self.mask_sigma is None:
            object.__setattr__(self, "mask_sigma", mag * DEFAULT_MASK_FRACTION)
        if not 0 < self.mask_sigma < mag / 2:
            raise ValueError(
                f"mask_sigma must lie in (0, |g|/2) = (0, {mag / 2:.4g}); got {self.mask_sigma!r}"
            )

    @property
    def magnitude(self) -> float:
        return math.hypot(*self.g)

    @property
    def unit(self) -> tuple:
        m = self.magnitude
        return (self.g[0] / m, self.g[1] / m)

    def correlation_length_nm(self) -> float:
        """Real-space std of the mask's impulse response."""
        return 1.0 / (2.0 * math.pi * self.mask_sigma)


@dataclass
class PhaseMap:
    values: np.ndarray
    pixel_size_nm: float
    peak: ReciprocalPeak
    wrapped: bool = True


@dataclass
class StrainMap:
    """Strain along ``g`` relative to ``reference_region``; compressive < 0.

    ``valid`` is False within a border of three mask correlation lengths.
    """

    values: np.ndarray
    pixel_size_nm: float
    reference_region: tuple
    valid: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.valid is None:
            self.valid = np.ones(self.values.shape, dtype=bool)


class Profile(NamedTuple):
    distance_nm: np.ndarray
    strain: np.ndarray


def _wrap(phase):
    w = np.angle(np.exp(1j * phase))
    return np.where(w <= -np.pi, w + 2 * np.pi, w)


def _coords_nm(shape, pixel_size_nm):
    y, x = np.indices(shape, dtype=float)
    return x * pixel_size_nm, y * pixel_size_nm


def compute_phase_map(image: LatticeImage, peak: ReciprocalPeak) -> PhaseMap:
    """Wrapped geometric phase of ``image`` for the reflection ``peak``.

    The Fourier transform is filtered by a Gaussian centred on ``g``,
    transformed back, and the carrier ``2 pi g.r`` removed from its phase.
    """
    nyquist = 1.0 / (2.0 * image.pixel_size_nm)
    if not peak.magnitude < nyquist:
        raise ValueError(f"|g| = {peak.magnitude:.4g} /nm is outside the Nyquist band ({nyquist:.4g} /nm)")
    fy = np.fft.fftfreq(image.rows, d=image.pixel_size_nm)[:, None]
    fx = np.fft.fftfreq(image.cols, d=image.pixel_size_nm)[None, :]
    gx, gy = peak.g
    mask = np.exp(-((fx - gx) ** 2 + (fy - gy) ** 2) / (2.0 * peak.mask_sigma**2))
    filtered = np.fft.ifft2(np.fft.fft2(image.pixels) * mask)
    x, y = _coords_nm(image.pixels.shape, image.pixel_size_nm)
    phase = _wrap(np.angle(filtered) - 2.0 * np.pi * (gx * x + gy * y))
    return PhaseMap(phase, image.pixel_size_nm, peak, wrapped=True)


def unwrap_phase(phase: PhaseMap) -> PhaseMap:
    """Row-wise unwrapping, then rows aligned through the unwrapped first column.

    Deterministic and fast; a noisy pixel in the first column shifts the whole
    row by 2 pi, so heavily noisy maps should be smoothed first.
    """
    rows = np.unwrap(phase.values, axis=1)
    seam = np.unwrap(rows[:, 0])
    rows = rows + (seam - rows[:, 0])[:, None]
    return PhaseMap(rows, phase.pixel_size_nm, phase.peak, wrapped=False)


def _check_region(region, shape):
    r0, r1, c0, c1 = (int(v) for v in region)
    if not (0 <= r0 < r1 <= shape[0] and 0 <= c0 < c1 <= shape[1]):
        raise ValueError(f"reference region {region} is outside the {shape} image")
    if (r1 - r0) * (c1 - c0) < MIN_REFERENCE_AREA:
        raise ValueError(f"reference region must cover at least {MIN_REFERENCE_AREA} pixels")
    return r0, r1, c0, c1


def border_mask(shape, peak: ReciprocalPeak, pixel_size_nm: float) -> np.ndarray:
    width = int(math.ceil(BORDER_CORRELATION_LENGTHS * peak.correlation_length_nm() / pixel_size_nm))
    valid = np.zeros(shape, dtype=bool)
    if 2 * width < shape[0] and 2 * width < shape[1]:
        valid[width : shape[0] - width, width : shape[1] - width] = True
    return valid


def strain_from_phase(phase: PhaseMap, peak: ReciprocalPeak, reference_region) -> StrainMap:
    """Strain along ``g``: ``-(1 / 2 pi |g|) dP/dr_g``, zeroed over the reference."""
    if phase.wrapped:
        raise ValueError("strain_from_phase needs an unwrapped phase map")
    r0, r1, c0, c1 = _check_region(reference_region, phase.values.shape)
    dpdy, dpdx = np.gradient(phase.values, phase.pixel_size_nm)
    ux, uy = peak.unit
    strain = -(ux * dpdx + uy * dpdy) / (2.0 * np.pi * peak.magnitude)
    strain -= strain[r0:r1, c0:c1].mean()
    return StrainMap(
        strain,
        phase.pixel_size_nm,
        (r0, r1, c0, c1),
        valid=border_mask(strain.shape, peak, phase.pixel_size_nm),
    )


def strain_map(image: LatticeImage, peak: ReciprocalPeak, reference_region) -> StrainMap:
    """Full pipeline: phase, unwrap, differentiate, reference."""
    return strain_from_phase(unwrap_phase(compute_phase_map(image, peak)), peak, reference_region)


def line_scan(smap: StrainMap, p0, p1, avg_width_px: int = 1) -> Profile:
    """Bilinear profile from ``p0`` to ``p1`` (``(row, col)`` pixel coordinates).

    Samples are spaced by about one pixel, with both endpoints included,
    and each is averaged over ``avg_width_px`` samples across the line.
    """
    rows, cols = smap.values.shape
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    for p in (p0, p1):
        if not (0 <= p[0] <= rows - 1 and 0 <= p[1] <= cols - 1):
            raise ValueError(f"scan endpoint {tuple(p)} is outside the map")
    if avg_width_px < 1:
        raise ValueError("avg_width_px must be >= 1")
    d = p1 - p0
    length = float(np.hypot(*d))
    if length == 0:
        raise ValueError("line scan endpoints coincide")
    n = int(round(length)) + 1
    t = np.linspace(0.0, 1.0, n)
    normal = np.array([-d[1], d[0]]) / length
    offsets = np.linspace(-(avg_width_px - 1) / 2, (avg_width_px - 1) / 2, int(avg_width_px))
    pts = p0[None, None, :] + t[:, None, None] * d + offsets[None, :, None] * normal
    coords = pts.reshape(-1, 2).T
    samples = ndimage.map_coordinates(smap.values, coords, order=1, mode="nearest")
    values = samples.reshape(n, len(offsets)).mean(axis=1)
    return Profile(t * length * smap.pixel_size_nm, values)


@dataclass
class LatticeRegion:
    """One region of a synthetic lattice.

    The first region is the host and fills the image (its ``bounds`` must
    be None). Later regions occupy ``bounds`` and must share the host's
    orientations; their local period is ``period_nm * (1 + strain)``.
    Each orientation adds one cosine fringe set.
    """

    period_nm: float
    orientations_deg: Sequence[float] = (0.0,)
    amplitude: float = 1.0
    strain: float = 0.0
    bounds: Optional[tuple] = None

    @property
    def local_period_nm(self) -> float:
        return self.period_nm * (1.0 + self.strain)


def _ray_length_inside(px, py, nx, ny, s, box):
    """Signed length of the segment ``r_perp + tau n``, tau in [0, s], inside ``box``.

    ``r_perp = (px, py) - s n``; ``box = (x0, x1, y0, y1)`` in nm.
    """
    lo = np.minimum(0.0, s)
    hi = np.maximum(0.0, s)
    qx = px - s * nx
    qy = py - s * ny
    for q, n, a, b in ((qx, nx, box[0], box[1]), (qy, ny, box[2], box[3])):
        if abs(n) < 1e-15:
            outside = (q < a) | (q >= b)
            hi = np.where(outside, lo, hi)
        else:
            t1 = (a - q) / n
            t2 = (b - q) / n
            lo = np.maximum(lo, np.minimum(t1, t2))
            hi = np.minimum(hi, np.maximum(t1, t2))
    return np.sign(s) * np.clip(hi - lo, 0.0, None)


def synthesize_lattice(
    regions: Sequence[LatticeRegion],
    shape=(512, 512),
    pixel_size_nm: float = 0.02,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> LatticeImage:
    """Sum-of-cosines lattice whose fringes stay continuous across regions.

    Along each fringe normal the phase is the integral of the local inverse
    period, so a strained window shows exactly its scaled period without a
    phase jump at its edges.
    """
    if not regions:
        raise ValueError("need at least one region")
    host, windows = regions[0], list(regions[1:])
    if host.bounds is not None:
        raise ValueError("the first region is the host and must not have bounds")
    for reg in regions:
        if reg.local_period_nm / pixel_size_nm < MIN_PERIOD_PX:
            raise ValueError(
                f"period {reg.local_period_nm:.4g} nm is below {MIN_PERIOD_PX:g} pixels "
                f"at {pixel_size_nm:g} nm/pixel"
            )
    for w in windows:
        if w.bounds is None:
            raise ValueError("only the first region may omit bounds")
        if tuple(w.orientations_deg) != tuple(host.orientations_deg):
            raise ValueError("window regions must share the host's orientations")
    boxes = [tuple(int(v) for v in w.bounds) for w in windows]
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            a, b = boxes[i], boxes[j]
            if a[0] < b[1] and b[0] < a[1] and a[2] < b[3] and b[2] < a[3]:
                raise ValueError("window regions must not overlap")

    x, y = _coords_nm(shape, pixel_size_nm)
    amp = np.full(shape, float(host.amplitude))
    for w, (r0, r1, c0, c1) in zip(windows, boxes):
        amp[r0:r1, c0:c1] = w.amplitude

    img = np.zeros(shape)
    inv_host = 1.0 / host.local_period_nm
    for ang in host.orientations_deg:
        nx, ny = math.cos(math.radians(ang)), math.sin(math.radians(ang))
        s = x * nx + y * ny
        cycles = s * inv_host
        for w, (r0, r1, c0, c1) in zip(windows, boxes):
            # Pixel (r, c) covers [c, c+1) x [r, r+1) in pixel units.
            box = (c0 * pixel_size_nm, c1 * pixel_size_nm, r0 * pixel_size_nm, r1 * pixel_size_nm)
            inside = _ray_length_inside(x, y, nx, ny, s, box)
            cycles = cycles + inside * (1.0 / w.local_period_nm - inv_host)
        img += amp * np.cos(2.0 * np.pi * cycles)
    if noise_sigma > 0:
        img = img + np.random.default_rng(seed).normal(0.0, noise_sigma, size=shape)
    return LatticeImage(img, pixel_size_nm)


def fft_peaks(image: LatticeImage, k: int = 4, exclude_radius: float = 2.0) -> list:
    """The ``k`` strongest Fourier peaks as ``(gx, gy, magnitude)``.

    Only one of each ``+g/-g`` pair is listed (``gy > 0``, or ``gy == 0``
    and ``gx > 0``). Frequencies within ``exclude_radius`` bins of the
    origin are skipped.
    """
    mag = np.abs(np.fft.fft2(image.pixels - image.pixels.mean()))
    fy = np.fft.fftfreq(image.rows, d=image.pixel_size_nm)
    fx = np.fft.fftfreq(image.cols, d=image.pixel_size_nm)
    iy = np.fft.fftfreq(image.rows) * image.rows
    ix = np.fft.fftfreq(image.cols) * image.cols
    keep = (iy[:, None] > 0) | ((iy[:, None] == 0) & (ix[None, :] > 0))
    keep &= np.hypot(iy[:, None], ix[None, :]) > exclude_radius
    mag = np.where(keep, mag, -1.0)
    order = np.argsort(mag, axis=None)[::-1][:k]
    out = []
    for idx in order:
        r, c = np.unravel_index(idx, mag.shape)
        out.append((float(fx[c]), float(fy[r]), float(mag[r, c])))
    return out
