"""Raster-scanned imaging: specimen maps, beam weights, Monte-Carlo images.

Coordinates are in nm with the origin at the top-left corner of the map;
pixel (row r, column c) is centred at ((c + 0.5) * pixel_size,
(r + 0.5) * pixel_size).  All Gaussian weights are sampled at pixel centres,
truncated at ``TRUNCATE`` standard deviations, normalized to unit sum, and
reflected at the map border (``d c b a | a b c d | d c b a``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from cpbtem.protocol import ProtocolConfig, readout_probability, simulate_bits
from cpbtem.rng import STREAM_BASELINE, STREAM_PROTOCOL, STREAM_SPECIMEN, substream

TRUNCATE = 4.0

KINDS = ("cpb_frequency", "electron_count", "phase_target", "dog_filtered", "phase")


@dataclass(frozen=True)
class SpecimenPhaseMap:
    theta: np.ndarray  # (height, width), radians
    pixel_size: float  # nm

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        if t.ndim != 2 or t.size == 0:
            raise ValueError("phase map must be a non-empty 2-D grid")
        if not self.pixel_size > 0:
            raise ValueError("pixel_size must be positive")
        if not np.all(np.isfinite(t)):
            raise ValueError("phase map contains non-finite values")
        object.__setattr__(self, "theta", t)

    @property
    def height(self) -> int:
        return self.theta.shape[0]

    @property
    def width(self) -> int:
        return self.theta.shape[1]

    @property
    def values(self) -> np.ndarray:
        return self.theta

    @property
    def extent(self) -> tuple[float, float]:
        return self.width * self.pixel_size, self.height * self.pixel_size


@dataclass(frozen=True)
class ImageResult:
    values: np.ndarray  # (height, width)
    kind: str
    pixel_size: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown image kind {self.kind!r}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BeamProfile:
    """Gaussian illumination of the large region S0 and the probe region S1 (nm)."""

    sigma0: float = 1.5
    sigma1: float = 0.3
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.sigma0 > self.sigma1 > 0:
            raise ValueError("need sigma0 > sigma1 > 0")


@dataclass(frozen=True)
class ScanPlan:
    xs: np.ndarray  # scan column positions, nm
    ys: np.ndarray  # scan row positions, nm
    k: int
    measurements_per_position: int
    requested_electrons: int = 0
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1 or self.measurements_per_position < 1:
            raise ValueError("k and measurements_per_position must be positive")

    @property
    def electrons_per_position(self) -> int:
        return self.k * self.measurements_per_position

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.ys), len(self.xs)

    @property
    def n_positions(self) -> int:
        return len(self.xs) * len(self.ys)

    @property
    def positions(self) -> np.ndarray:
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel()])


def plan_from_dose(spec: SpecimenPhaseMap, dose: float, k: int, step: float | None = None) -> ScanPlan:
    """Dose-based accounting: round(dose * step^2) electrons per position."""
    if not dose > 0:
        raise ValueError("dose must be positive")
    step = spec.pixel_size if step is None else float(step)
    if not step > 0:
        raise ValueError("scan step must be positive")
    w, h = spec.extent
    nx = max(1, int(math.floor(w / step + 1e-9)))
    ny = max(1, int(math.floor(h / step + 1e-9)))
    electrons = int(round(dose * step * step))
    m = max(1, int(round(electrons / k)))
    xs = (np.arange(nx) + 0.5) * step
    ys = (np.arange(ny) + 0.5) * step
    return ScanPlan(xs, ys, int(k), m, electrons)


def _reflect(idx: np.ndarray, n: int) -> np.ndarray:
    m = np.mod(idx, 2 * n)
    return np.where(m >= n, 2 * n - 1 - m, m)


def smoothing_matrix(n: int, pixel_size: float, centers, sigma: float, truncate: float = TRUNCATE) -> np.ndarray:
    """Rows of unit-sum Gaussian weights over ``n`` pixels, one row per centre (nm)."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    pos = centers / pixel_size - 0.5
    out = np.zeros((len(centers), n))
    s = sigma / pixel_size
    if s < 1e-12:
        idx = _reflect(np.floor(pos + 0.5).astype(int), n)
        out[np.arange(len(centers)), idx] = 1.0
        return out
    r = int(truncate * s + 0.5)
    for row, c in enumerate(pos):
        lo = int(math.ceil(c - r - 1e-9))
        hi = int(math.floor(c + r + 1e-9))
        idx = np.arange(lo, hi + 1)
        w = np.exp(-0.5 * ((idx - c) / s) ** 2)
        w /= w.sum()
        np.add.at(out[row], _reflect(idx, n), w)
    return out


def _pixel_centers(n: int, pixel_size: float) -> np.ndarray:
    return (np.arange(n) + 0.5) * pixel_size


def _smooth(values: np.ndarray, pixel_size: float, sigma: float) -> np.ndarray:
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return values.copy()
    h, w = values.shape
    sy = smoothing_matrix(h, pixel_size, _pixel_centers(h, pixel_size), sigma)
    sx = sy if w == h else smoothing_matrix(w, pixel_size, _pixel_centers(w, pixel_size), sigma)
    return sy @ values @ sx.T


def gaussian_filter(obj, sigma: float):
    """Gaussian smoothing with std ``sigma`` in nm; returns the same type."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if isinstance(obj, SpecimenPhaseMap):
        return SpecimenPhaseMap(_smooth(obj.theta, obj.pixel_size, sigma), obj.pixel_size)
    return replace(obj, values=_smooth(np.asarray(obj.values, dtype=float), obj.pixel_size, sigma))


def _dog(values, pixel_size, sigma_fine, sigma_coarse):
    if not sigma_fine < sigma_coarse:
        raise ValueError("sigma_fine must be smaller than sigma_coarse")
    return _smooth(values, pixel_size, sigma_fine) - _smooth(values, pixel_size, sigma_coarse)


def dog_target(spec: SpecimenPhaseMap, sigma_fine: float = 0.3, sigma_coarse: float = 1.5) -> ImageResult:
    """Difference-of-Gaussians phase map: the infinite-dose image of the method."""
    return ImageResult(_dog(spec.theta, spec.pixel_size, sigma_fine, sigma_coarse), "phase_target", spec.pixel_size)


def extract_high_res(img: ImageResult, sigma_fine: float = 0.3, sigma_coarse: float = 1.5) -> ImageResult:
    """Same DoG as :func:`dog_target`, applied to any image."""
    return ImageResult(_dog(np.asarray(img.values, dtype=float), img.pixel_size, sigma_fine, sigma_coarse),
                       "dog_filtered", img.pixel_size)


def _inside(spec: SpecimenPhaseMap, x: float, y: float) -> bool:
    w, h = spec.extent
    return 0.0 <= x <= w and 0.0 <= y <= h


def effective_delta_theta(spec: SpecimenPhaseMap, beam: BeamProfile, center) -> float:
    """Phase under the S1 probe minus the average phase over S0, for one position."""
    cx, cy = float(center[0]), float(center[1])
    if not _inside(spec, cx, cy):
        raise ValueError(f"scan position {center!r} lies outside the map")
    ox, oy = beam.offset
    return float(_weighted(spec, [cx + ox], [cy + oy], beam.sigma1)[0, 0]
                 - _weighted(spec, [cx], [cy], beam.sigma0)[0, 0])


def _weighted(spec, xs, ys, sigma):
    sx = smoothing_matrix(spec.width, spec.pixel_size, xs, sigma)
    sy = smoothing_matrix(spec.height, spec.pixel_size, ys, sigma)
    return sy @ spec.theta @ sx.T


def delta_theta_field(spec: SpecimenPhaseMap, beam: BeamProfile, plan: ScanPlan) -> np.ndarray:
    """:func:`effective_delta_theta` at every scan position, shape ``plan.shape``."""
    for x in (plan.xs[0], plan.xs[-1]):
        for y in (plan.ys[0], plan.ys[-1]):
            if not _inside(spec, x, y):
                raise ValueError("scan plan extends outside the map")
    ox, oy = beam.offset
    return (_weighted(spec, plan.xs + ox, plan.ys + oy, beam.sigma1)
            - _weighted(spec, plan.xs, plan.ys, beam.sigma0))


def simulate_proposed(
    spec: SpecimenPhaseMap,
    beam: BeamProfile,
    plan: ScanPlan,
    cfg: ProtocolConfig,
    det,
    *,
    seed: int = 0,
    analytic: bool = False,
    threads: int = 1,
    backend: str | None = None,
):
    """Monte-Carlo image of the CPB method; returns ``(ImageResult, metadata)``.

    Each pixel is the fraction of readouts giving |1>_b at that scan position.
    ``analytic=True`` returns the expectation [1 + sin(k dtheta)] / 2 instead.
    """
    cfg = replace(cfg, k=plan.k)
    field_ = delta_theta_field(spec, beam, plan)
    step = float(plan.xs[1] - plan.xs[0]) if len(plan.xs) > 1 else spec.pixel_size
    m = plan.measurements_per_position
    meta = {
        "k": plan.k,
        "scan_positions": plan.n_positions,
        "measurements_per_position": m,
        "electrons_per_position": plan.electrons_per_position,
        "requested_electrons_per_position": plan.requested_electrons,
        "cpb_measurements_total": plan.n_positions * m,
        "electrons_total": plan.n_positions * plan.electrons_per_position,
        "scan_step_nm": step,
        "lost_measurements": 0,
        "analytic": analytic,
    }
    if analytic:
        values = readout_probability(plan.k * field_)
        return ImageResult(values, "cpb_frequency", step), meta
    dtheta = np.repeat(field_.ravel(), m)
    bits = simulate_bits(cfg, det, seed=seed, delta_theta=dtheta, stream=STREAM_PROTOCOL,
                         threads=threads, backend=backend).reshape(-1, m)
    valid = bits >= 0
    ones = np.sum(bits == 1, axis=1)
    counts = valid.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        freq = np.where(counts > 0, ones / np.maximum(counts, 1), np.nan)
    meta["lost_measurements"] = int(bits.size - valid.sum())
    return ImageResult(freq.reshape(plan.shape), "cpb_frequency", step), meta


def simulate_baseline(spec: SpecimenPhaseMap, dose: float, *, seed: int = 0, analytic: bool = False) -> ImageResult:
    """Ideal in-focus phase contrast: Poisson counts with mean dose * area * (1 + 2 dtheta).

    ``analytic=True`` returns the mean counts without sampling.
    """
    if not dose > 0:
        raise ValueError("dose must be positive")
    delta = spec.theta - spec.theta.mean()
    rel = 1.0 + 2.0 * delta
    if np.any(rel < 0):
        raise ValueError("weak-phase assumption violated: 1 + 2*dtheta < 0")
    lam = dose * spec.pixel_size**2 * rel
    if analytic:
        return ImageResult(lam, "electron_count", spec.pixel_size)
    counts = substream(seed, STREAM_BASELINE).poisson(lam)
    return ImageResult(counts.astype(float), "electron_count", spec.pixel_size)


def image_correlation(a, b, mask=None) -> float:
    """Pearson correlation of two equally shaped images (optionally masked)."""
    x = np.asarray(getattr(a, "values", a), dtype=float)
    y = np.asarray(getattr(b, "values", b), dtype=float)
    if mask is not None:
        x, y = x[mask], y[mask]
    x = x.ravel() - np.mean(x)
    y = y.ravel() - np.mean(y)
    return float(np.dot(x, y) / math.sqrt(np.dot(x, x) * np.dot(y, y)))


SPECIMEN_KINDS = ("disks", "bars", "blob-noise")


def synth_specimen(
    kind: str,
    *,
    seed: int = 0,
    width: int = 100,
    height: int = 100,
    pixel_size: float = 0.3,
    amplitude: float = 0.3,
    radius: float = 3.0,
    count: int = 1,
    period: float = 3.0,
    angle: float = 0.0,
    envelope_radius: float = 8.0,
    n_blobs: int = 300,
    blob_sigma: tuple[float, float] = (0.3, 1.2),
) -> SpecimenPhaseMap:
    """Synthetic weak-phase specimen, deterministic for a given seed.

    ``disks``: ``count`` disks of ``radius`` nm (one centred disk when
    ``count == 1``).  ``bars``: square-wave bars with ``period`` nm at
    ``angle`` rad.  ``blob-noise``: a molecule-like object, a soft body of
    ``envelope_radius`` nm carrying ``n_blobs`` Gaussian details.  Peak phase
    is ``amplitude`` rad in every case.
    """
    if width < 1 or height < 1 or not pixel_size > 0:
        raise ValueError("invalid map dimensions")
    if kind not in SPECIMEN_KINDS:
        raise ValueError(f"unknown specimen kind {kind!r}; expected one of {SPECIMEN_KINDS}")
    rng = substream(seed, STREAM_SPECIMEN)
    x = _pixel_centers(width, pixel_size)[None, :]
    y = _pixel_centers(height, pixel_size)[:, None]
    cx, cy = width * pixel_size / 2, height * pixel_size / 2
    theta = np.zeros((height, width))
    if kind == "disks":
        if count == 1:
            centers = [(cx, cy)]
        else:
            centers = rng.uniform([0, 0], [width * pixel_size, height * pixel_size], (count, 2))
        for px, py in centers:
            inside = (x - px) ** 2 + (y - py) ** 2 < radius * radius
            theta = np.where(inside, amplitude, theta)
    elif kind == "bars":
        u = x * math.cos(angle) + y * math.sin(angle)
        theta = np.where(np.mod(u, period) < period / 2, amplitude, 0.0) * np.ones_like(theta)
    else:
        rr = np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
        body = 0.5 * (1.0 - np.tanh((rr - envelope_radius) / 0.5))
        r = envelope_radius * np.sqrt(rng.random(n_blobs))
        phi = 2 * math.pi * rng.random(n_blobs)
        sig = rng.uniform(blob_sigma[0], blob_sigma[1], n_blobs)
        amp = rng.uniform(0.2, 1.0, n_blobs)
        detail = np.zeros_like(theta)
        for bx, by, s, a in zip(cx + r * np.cos(phi), cy + r * np.sin(phi), sig, amp):
            detail += a * np.exp(-((x - bx) ** 2 + (y - by) ** 2) / (2 * s * s))
        detail *= body
        detail /= detail.max()
        theta = 0.4 * body + 0.6 * detail
        theta *= amplitude / theta.max()
    return SpecimenPhaseMap(theta, pixel_size)
