"""Area detector on the diffraction plane and the specimen's inelastic "measurement".

The two beam states expand over detector pixels as |0> = sum_j a_j |j>_d and
|1> = sum_j b_j |j>_d.  Detecting the electron at pixel j leaves the box in
(a_j c0 |0>_b + b_j c1 |1>_b) / norm.  When |b_j| = |a_j| for every pixel the
detection carries no which-path information and only the known phase
beta_j = arg(b_j / a_j) is imprinted on the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from cpbtem.qubit import CpbState

TWO_PI = 2.0 * math.pi

# default inelastic scattering angle (rad)
DELTA_THETA_INEL = 1e-3


@dataclass(frozen=True)
class DetectorModel:
    """Per-pixel amplitudes of both beam states.

    Magnitudes and phases are stored separately so that the similar
    intensity condition ``|b_j| == |a_j|`` holds exactly when
    ``similarity_violation`` is zero.
    """

    mag_a: np.ndarray
    mag_b: np.ndarray
    phase_a: np.ndarray
    beta: np.ndarray
    similarity_violation: float = 0.0

    def __post_init__(self):
        n = len(self.mag_a)
        if n < 2:
            raise ValueError("detector needs at least two pixels")
        for arr in (self.mag_b, self.phase_a, self.beta):
            if len(arr) != n:
                raise ValueError("per-pixel arrays must share one length")
        for name in ("mag_a", "mag_b"):
            total = float(np.sum(getattr(self, name) ** 2))
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"{name} is not normalized (sum of squares {total!r})")

    @property
    def n_pixels(self) -> int:
        return len(self.mag_a)

    @cached_property
    def amp_a(self) -> np.ndarray:
        return self.mag_a * np.exp(1j * self.phase_a)

    @cached_property
    def amp_b(self) -> np.ndarray:
        return self.mag_b * np.exp(1j * (self.phase_a + self.beta))

    @cached_property
    def cdf_a(self) -> np.ndarray:
        return _cdf(self.mag_a)

    @cached_property
    def cdf_b(self) -> np.ndarray:
        return _cdf(self.mag_b)


def _cdf(mag: np.ndarray) -> np.ndarray:
    c = np.cumsum(mag**2)
    c /= c[-1]
    c[-1] = 1.0
    return np.ascontiguousarray(c)


def build_detector(n_pixels: int, eta: float, rng: np.random.Generator, ripple: float = 0.0) -> DetectorModel:
    """Random detector with a near-uniform intensity profile.

    ``eta`` scales the per-pixel relative deviation of |b_j| from |a_j|;
    ``eta = 0`` gives the exact similar intensity map condition.  Pixel
    intensities are ``1 + ripple * u`` with u uniform, so the default
    profile is flat.
    """
    if n_pixels < 2:
        raise ValueError("n_pixels must be at least 2")
    if eta < 0 or ripple < 0:
        raise ValueError("eta and ripple must be non-negative")
    intensity = 1.0 + ripple * rng.random(n_pixels)
    mag_a = np.sqrt(intensity / intensity.sum())
    phase_a = rng.uniform(0.0, TWO_PI, n_pixels)
    beta = rng.uniform(0.0, TWO_PI, n_pixels)
    z = rng.standard_normal(n_pixels)
    if eta == 0:
        mag_b = mag_a.copy()
    else:
        mag_b = mag_a * np.abs(1.0 + eta * z)
        mag_b /= math.sqrt(float(np.sum(mag_b**2)))
    return DetectorModel(mag_a, mag_b, phase_a, beta, float(eta))


def uniform_detector(betas) -> DetectorModel:
    """Flat-profile detector with prescribed relative phases (handy for tests)."""
    beta = np.asarray(betas, dtype=float)
    n = len(beta)
    mag = np.full(n, 1.0 / math.sqrt(n))
    return DetectorModel(mag, mag.copy(), np.zeros(n), beta, 0.0)


def pixel_probabilities(state: CpbState, det: DetectorModel) -> np.ndarray:
    return np.abs(det.amp_a * state.amp0) ** 2 + np.abs(det.amp_b * state.amp1) ** 2


def sample_pixel(p0: float, det: DetectorModel, u_branch: float, u_pixel: float) -> int:
    """Sample j from |a_j|^2 p0 + |b_j|^2 (1 - p0) as a two-component mixture."""
    cdf = det.cdf_a if u_branch < p0 else det.cdf_b
    return min(int(np.searchsorted(cdf, u_pixel, side="right")), det.n_pixels - 1)


def project_elastic(state: CpbState, det: DetectorModel, rng: np.random.Generator):
    """Detect an elastically scattered electron; returns ``(pixel, uncorrected state)``."""
    p0 = abs(state.amp0) ** 2
    j = sample_pixel(p0, det, rng.random(), rng.random())
    post = CpbState(det.amp_a[j] * state.amp0, det.amp_b[j] * state.amp1)
    return j, post.normalized()


@dataclass(frozen=True)
class InelasticEvent:
    xi_true: float
    xi_reported: float
    scatter_angle: float


def project_inelastic(
    state: CpbState,
    xi_precision: float,
    rng: np.random.Generator,
    delta_theta_inel: float = DELTA_THETA_INEL,
):
    """Delocalized inelastic event: the electron is projected onto (|0> + e^{i xi}|1>)/sqrt2.

    The box is left in (c0 |0>_b + c1 e^{-i xi} |1>_b), normalized.  The
    experimenter learns xi only to within ``xi_precision``.
    """
    xi = TWO_PI * rng.random()
    noise = rng.standard_normal()
    angle = rng.standard_normal() * delta_theta_inel
    event = InelasticEvent(xi, xi + xi_precision * noise, angle)
    post = CpbState(state.amp0, state.amp1 * complex(math.cos(xi), -math.sin(xi)))
    return event, post.normalized()


def localized_projection(state: CpbState, rng: np.random.Generator):
    """Worst case: the electron localizes in S0 or S1, collapsing the box."""
    p0 = abs(state.amp0) ** 2 / state.norm2
    if rng.random() < p0:
        return 0, CpbState(1.0 + 0j, 0j)
    return 1, CpbState(0j, 1.0 + 0j)


def imbalance(state: CpbState, epsilon: float, z: float) -> CpbState:
    """Partial localization: scale amplitudes by (1 + eps z, 1 - eps z) and renormalize."""
    if epsilon == 0:
        return state
    return CpbState(state.amp0 * (1.0 + epsilon * z), state.amp1 * (1.0 - epsilon * z)).normalized()
