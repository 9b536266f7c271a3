"""Dose-limited resolution under the shot-noise and entangled scaling laws.

Specimen model: two points ``l`` apart differ in phase by ``alpha * l``
(alpha in rad/nm), and a dose ``n`` (electrons/nm^2) destroys features finer
than ``gamma * n`` (gamma in nm^3).  A pixel of side ``l`` then receives
``N = n * l**2`` electrons.  All relations are order-of-magnitude and drop
constants of order one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ROSE_FACTOR = 5.0


@dataclass(frozen=True)
class SpecimenModelConstants:
    alpha: float = 0.01  # rad/nm
    gamma: float = 1e-3  # nm^3

    def __post_init__(self):
        if not (self.alpha > 0 and self.gamma > 0):
            raise ValueError("alpha and gamma must be positive")


def sql_precision(n: float) -> float:
    """Shot-noise limited phase precision 1 / (2 sqrt(N))."""
    if not n > 0:
        raise ValueError("electron count must be positive")
    return 1.0 / (2.0 * math.sqrt(n))


def entangled_precision(n: float, k: int) -> float:
    """Precision 1 / sqrt(N k) when groups of k electrons act as one probe.

    Unlike :func:`sql_precision` this carries no factor 1/2, so at ``k = 1``
    it is twice the shot-noise value; at ``k = N`` it is the Heisenberg
    limit 1/N.
    """
    if not n > 0:
        raise ValueError("electron count must be positive")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise ValueError("k cannot exceed the electron count")
    return 1.0 / math.sqrt(n * k)


def sql_resolution(c: SpecimenModelConstants) -> float:
    """(gamma / alpha^2)^(1/5), nm."""
    return (c.gamma / c.alpha**2) ** 0.2


def entangled_resolution(c: SpecimenModelConstants, k: float) -> float:
    """(gamma / (k alpha^2))^(1/5), nm."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return sql_resolution(c) / k**0.2


def heisenberg_bound_resolution(c: SpecimenModelConstants):
    """Resolution for k = N, ``(gamma / alpha)^(1/4)``, and the k it needs.

    With k = N the precision is 1/N, so alpha * l = 1/N; the damage limit
    l = gamma * n with N = n l^2 gives N = l^3 / gamma.  Eliminating N yields
    l^4 = gamma / alpha and k = l^3 / gamma.
    """
    length = (c.gamma / c.alpha) ** 0.25
    return length, length**3 / c.gamma


def rose_detectable(contrast: float, n: float) -> bool:
    """Rose criterion: contrast * sqrt(N) > 5."""
    if not n > 0:
        raise ValueError("electron count must be positive")
    if contrast < 0:
        raise ValueError("contrast must be non-negative")
    return contrast * math.sqrt(n) > ROSE_FACTOR
