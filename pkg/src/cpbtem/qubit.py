"""Two-level state of the Cooper-pair box in the charge basis {|0>_b, |1>_b}.

States carry an arbitrary global phase; compare them with
:func:`canonical_equal`, never with ``==``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

SQRT_HALF = math.sqrt(0.5)

# |0>_b -> |s>_b, |1>_b -> |a>_b
ENERGY_BASIS = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) * SQRT_HALF


@dataclass(frozen=True)
class CpbState:
    amp0: complex
    amp1: complex

    @property
    def norm2(self) -> float:
        return abs(self.amp0) ** 2 + abs(self.amp1) ** 2

    @property
    def p1(self) -> float:
        """Probability of finding one excess Cooper pair."""
        return abs(self.amp1) ** 2 / self.norm2

    def as_array(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)

    @classmethod
    def from_array(cls, v) -> "CpbState":
        return cls(complex(v[0]), complex(v[1]))

    def normalized(self) -> "CpbState":
        n = math.sqrt(self.norm2)
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return CpbState(self.amp0 / n, self.amp1 / n)

    def is_normalized(self, tol: float = 1e-9) -> bool:
        return abs(self.norm2 - 1.0) <= tol

    def relative_phase(self) -> float:
        """arg(amp1 / amp0) in (-pi, pi]."""
        return cmath.phase(self.amp1 / self.amp0)


KET0 = CpbState(1.0 + 0j, 0j)
KET1 = CpbState(0j, 1.0 + 0j)


def canonical_form(state: CpbState) -> CpbState:
    """Rotate away the global phase: amp0 real and >= 0 (or amp1 if amp0 is 0)."""
    a0, a1 = complex(state.amp0), complex(state.amp1)
    if abs(a0) > 1e-15:
        rot = abs(a0) / a0
    elif abs(a1) > 1e-15:
        rot = abs(a1) / a1
    else:
        rot = 1.0
    return CpbState(a0 * rot, a1 * rot)


def canonical_equal(a: CpbState, b: CpbState, tol: float = 1e-12) -> bool:
    ca, cb = canonical_form(a), canonical_form(b)
    return abs(ca.amp0 - cb.amp0) <= tol and abs(ca.amp1 - cb.amp1) <= tol


def phase_shift(state: CpbState, kappa: float) -> CpbState:
    """|0>_b -> |0>_b, |1>_b -> exp(i kappa) |1>_b."""
    return CpbState(state.amp0, state.amp1 * cmath.exp(1j * kappa))


def to_energy_basis(state: CpbState) -> CpbState:
    return CpbState.from_array(ENERGY_BASIS @ state.as_array())


def measure_charge(state: CpbState, u: float) -> int:
    """Projective charge readout driven by an externally supplied uniform ``u``."""
    return 1 if u < abs(state.amp1) ** 2 else 0


@dataclass(frozen=True)
class CpbHamiltonianParams:
    """CPB parameters near charge degeneracy; energies in eV.

    ``rho`` is the dimensionless bias offset C_g V_g / e - 1.
    """

    e_c: float
    e_j: float
    rho: float = 0.0

    def __post_init__(self):
        if not self.e_c > 0:
            raise ValueError("e_c must be positive")
        if not self.e_j >= 0:
            raise ValueError("e_j must be non-negative")

    @property
    def charge_regime(self) -> bool:
        """True when the box works with well-defined charge (E_J < E_C)."""
        return self.e_j < self.e_c


def hamiltonian_matrix(p: CpbHamiltonianParams) -> np.ndarray:
    """H = 2 E_C rho (|0><0| - |1><1|) - (E_J / 2)(|0><1| + |1><0|), in eV."""
    bias = 2.0 * p.e_c * p.rho
    tunnel = -0.5 * p.e_j
    return np.array([[bias, tunnel], [tunnel, -bias]], dtype=float)


def eigen_gap(p: CpbHamiltonianParams) -> float:
    """Closed-form level splitting sqrt((4 E_C rho)^2 + E_J^2)."""
    return math.hypot(4.0 * p.e_c * p.rho, p.e_j)
