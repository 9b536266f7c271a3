"""Order-of-magnitude device estimates for the CPB electron mirror.

All inputs are SI except energies, which are in eV.  The "much smaller than"
conditions are explicit ratio thresholds held in :class:`Thresholds`.

Length and time scales tied to a wavelength or an oscillation period use
Planck's constant h (full de Broglie wavelength, full Josephson period h/E_J);
pass ``reduced=True`` where offered for the hbar variants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from scipy import constants as sc

from cpbtem.fileio import format_value
from cpbtem.qubit import CpbHamiltonianParams, eigen_gap

E = sc.e
M_E = sc.m_e
H = sc.h
HBAR = sc.hbar
K_B_EV = sc.k / sc.e  # eV / K

E_C_NOMINAL = 100e-6  # eV
C_SIGMA_NOMINAL = E / (2.0 * E_C_NOMINAL)  # F, from E_C = e^2 / (2 C_sigma)
C_G_NOMINAL = 0.1e-15  # F


@dataclass(frozen=True)
class Thresholds:
    much_less: float = 0.1
    ej_over_ec: float = 0.2
    max_delta_tau: float = 1e-9  # s


@dataclass(frozen=True)
class DeviceParams:
    c_sigma: float = C_SIGMA_NOMINAL  # F
    c_g: float = C_G_NOMINAL  # F
    v_g: float = E / C_G_NOMINAL  # V, charge degeneracy point
    e_j: float = 10e-6  # eV
    temperature: float = 0.01  # K
    e_mirror: float = 4e3  # V/m
    l_cpb: float = 0.1e-6  # m
    delta_e: float = 0.5e-3  # eV, beam energy spread
    path_length: float = 1.0  # m
    electron_speed: float = 2e6  # m/s
    source_energy: float = 10.0  # eV, kinetic energy in the low-voltage section
    imaging_energy: float = 100e3  # eV
    beam_angle_beta: float = 5e-5  # rad
    magnification: float = 1.0 / 200.0
    defocus_d: float = 1e-6  # m
    s0_diameter: float = 3e-9  # m
    qubit_lifetime: float = 2e-6  # s
    pulse_rate: float = 80e6  # Hz
    k: int = 9
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        for f in fields(self):
            if f.name == "thresholds":
                continue
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be a positive finite number, got {v!r}")
        if not self.c_g < self.c_sigma:
            raise ValueError("c_g must be smaller than c_sigma")

    @property
    def e_c(self) -> float:
        """Charging energy e^2 / (2 C_sigma), eV."""
        return E / (2.0 * self.c_sigma)


def electrostatic_energy(n_c: int, p: DeviceParams, v_g: float | None = None) -> float:
    """(-2 n_C e + C_g V_g)^2 / (2 C_sigma), in eV; ``v_g`` overrides ``p.v_g``."""
    q = -2.0 * n_c * E + p.c_g * (p.v_g if v_g is None else v_g)
    return q * q / (2.0 * p.c_sigma) / E


def potential_swing(p: DeviceParams) -> float:
    """Island potential difference between the two charge states, 2e / C_sigma (V)."""
    return 2.0 * E / p.c_sigma


def wkb_wavelength(p: DeviceParams, reduced: bool = False) -> float:
    """Electron wavelength at the mirror turning point, (h^2 / (m e E_M))^(1/3)."""
    if not p.e_mirror > 0:
        raise ValueError("e_mirror must be positive")
    planck = HBAR if reduced else H
    return (planck * planck / (M_E * E * p.e_mirror)) ** (1.0 / 3.0)


def max_mirror_field(swing: float, reduced: bool = False) -> float:
    """Largest field for which swing > D * E_M: sqrt(m e swing^3) / h."""
    planck = HBAR if reduced else H
    return math.sqrt(M_E * E * swing**3) / planck


def perpendicular_energy(p: DeviceParams) -> float:
    """Transverse kinetic energy at the mirror, imaging_energy * beta^2 (eV)."""
    return p.imaging_energy * p.beam_angle_beta**2


def mirror_field_window(p: DeviceParams):
    """``(min, max)`` admissible mirror field in V/m; empty when min > max."""
    lo = perpendicular_energy(p) / p.l_cpb
    hi = max_mirror_field(potential_swing(p))
    return lo, hi


@dataclass(frozen=True)
class TimingBudget:
    tau: float
    delta_tau: float
    tau1: float
    tau2: float
    h_over_ej: float
    ok: dict


def timing_budget(p: DeviceParams) -> TimingBudget:
    th = p.thresholds
    tau = p.path_length / p.electron_speed
    delta_tau = tau * p.delta_e / p.source_energy
    tau1 = HBAR / (p.delta_e * E)
    tau2 = math.sqrt(M_E * p.l_cpb / (E * p.e_mirror))
    h_over_ej = H / (p.e_j * E)
    ok = {
        "arrival_jitter": delta_tau < th.max_delta_tau,
        "tau1_sudden": tau1 / h_over_ej < th.much_less,
        "tau2_sudden": tau2 / h_over_ej < th.much_less,
        "thermal": K_B_EV * p.temperature / p.e_j < th.much_less,
        "charge_regime": p.e_j / p.e_c < th.ej_over_ec,
        "energy_spread": p.e_j / p.delta_e < th.much_less,
    }
    return TimingBudget(tau, delta_tau, tau1, tau2, h_over_ej, ok)


def pulses_within_lifetime(p: DeviceParams) -> float:
    return p.qubit_lifetime * p.pulse_rate


def sudden_bias(p: DeviceParams, tau0: float) -> float:
    """Bias excursion rho with 2 E_C rho tau0 / h = 1 during a reflection of length tau0."""
    return H / (2.0 * p.e_c * E * tau0)


@dataclass
class FeasibilityReport:
    values: list  # (name, value, unit)
    flags: dict

    @property
    def ok(self) -> bool:
        return all(self.flags.values())

    def items(self):
        yield from self.values
        for name, flag in self.flags.items():
            yield f"ok.{name}", bool(flag), ""
        yield "ok", self.ok, ""

    def to_text(self) -> str:
        return "".join(
            f"{n} = {format_value(v)}{(' ' + u) if u else ''}\n" for n, v, u in self.items()
        )

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())


def feasibility_report(p: DeviceParams) -> FeasibilityReport:
    swing = potential_swing(p)
    lo, hi = mirror_field_window(p)
    wl = wkb_wavelength(p)
    tb = timing_budget(p)
    gap = eigen_gap(CpbHamiltonianParams(p.e_c, p.e_j, 0.0))
    values = [
        ("e_c", p.e_c, "eV"),
        ("charging_energy_4ec", electrostatic_energy(1, p, v_g=0.0), "eV"),
        ("degeneracy_energy_0", electrostatic_energy(0, p), "eV"),
        ("degeneracy_energy_1", electrostatic_energy(1, p), "eV"),
        ("eigen_gap", gap, "eV"),
        ("island_potential", swing / 2.0, "V"),
        ("potential_swing", swing, "V"),
        ("perpendicular_energy", perpendicular_energy(p), "eV"),
        ("e_mirror", p.e_mirror, "V/m"),
        ("e_mirror_min", lo, "V/m"),
        ("e_mirror_max", hi, "V/m"),
        ("e_mirror_max_hbar", max_mirror_field(swing, reduced=True), "V/m"),
        ("wkb_wavelength", wl, "m"),
        ("bump_height", wl * p.e_mirror, "V"),
        ("tau", tb.tau, "s"),
        ("delta_tau", tb.delta_tau, "s"),
        ("tau1", tb.tau1, "s"),
        ("tau2", tb.tau2, "s"),
        ("h_over_ej", tb.h_over_ej, "s"),
        ("thermal_energy", K_B_EV * p.temperature, "eV"),
        ("rho_sudden", sudden_bias(p, tb.tau2), ""),
        ("pulses_within_lifetime", pulses_within_lifetime(p), ""),
        ("k", p.k, ""),
        ("s0_half_angle", p.s0_diameter / 2.0 / p.defocus_d, "rad"),
    ]
    flags = {
        "field_window_nonempty": lo < hi,
        "field_above_min": p.e_mirror >= lo,
        "bump_exceeds_wavelength": swing > wl * p.e_mirror,
        **tb.ok,
        "qubit_lifetime": p.k / p.pulse_rate < p.qubit_lifetime,
    }
    return FeasibilityReport(values, flags)

