import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpbtem.feasibility import (
    C_SIGMA_NOMINAL,
    E,
    DeviceParams,
    Thresholds,
    electrostatic_energy,
    feasibility_report,
    max_mirror_field,
    mirror_field_window,
    perpendicular_energy,
    potential_swing,
    pulses_within_lifetime,
    sudden_bias,
    timing_budget,
    wkb_wavelength,
)
from cpbtem.fileio import read_kv

NOMINAL = DeviceParams()


def test_degeneracy_point_balances_charge_states():
    assert electrostatic_energy(0, NOMINAL) == pytest.approx(electrostatic_energy(1, NOMINAL), rel=1e-12)


def test_unbiased_charging_energy_is_four_ec():
    assert electrostatic_energy(1, NOMINAL, v_g=0.0) == pytest.approx(4 * NOMINAL.e_c, rel=1e-12)
    assert NOMINAL.e_c == pytest.approx(100e-6, rel=1e-12)
    assert electrostatic_energy(0, NOMINAL, v_g=0.0) == 0.0


def test_potential_swing():
    # frozen from oracles/derive.py: C_sigma = 8.01088317e-16 F, swing = 0.0004 V
    assert C_SIGMA_NOMINAL == pytest.approx(8.01088317e-16, rel=1e-12)
    assert potential_swing(NOMINAL) == pytest.approx(400e-6, rel=1e-12)
    doubled = replace(NOMINAL, c_sigma=2 * C_SIGMA_NOMINAL)
    assert potential_swing(doubled) == pytest.approx(200e-6, rel=1e-12)
    unit = replace(NOMINAL, c_sigma=1.602e-19, c_g=1e-20)
    assert potential_swing(unit) == pytest.approx(2 * E / 1.602e-19, rel=1e-12)
    assert potential_swing(unit) == pytest.approx(2.0, rel=1e-3)


def test_wkb_wavelength_cube_root_law():
    a = wkb_wavelength(replace(NOMINAL, e_mirror=1000.0))
    b = wkb_wavelength(replace(NOMINAL, e_mirror=8000.0))
    assert b / a == pytest.approx(0.5, rel=1e-12)


def test_wkb_wavelength_against_oracle():
    # frozen from oracles/derive.py (mpmath, CODATA 2022 m_e)
    p = replace(NOMINAL, e_mirror=3000.0)
    assert wkb_wavelength(p, reduced=True) == pytest.approx(2.9395254582860169e-8, rel=1e-9)
    assert wkb_wavelength(p) == pytest.approx(1.0009148624202891e-7, rel=1e-9)


def test_max_field_against_oracle():
    # frozen from oracles/derive.py: 4612.4710414139024 (h), 28981.010277203157 (hbar)
    assert max_mirror_field(400e-6) == pytest.approx(4612.4710414139024, rel=1e-9)
    assert max_mirror_field(400e-6, reduced=True) == pytest.approx(28981.010277203157, rel=1e-9)
    assert max_mirror_field(400e-6) == pytest.approx(5e3, rel=0.25)


def test_field_window():
    lo, hi = mirror_field_window(NOMINAL)
    # frozen from oracles/derive.py: min 2500 V/m
    assert lo == pytest.approx(2500.0, rel=1e-12)
    assert lo == pytest.approx(3e3, rel=0.25)
    assert hi == pytest.approx(5e3, rel=0.25)
    assert lo < NOMINAL.e_mirror < hi
    lo2, _ = mirror_field_window(replace(NOMINAL, beam_angle_beta=2 * NOMINAL.beam_angle_beta))
    assert lo2 == pytest.approx(4 * lo, rel=1e-12)
    _, hi2 = mirror_field_window(replace(NOMINAL, c_sigma=2 * C_SIGMA_NOMINAL))
    assert hi2 == pytest.approx(hi / 2**1.5, rel=1e-12)
    assert perpendicular_energy(NOMINAL) == pytest.approx(0.25e-3, rel=1e-12)


def test_timing_budget():
    tb = timing_budget(NOMINAL)
    assert tb.tau == pytest.approx(500e-9, rel=1e-12)
    # frozen from oracles/derive.py: 1.1922279680607641e-11 s at 4 kV/m
    assert tb.tau2 == pytest.approx(1.1922279680607641e-11, rel=1e-9)
    assert 1e-12 < tb.tau2 < 1e-10
    assert tb.delta_tau == pytest.approx(500e-9 * 0.5e-3 / 10, rel=1e-12)
    assert tb.h_over_ej == pytest.approx(4.135667696e-10, rel=1e-9)
    assert all(tb.ok.values())


def test_thermal_ratio():
    # frozen from oracles/derive.py: k_B T / E_J = 0.086173332621451774
    report = feasibility_report(NOMINAL)
    values = {n: v for n, v, _ in report.values}
    assert values["thermal_energy"] / NOMINAL.e_j == pytest.approx(0.086173332621451774, rel=1e-9)
    assert report.flags["thermal"]


def test_pulse_budget():
    assert pulses_within_lifetime(NOMINAL) == pytest.approx(160.0, rel=1e-12)


def test_sudden_bias_definition():
    tau0 = 1e-11
    rho = sudden_bias(NOMINAL, tau0)
    assert 2 * NOMINAL.e_c * E * rho * tau0 / 6.62607015e-34 == pytest.approx(1.0, rel=1e-12)


def test_nominal_design_is_consistent():
    report = feasibility_report(NOMINAL)
    assert report.ok, {k: v for k, v in report.flags.items() if not v}


def test_strong_mirror_field_fails():
    # oracle: bump D * E_M = 3.1100751962046568e-3 V at 100 kV/m exceeds the 0.4 mV swing
    report = feasibility_report(replace(NOMINAL, e_mirror=1e5))
    values = {n: v for n, v, _ in report.values}
    assert values["bump_height"] == pytest.approx(3.1100751962046568e-3, rel=1e-9)
    assert not report.flags["bump_exceeds_wavelength"]
    assert not report.ok


def test_hot_box_fails():
    report = feasibility_report(replace(NOMINAL, temperature=1.0))
    assert not report.flags["thermal"] and not report.ok


def test_long_chain_exceeds_lifetime():
    report = feasibility_report(replace(NOMINAL, k=200))
    assert not report.flags["qubit_lifetime"]


def test_thresholds_are_configurable():
    strict = replace(NOMINAL, thresholds=Thresholds(much_less=0.01))
    assert not feasibility_report(strict).ok


@pytest.mark.parametrize("field", ["c_sigma", "e_j", "temperature", "e_mirror", "l_cpb", "delta_e", "k"])
@pytest.mark.parametrize("value", [0, -1.0, float("nan")])
def test_nonphysical_parameters_rejected(field, value):
    with pytest.raises(ValueError):
        replace(NOMINAL, **{field: value})


def test_gate_capacitance_below_total():
    with pytest.raises(ValueError):
        replace(NOMINAL, c_g=2 * C_SIGMA_NOMINAL)


@given(st.floats(1.0, 1e7), st.floats(1.0, 1e7))
def test_monotone_in_mirror_field(e1, e2):
    if e1 == e2:
        return
    lo, hi = sorted((e1, e2))
    a, b = replace(NOMINAL, e_mirror=lo), replace(NOMINAL, e_mirror=hi)
    assert wkb_wavelength(a) > wkb_wavelength(b)
    assert timing_budget(a).tau2 > timing_budget(b).tau2


@given(st.floats(2e-16, 1e-12), st.floats(1.01, 100.0))
def test_swing_decreasing_in_capacitance(c, factor):
    a = replace(NOMINAL, c_sigma=c)
    b = replace(NOMINAL, c_sigma=c * factor)
    assert potential_swing(a) > potential_swing(b)


@given(st.floats(1e-3, 1e3))
def test_dimensional_rescaling(scale):
    # hand-folded: D^3 * E_M is invariant, and tau2^2 * E_M / l is invariant
    p = replace(NOMINAL, e_mirror=4e3 * scale, l_cpb=1e-7 * scale)
    d_ref = wkb_wavelength(NOMINAL)
    assert wkb_wavelength(p) ** 3 * p.e_mirror == pytest.approx(d_ref**3 * 4e3, rel=1e-9)
    assert timing_budget(p).tau2 == pytest.approx(timing_budget(NOMINAL).tau2, rel=1e-9)


def test_report_round_trip(tmp_path):
    report = feasibility_report(NOMINAL)
    path = tmp_path / "feasibility.txt"
    report.write(path)
    kv = read_kv(path)
    assert kv["ok"] == "true"
    assert list(kv) == [n for n, _, _ in report.items()]
    assert float(kv["tau"].split()[0]) == pytest.approx(5e-7)
    assert report.to_text() == feasibility_report(NOMINAL).to_text()
    assert math.isfinite(float(kv["e_mirror_max"].split()[0]))
