"""Independent reference values for the test suite.

Nothing here imports cpbtem.  Each quantity is recomputed from first
principles with mpmath (40 digits) or explicit small-matrix arithmetic, and
the printed numbers are frozen into the tests.  Re-run with

    python oracles/derive.py
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 40

# CODATA values as shipped by scipy.constants (2022 adjustment); e and h exact.
E = mp.mpf("1.602176634e-19")
H = mp.mpf("6.62607015e-34")
HBAR = H / (2 * mp.pi)
M_E = mp.mpf("9.1093837139e-31")
K_B = mp.mpf("1.380649e-23")


def matvec(m, v):
    return [sum(m[i][j] * v[j] for j in range(2)) for i in range(2)]


def energy_basis_example():
    s = 1 / mp.sqrt(2)
    had = [[s, s], [s, -s]]
    return matvec(had, [s, mp.mpc(0, 1) * s])


def eigen_gap(e_c, e_j, rho):
    m = mp.matrix([[2 * e_c * rho, -e_j / 2], [-e_j / 2, -2 * e_c * rho]])
    ev = mp.eig(m)[0]
    return abs(mp.re(ev[0]) - mp.re(ev[1]))


def readout_p1(phi):
    s = 1 / mp.sqrt(2)
    state = [s, mp.expj(phi) * s]
    state = matvec([[1, 0], [0, mp.mpc(0, 1)]], state)
    state = matvec([[s, s], [s, -s]], state)
    return abs(state[1]) ** 2


def estimator_sigma(k, phase, n):
    p = (1 + mp.sin(phase)) / 2
    sigma_p = mp.sqrt(p * (1 - p) / n)
    return sigma_p * 2 / (k * mp.cos(phase))


def kernel_center_weight(sigma_px, truncate=4):
    radius = int(truncate * sigma_px + mp.mpf("0.5"))
    total = mp.fsum(mp.exp(-mp.mpf(m) ** 2 / (2 * sigma_px**2)) for m in range(-radius, radius + 1))
    return 1 / total


def wkb_wavelength(field, planck):
    return mp.cbrt(planck**2 / (M_E * E * field))


def max_field(swing, planck):
    return mp.sqrt(M_E * E * swing**3) / planck


def resolution_chain(alpha, gamma, k):
    """Solve alpha*l = 1/sqrt(N k), l = gamma*n, N = n*l^2 for l by root finding."""
    def f(l):
        n = l / gamma
        big_n = n * l * l
        return alpha * l - 1 / mp.sqrt(big_n * k)

    return mp.findroot(f, mp.mpf(1))


def heisenberg_chain(alpha, gamma):
    """k = N: alpha*l = 1/N with N = l^3/gamma."""
    l = mp.findroot(lambda l: alpha * l - gamma / l**3, mp.mpf(1))
    return l, l**3 / gamma


def main():
    out = {}
    out["energy_basis((1,i)/sqrt2)"] = energy_basis_example()
    out["eigen_gap(100ueV,10ueV,0.05) [ueV]"] = eigen_gap(100, 10, mp.mpf("0.05"))
    out["readout P1(-pi/6)"] = readout_p1(-mp.pi / 6)
    out["(1+sin 0.45)/2"] = (1 + mp.sin(mp.mpf("0.45"))) / 2
    out["estimator sigma k=6 phase=0.6 n=1e4"] = estimator_sigma(6, mp.mpf("0.6"), 10**4)
    out["kernel center weight sigma=1px"] = kernel_center_weight(mp.mpf(1))
    out["kernel center weight sigma=5px"] = kernel_center_weight(mp.mpf(5))
    wf, wc = kernel_center_weight(mp.mpf(1)), kernel_center_weight(mp.mpf(5))
    out["DoG impulse center (0.3,1.5)nm @0.3nm"] = wf**2 - wc**2
    out["D(E_M=3000, hbar) [m]"] = wkb_wavelength(3000, HBAR)
    out["D(E_M=3000, h) [m]"] = wkb_wavelength(3000, H)
    e_c = mp.mpf("100e-6") * E
    c_sigma = E**2 / (2 * e_c)
    swing = 2 * E / c_sigma
    out["C_sigma for E_C=100ueV [F]"] = c_sigma
    out["potential swing [V]"] = swing
    out["E_M max (h) [V/m]"] = max_field(swing, H)
    out["E_M max (hbar) [V/m]"] = max_field(swing, HBAR)
    out["E_M min (100keV, beta=5e-5, 0.1um) [V/m]"] = mp.mpf(1e5) * mp.mpf("5e-5") ** 2 / mp.mpf("1e-7")
    d100 = wkb_wavelength(mp.mpf(1e5), H)
    out["bump at E_M=1e5 (h) [V]"] = d100 * 1e5
    out["tau2 at E_M=4000 [s]"] = mp.sqrt(M_E * mp.mpf("1e-7") / (E * 4000))
    out["kT/E_J at 10mK, 10ueV"] = K_B * mp.mpf("0.01") / (mp.mpf("10e-6") * E)
    for k in (1, 2, 32, 170):
        out[f"resolution chain l(k={k}) [nm]"] = resolution_chain(mp.mpf("0.01"), mp.mpf("1e-3"), k)
    l, kreq = heisenberg_chain(mp.mpf("0.01"), mp.mpf("1e-3"))
    out["heisenberg l [nm]"] = l
    out["heisenberg k_required"] = kreq
    out["two-level count ratio theta {0,0.05}"] = (1 + 2 * mp.mpf("-0.025")) / (1 + 2 * mp.mpf("0.025"))
    for name, value in out.items():
        if isinstance(value, list):
            value = ", ".join(mp.nstr(v, 17) for v in value)
        else:
            value = mp.nstr(value, 17)
        print(f"{name:45s} {value}")


if __name__ == "__main__":
    main()
