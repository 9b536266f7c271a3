"""Pure numpy measurement loop, vectorized across measurements.

Used when the compiled ``cpbtem._kernels`` module is unavailable.  Consumes
the same pre-drawn random arrays, so both backends agree to rounding.

Random layout per measurement ``i`` and round ``r``:

``U[i, r, 0]``  loss / inelastic / elastic selector
``U[i, r, 1]``  detector mixture branch, or localization branch
``U[i, r, 2]``  pixel inside the chosen intensity profile
``U[i, r, 3]``  inelastic phase xi / 2pi
``Z[i, r, 0]``  error of the reported xi, in units of ``xi_precision``
``Z[i, r, 1]``  partial-localization imbalance
``u_final[i]``  final charge readout
"""

from __future__ import annotations

import math

import numpy as np

SQRT_HALF = math.sqrt(0.5)
TWO_PI = 2.0 * math.pi


def run_block(
    dtheta,
    k,
    p_loss,
    p_inel,
    xi_precision,
    epsilon,
    localized,
    deferred,
    mag_a,
    mag_b,
    beta,
    cdf_a,
    cdf_b,
    U,
    Z,
    u_final,
    bits_out,
    state_out,
):
    n = len(dtheta)
    last = len(cdf_a) - 1
    c0 = np.full(n, SQRT_HALF, dtype=complex)
    c1 = np.full(n, SQRT_HALF, dtype=complex)
    corr = np.zeros(n)
    lost = np.zeros(n, dtype=bool)
    s = np.exp(1j * np.asarray(dtheta))
    with np.errstate(invalid="ignore", divide="ignore"):
        for r in range(k):
            u = U[:, r, 0]
            lost |= u < p_loss
            c1 = c1 * s
            p0 = c0.real**2 + c0.imag**2
            inel = (u >= p_loss) & (u < p_loss + p_inel)
            angle = np.zeros(n)

            # elastic detection at pixel j
            use_a = U[:, r, 1] < p0
            ja = np.searchsorted(cdf_a, U[:, r, 2], side="right")
            jb = np.searchsorted(cdf_b, U[:, r, 2], side="right")
            j = np.minimum(np.where(use_a, ja, jb), last)
            e0 = c0 * mag_a[j]
            e1 = c1 * (mag_b[j] * np.exp(1j * beta[j]))
            nrm = np.sqrt(np.abs(e0) ** 2 + np.abs(e1) ** 2)
            n0, n1 = e0 / nrm, e1 / nrm
            angle_el = -beta[j]

            if localized:
                keep0 = U[:, r, 1] < p0
                i0 = np.where(keep0, c0 / np.abs(c0), 0.0)
                i1 = np.where(keep0, 0.0, c1 / np.abs(c1))
                angle_in = np.zeros(n)
            else:
                xi = TWO_PI * U[:, r, 3]
                i0 = c0
                i1 = c1 * np.exp(-1j * xi)
                if epsilon != 0:
                    i0 = i0 * (1.0 + epsilon * Z[:, r, 1])
                    i1 = i1 * (1.0 - epsilon * Z[:, r, 1])
                nrm = np.sqrt(np.abs(i0) ** 2 + np.abs(i1) ** 2)
                i0, i1 = i0 / nrm, i1 / nrm
                angle_in = xi + xi_precision * Z[:, r, 0]

            c0 = np.where(inel, i0, n0)
            c1 = np.where(inel, i1, n1)
            angle = np.where(inel, angle_in, angle_el)
            if deferred:
                corr += angle
            else:
                c1 = c1 * np.exp(1j * angle)
    if deferred:
        c1 = c1 * np.exp(1j * corr)
    a1 = (c0 - 1j * c1) * SQRT_HALF
    p1 = a1.real**2 + a1.imag**2
    bits = (np.asarray(u_final) < p1).astype(np.int8)
    bits[lost] = -1
    c0[lost] = np.nan
    c1[lost] = np.nan
    bits_out[:] = bits
    state_out[:, 0] = c0
    state_out[:, 1] = c1
