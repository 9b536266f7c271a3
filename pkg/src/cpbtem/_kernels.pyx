# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled measurement loop; same contract as ``cpbtem._fallback.run_block``."""

from libc.math cimport cos, sin, sqrt, NAN

cdef double SQRT_HALF = 0.7071067811865476
cdef double TWO_PI = 6.283185307179586


cdef inline Py_ssize_t _search(const double[::1] cdf, double u) noexcept nogil:
    # first index with cdf[j] > u
    cdef Py_ssize_t lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    if lo >= cdf.shape[0]:
        lo = cdf.shape[0] - 1
    return lo


def run_block(
    const double[::1] dtheta,
    int k,
    double p_loss,
    double p_inel,
    double xi_precision,
    double epsilon,
    bint localized,
    bint deferred,
    const double[::1] mag_a,
    const double[::1] mag_b,
    const double[::1] beta,
    const double[::1] cdf_a,
    const double[::1] cdf_b,
    const double[:, :, ::1] U,
    const double[:, :, ::1] Z,
    const double[::1] u_final,
    signed char[::1] bits_out,
    double complex[:, ::1] state_out,
):
    cdef Py_ssize_t n = dtheta.shape[0]
    cdef Py_ssize_t i, j
    cdef int r
    cdef double r0, i0, r1, i1, t, cs, sn, nrm, p0, u, corr, angle, xi, w0, w1, ar, ai
    cdef double cs_xi, sn_xi, cs_a, sn_a
    cdef bint lost
    with nogil:
        for i in range(n):
            r0 = SQRT_HALF
            i0 = 0.0
            r1 = SQRT_HALF
            i1 = 0.0
            corr = 0.0
            lost = False
            cs = cos(dtheta[i])
            sn = sin(dtheta[i])
            for r in range(k):
                u = U[i, r, 0]
                if u < p_loss:
                    lost = True
                    break
                # specimen phase on the |1> branch
                t = r1 * cs - i1 * sn
                i1 = r1 * sn + i1 * cs
                r1 = t
                p0 = r0 * r0 + i0 * i0
                if u < p_loss + p_inel:
                    if localized:
                        if U[i, r, 1] < p0:
                            nrm = sqrt(p0)
                            r0 = r0 / nrm
                            i0 = i0 / nrm
                            r1 = 0.0
                            i1 = 0.0
                        else:
                            nrm = sqrt(r1 * r1 + i1 * i1)
                            r1 = r1 / nrm
                            i1 = i1 / nrm
                            r0 = 0.0
                            i0 = 0.0
                        angle = 0.0
                    else:
                        xi = TWO_PI * U[i, r, 3]
                        cs_xi = cos(xi)
                        sn_xi = sin(xi)
                        t = r1 * cs_xi + i1 * sn_xi
                        i1 = i1 * cs_xi - r1 * sn_xi
                        r1 = t
                        if epsilon != 0.0:
                            w0 = 1.0 + epsilon * Z[i, r, 1]
                            w1 = 1.0 - epsilon * Z[i, r, 1]
                            r0 = r0 * w0
                            i0 = i0 * w0
                            r1 = r1 * w1
                            i1 = i1 * w1
                        nrm = sqrt(r0 * r0 + i0 * i0 + r1 * r1 + i1 * i1)
                        r0 = r0 / nrm
                        i0 = i0 / nrm
                        r1 = r1 / nrm
                        i1 = i1 / nrm
                        angle = xi + xi_precision * Z[i, r, 0]
                else:
                    if U[i, r, 1] < p0:
                        j = _search(cdf_a, U[i, r, 2])
                    else:
                        j = _search(cdf_b, U[i, r, 2])
                    w0 = mag_a[j]
                    w1 = mag_b[j]
                    r0 = r0 * w0
                    i0 = i0 * w0
                    ar = cos(beta[j]) * w1
                    ai = sin(beta[j]) * w1
                    t = r1 * ar - i1 * ai
                    i1 = r1 * ai + i1 * ar
                    r1 = t
                    nrm = sqrt(r0 * r0 + i0 * i0 + r1 * r1 + i1 * i1)
                    r0 = r0 / nrm
                    i0 = i0 / nrm
                    r1 = r1 / nrm
                    i1 = i1 / nrm
                    angle = -beta[j]
                if deferred:
                    corr = corr + angle
                elif angle != 0.0:
                    cs_a = cos(angle)
                    sn_a = sin(angle)
                    t = r1 * cs_a - i1 * sn_a
                    i1 = r1 * sn_a + i1 * cs_a
                    r1 = t
            if lost:
                bits_out[i] = -1
                state_out[i, 0] = NAN
                state_out[i, 1] = NAN
                continue
            if deferred and corr != 0.0:
                cs_a = cos(corr)
                sn_a = sin(corr)
                t = r1 * cs_a - i1 * sn_a
                i1 = r1 * sn_a + i1 * cs_a
                r1 = t
            state_out[i, 0] = r0 + 1j * i0
            state_out[i, 1] = r1 + 1j * i1
            # readout: phase shift pi/2 (c1 -> i c1), then |1>-amplitude (c0 - i c1)/sqrt2
            ar = (r0 + i1) * SQRT_HALF
            ai = (i0 - r1) * SQRT_HALF
            bits_out[i] = 1 if u_final[i] < ar * ar + ai * ai else 0
