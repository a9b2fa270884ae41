# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: PGF orbits on complex grids and on the real line."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, expm1, fabs, INFINITY, M_PI

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double complex clog(double complex)
    double cabs(double complex)

cnp.import_array()

cdef enum:
    FINITE = 0
    LINFRAC = 1
    NEGBIN = 2
    POISSON = 3


cdef inline double complex c_eval(int kind, const double[::1] p, double complex w) noexcept nogil:
    cdef double complex v, acc
    cdef Py_ssize_t i
    cdef double vr, vi, dr, di, den
    if kind == LINFRAC:
        # 1 - v / (1 + gamma v) with v = 1 - w, division written out
        vr = 1.0 - w.real
        vi = -w.imag
        dr = 1.0 + p[0] * vr
        di = p[0] * vi
        den = dr * dr + di * di
        return (1.0 - (vr * dr + vi * di) / den) + 1j * (-(vi * dr - vr * di) / den)
    elif kind == NEGBIN:
        return cexp(-p[0] * clog(1.0 + p[1] * (1.0 - w)))
    elif kind == POISSON:
        return cexp(p[0] * (w - 1.0))
    acc = 0.0
    for i in range(p.shape[0] - 1, -1, -1):
        acc = acc * w + p[i]
    return acc


cdef inline double r_comp(int kind, const double[::1] p, const double[::1] t, double u) noexcept nogil:
    # 1 - G(1 - u)
    cdef double acc, x
    cdef Py_ssize_t i
    if kind == LINFRAC:
        return u / (1.0 + p[0] * u)
    elif kind == NEGBIN:
        return -expm1(-p[0] * log1p(p[1] * u))
    elif kind == POISSON:
        return -expm1(-p[0] * u)
    x = 1.0 - u
    acc = 0.0
    for i in range(t.shape[0] - 1, -1, -1):
        acc = acc * x + t[i]
    return u * acc


cdef inline double r_logeval(int kind, const double[::1] p, const double[::1] t, double u) noexcept nogil:
    # log G(1 - u)
    cdef double c
    if kind == LINFRAC:
        return log1p(-u / (1.0 + p[0] * u))
    elif kind == NEGBIN:
        return -p[0] * log1p(p[1] * u)
    elif kind == POISSON:
        return -p[0] * u
    c = r_comp(kind, p, t, u)
    if c >= 1.0:
        return -INFINITY
    return log1p(-c)


cdef inline double complex _finish(int kb, const double[::1] pb, double complex acc,
                                   double logmag, long wind) noexcept nogil:
    # turn the immigration accumulator into H
    if kb == NEGBIN:
        return cexp(-pb[0] * (clog(acc) + logmag + 2.0j * M_PI * wind))
    elif kb == POISSON:
        return cexp(pb[0] * acc)
    return acc


def spectral_values(int ka, const double[::1] pa, int kb, const double[::1] pb,
                    const double complex[::1] z, const long[::1] snaps):
    """H_n(z) = prod_{m<n} B(A_m(z)) for every grid point and snapshot n.

    Negative-binomial immigration is accumulated as a running product of
    1 + gamma (1 - w) with the branch-cut crossings counted, so the complex
    power is taken once per snapshot instead of once per generation.  Points
    are advanced in blocks so independent orbits overlap in the pipeline.
    """
    cdef Py_ssize_t npts = z.shape[0], nsnap = snaps.shape[0]
    out_arr = np.zeros((nsnap, npts), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t s, b0, nb, i
    cdef long m, nmax = snaps[nsnap - 1] if nsnap else 0
    cdef double complex w[32]
    cdef double complex acc[32]
    cdef double logmag[32]
    cdef long wind[32]
    cdef double complex f
    cdef double mag, old_im, g = pb[1] if kb == NEGBIN else 0.0
    with nogil:
        for b0 in range(0, npts, 32):
            nb = min(32, npts - b0)
            for i in range(nb):
                w[i] = z[b0 + i]
                acc[i] = 0.0 if kb == POISSON else 1.0
                logmag[i] = 0.0
                wind[i] = 0
            s = 0
            while s < nsnap and snaps[s] == 0:
                for i in range(nb):
                    out[s, b0 + i] = 1.0
                s += 1
            for m in range(nmax):
                if kb == NEGBIN:
                    for i in range(nb):
                        f = 1.0 + g * (1.0 - w[i])
                        old_im = acc[i].imag
                        acc[i] = acc[i] * f
                        if acc[i].real < 0.0:
                            if old_im >= 0.0 and acc[i].imag < 0.0:
                                wind[i] += 1
                            elif old_im < 0.0 and acc[i].imag >= 0.0:
                                wind[i] -= 1
                    if (m & 31) == 31:
                        for i in range(nb):
                            mag = cabs(acc[i])
                            logmag[i] += log(mag)
                            acc[i] = acc[i] / mag
                elif kb == POISSON:
                    for i in range(nb):
                        acc[i] = acc[i] + (w[i] - 1.0)
                else:
                    for i in range(nb):
                        acc[i] = acc[i] * c_eval(kb, pb, w[i])
                for i in range(nb):
                    w[i] = c_eval(ka, pa, w[i])
                while s < nsnap and snaps[s] == m + 1:
                    for i in range(nb):
                        out[s, b0 + i] = _finish(kb, pb, acc[i], logmag[i], wind[i])
                    s += 1
    return out_arr


def real_log_orbit(int ka, const double[::1] pa, const double[::1] ta,
                   int kb, const double[::1] pb, const double[::1] tb,
                   const double[::1] u0, const long[::1] snaps):
    """log H_n(1 - u0) and 1 - A_n(1 - u0) at each snapshot n."""
    cdef Py_ssize_t npts = u0.shape[0], nsnap = snaps.shape[0]
    logh_arr = np.zeros((nsnap, npts), dtype=np.float64)
    uout_arr = np.zeros((nsnap, npts), dtype=np.float64)
    cdef double[:, ::1] logh = logh_arr
    cdef double[:, ::1] uout = uout_arr
    cdef Py_ssize_t s, b0, nb, i
    cdef long m, nmax = snaps[nsnap - 1] if nsnap else 0
    cdef double u[32]
    cdef double acc[32]
    cdef double comp[32]
    with nogil:
        for b0 in range(0, npts, 32):
            nb = min(32, npts - b0)
            for i in range(nb):
                u[i] = u0[b0 + i]
                acc[i] = 0.0
                comp[i] = 0.0
            s = 0
            while s < nsnap and snaps[s] == 0:
                for i in range(nb):
                    logh[s, b0 + i] = 0.0
                    uout[s, b0 + i] = u[i]
                s += 1
            for m in range(nmax):
                for i in range(nb):
                    # Neumaier-compensated running sum
                    acc[i], comp[i] = _neumaier(acc[i], comp[i], r_logeval(kb, pb, tb, u[i]))
                    u[i] = r_comp(ka, pa, ta, u[i])
                while s < nsnap and snaps[s] == m + 1:
                    for i in range(nb):
                        logh[s, b0 + i] = acc[i] + comp[i]
                        uout[s, b0 + i] = u[i]
                    s += 1
    return logh_arr, uout_arr


cdef inline (double, double) _neumaier(double acc, double comp, double v) noexcept nogil:
    cdef double t
    if v == -INFINITY or acc == -INFINITY:
        return -INFINITY, 0.0
    t = acc + v
    if fabs(acc) >= fabs(v):
        comp += (acc - t) + v
    else:
        comp += (v - t) + acc
    return t, comp
