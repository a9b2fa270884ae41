"""Pure-numpy versions of the compiled kernels.

Same signatures and semantics as ``_core``; vectorised across grid points with
the generation loop in Python.
"""

import numpy as np

FINITE, LINFRAC, NEGBIN, POISSON = 0, 1, 2, 3


def _c_eval(kind, p, w):
    if kind == LINFRAC:
        v = 1.0 - w
        return 1.0 - v / (1.0 + p[0] * v)
    if kind == NEGBIN:
        return np.exp(-p[0] * np.log(1.0 + p[1] * (1.0 - w)))
    if kind == POISSON:
        return np.exp(p[0] * (w - 1.0))
    acc = np.zeros_like(w)
    for c in p[::-1]:
        acc = acc * w + c
    return acc


def _r_comp(kind, p, t, u):
    if kind == LINFRAC:
        return u / (1.0 + p[0] * u)
    if kind == NEGBIN:
        return -np.expm1(-p[0] * np.log1p(p[1] * u))
    if kind == POISSON:
        return -np.expm1(-p[0] * u)
    x = 1.0 - u
    acc = np.zeros_like(u)
    for c in t[::-1]:
        acc = acc * x + c
    return u * acc


def _r_logeval(kind, p, t, u):
    if kind == LINFRAC:
        return np.log1p(-u / (1.0 + p[0] * u))
    if kind == NEGBIN:
        return -p[0] * np.log1p(p[1] * u)
    if kind == POISSON:
        return -p[0] * u
    c = _r_comp(kind, p, t, u)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(c >= 1.0, -np.inf, np.log1p(-np.minimum(c, 1.0)))


def _finish(kb, pb, acc, logmag, wind):
    if kb == NEGBIN:
        return np.exp(-pb[0] * (np.log(acc) + logmag + 2j * np.pi * wind))
    if kb == POISSON:
        return np.exp(pb[0] * acc)
    return acc.copy()


def spectral_values(ka, pa, kb, pb, z, snaps):
    z = np.asarray(z, dtype=np.complex128)
    snaps = np.asarray(snaps, dtype=np.int64)
    pa = np.asarray(pa, dtype=float)
    pb = np.asarray(pb, dtype=float)
    out = np.zeros((snaps.size, z.size), dtype=np.complex128)
    w = z.copy()
    acc = np.zeros_like(z) if kb == POISSON else np.ones_like(z)
    logmag = np.zeros(z.size)
    wind = np.zeros(z.size)
    nmax = int(snaps[-1]) if snaps.size else 0
    s = 0
    while s < snaps.size and snaps[s] == 0:
        out[s] = 1.0
        s += 1
    for m in range(nmax):
        if kb == NEGBIN:
            old_im = acc.imag
            acc = acc * (1.0 + pb[1] * (1.0 - w))
            neg = acc.real < 0.0
            wind += neg & (old_im >= 0.0) & (acc.imag < 0.0)
            wind -= neg & (old_im < 0.0) & (acc.imag >= 0.0)
            if m & 31 == 31:
                mag = np.abs(acc)
                logmag += np.log(mag)
                acc = acc / mag
        elif kb == POISSON:
            acc = acc + (w - 1.0)
        else:
            acc = acc * _c_eval(kb, pb, w)
        w = _c_eval(ka, pa, w)
        while s < snaps.size and snaps[s] == m + 1:
            out[s] = _finish(kb, pb, acc, logmag, wind)
            s += 1
    return out


def real_log_orbit(ka, pa, ta, kb, pb, tb, u0, snaps):
    u = np.array(u0, dtype=float)
    snaps = np.asarray(snaps, dtype=np.int64)
    pa, ta = np.asarray(pa, dtype=float), np.asarray(ta, dtype=float)
    pb, tb = np.asarray(pb, dtype=float), np.asarray(tb, dtype=float)
    logh = np.zeros((snaps.size, u.size))
    uout = np.zeros((snaps.size, u.size))
    acc = np.zeros_like(u)
    comp = np.zeros_like(u)
    nmax = int(snaps[-1]) if snaps.size else 0
    s = 0
    while s < snaps.size and snaps[s] == 0:
        logh[s], uout[s] = acc, u
        s += 1
    for m in range(nmax):
        v = _r_logeval(kb, pb, tb, u)
        with np.errstate(invalid="ignore"):
            t = acc + v
            big = np.abs(acc) >= np.abs(v)
            comp = comp + np.where(big, (acc - t) + v, (v - t) + acc)
        dead = np.isneginf(t)
        comp[dead] = 0.0
        acc = t
        u = _r_comp(ka, pa, ta, u)
        while s < snaps.size and snaps[s] == m + 1:
            logh[s], uout[s] = acc + comp, u
            s += 1
    return logh, uout
