# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled row sums for the double-time quadrature (see ``_pykernel`` for the contract).

Node vectors are stored per panel as ``[component][node]`` so the innermost
loop runs over the contiguous nodes of a panel.
"""
import numpy as np
from cython.parallel cimport prange

DEF MAXP = 16


cdef double _row(const double* ur, const double* ui, const double* br, const double* bi,
                 Py_ssize_t n, Py_ssize_t p, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t J, a, b, k, ab
    cdef Py_ssize_t pd = p * d
    cdef Py_ssize_t pp = p * p
    cdef const double* xr = ur + n * pd
    cdef const double* xi = ui + n * pd
    cdef const double* yr
    cdef const double* yi
    cdef const double* cr
    cdef const double* ci
    cdef double gr[MAXP * MAXP]
    cdef double gi[MAXP * MAXP]
    cdef double ar, ai, acc, off = 0.0, diag = 0.0
    for J in range(n + 1):
        yr = ur + J * pd
        yi = ui + J * pd
        cr = br + (n - J) * pp
        ci = bi + (n - J) * pp
        for ab in range(pp):
            gr[ab] = 0.0
            gi[ab] = 0.0
        for k in range(d):
            for a in range(p):
                ar = xr[k * p + a]
                ai = xi[k * p + a]
                for b in range(p):
                    gr[a * p + b] += ar * yr[k * p + b] + ai * yi[k * p + b]
                    gi[a * p + b] += ar * yi[k * p + b] - ai * yr[k * p + b]
        acc = 0.0
        for ab in range(pp):
            acc += cr[ab] * gr[ab] - ci[ab] * gi[ab]
        if J == n:
            diag = acc
        else:
            off += acc
    return diag + 2.0 * off


cdef double _row4(const double* ur, const double* ui, const double* br, const double* bi,
                  Py_ssize_t n, Py_ssize_t d) noexcept nogil:
    # p == 4 specialization: fixed trip counts let the compiler unroll and vectorize.
    cdef Py_ssize_t J, a, b, k, ab
    cdef Py_ssize_t pd = 4 * d
    cdef const double* xr = ur + n * pd
    cdef const double* xi = ui + n * pd
    cdef const double* yr
    cdef const double* yi
    cdef const double* cr
    cdef const double* ci
    cdef double gr[16]
    cdef double gi[16]
    cdef double ar, ai, acc, off = 0.0, diag = 0.0
    for J in range(n + 1):
        yr = ur + J * pd
        yi = ui + J * pd
        cr = br + (n - J) * 16
        ci = bi + (n - J) * 16
        for ab in range(16):
            gr[ab] = 0.0
            gi[ab] = 0.0
        for k in range(d):
            for a in range(4):
                ar = xr[k * 4 + a]
                ai = xi[k * 4 + a]
                for b in range(4):
                    gr[a * 4 + b] += ar * yr[k * 4 + b] + ai * yi[k * 4 + b]
                    gi[a * 4 + b] += ar * yi[k * 4 + b] - ai * yr[k * 4 + b]
        acc = 0.0
        for ab in range(16):
            acc += cr[ab] * gr[ab] - ci[ab] * gi[ab]
        if J == n:
            diag = acc
        else:
            off += acc
    return diag + 2.0 * off


def square_rows(v, w, btab, int threads=1):
    u = np.asarray(v) * np.asarray(w, dtype=float)[None, :, None]
    cdef Py_ssize_t M = u.shape[0], p = u.shape[1], d = u.shape[2]
    if p > MAXP:
        raise ValueError(f"at most {MAXP} nodes per panel are supported")
    ut = u.transpose(0, 2, 1)
    cdef double[::1] ur = np.ascontiguousarray(ut.real).ravel()
    cdef double[::1] ui = np.ascontiguousarray(ut.imag).ravel()
    cdef double[::1] br = np.ascontiguousarray(np.asarray(btab).real).ravel()
    cdef double[::1] bi = np.ascontiguousarray(np.asarray(btab).imag).ravel()
    out = np.zeros(M)
    cdef double[::1] o = out
    cdef Py_ssize_t n
    if M == 0:
        return out
    if threads < 1:
        threads = 1
    if p == 4:
        for n in prange(M, nogil=True, schedule="dynamic", num_threads=threads):
            o[n] = _row4(&ur[0], &ui[0], &br[0], &bi[0], n, d)
    else:
        for n in prange(M, nogil=True, schedule="dynamic", num_threads=threads):
            o[n] = _row(&ur[0], &ui[0], &br[0], &bi[0], n, p, d)
    return out
