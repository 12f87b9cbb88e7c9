# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernel for x' = (G0 + amp cos(carrier t - phase) G1) x."""

import numpy as np
from libc.math cimport cos


cdef inline void _rhs(const double complex[:, ::1] g0, const double complex[:, ::1] g1,
                      double f, const double complex[::1] x, double complex[::1] out,
                      Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double complex acc0, acc1
    for i in range(m):
        acc0 = 0
        acc1 = 0
        for k in range(m):
            acc0 = acc0 + g0[i, k] * x[k]
            acc1 = acc1 + g1[i, k] * x[k]
        out[i] = acc0 + f * acc1


def rk4_modulated(g0, g1, double amp, double carrier, double phase, x0,
                  double dt, Py_ssize_t nsteps, record):
    cdef const double complex[:, ::1] G0 = np.ascontiguousarray(g0, dtype=complex)
    cdef const double complex[:, ::1] G1 = np.ascontiguousarray(g1, dtype=complex)
    cdef const long long[::1] rec = np.ascontiguousarray(record, dtype=np.int64)
    cdef Py_ssize_t m = G0.shape[0]
    cdef Py_ssize_t nrec = rec.shape[0]
    out_arr = np.empty((nrec, m), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex[::1] x = np.array(x0, dtype=complex)
    cdef double complex[::1] tmp = np.empty(m, dtype=complex)
    cdef double complex[::1] k1 = np.empty(m, dtype=complex)
    cdef double complex[::1] k2 = np.empty(m, dtype=complex)
    cdef double complex[::1] k3 = np.empty(m, dtype=complex)
    cdef double complex[::1] k4 = np.empty(m, dtype=complex)
    cdef Py_ssize_t step, i, r = 0
    cdef double t, f0, fh, f1
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0

    with nogil:
        while r < nrec and rec[r] == 0:
            for i in range(m):
                out[r, i] = x[i]
            r += 1
        for step in range(nsteps):
            t = step * dt
            f0 = amp * cos(carrier * t - phase)
            fh = amp * cos(carrier * (t + h2) - phase)
            f1 = amp * cos(carrier * (t + dt) - phase)
            _rhs(G0, G1, f0, x, k1, m)
            for i in range(m):
                tmp[i] = x[i] + h2 * k1[i]
            _rhs(G0, G1, fh, tmp, k2, m)
            for i in range(m):
                tmp[i] = x[i] + h2 * k2[i]
            _rhs(G0, G1, fh, tmp, k3, m)
            for i in range(m):
                tmp[i] = x[i] + dt * k3[i]
            _rhs(G0, G1, f1, tmp, k4, m)
            for i in range(m):
                x[i] = x[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            while r < nrec and rec[r] == step + 1:
                for i in range(m):
                    out[r, i] = x[i]
                r += 1
    return out_arr
