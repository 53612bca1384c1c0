# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Euler-Maruyama stepping kernel for the Heisenberg lattice.

Mirrors the numpy reference path in simulate._evolve_chunk: same neighbor
table convention (phantom index == nsites contributes a zero state), same
interaction family (gain * tanh(patch mean) * sech(center coordinate)),
same update formula.  Noise is passed in per chunk so both backends consume
identical counter-based increments.
"""

import numpy as np

from libc.math cimport sqrt, tanh, exp, fabs


def heisenberg_evolve(double[:, :, ::1] states, double[::1] lam,
                      long[:, ::1] table, Py_ssize_t center_slot,
                      double gain, double h, double[:, :, :, ::1] noise):
    """Advance states (R, N, 3) in place by noise.shape[0] steps."""
    cdef Py_ssize_t S = noise.shape[0]
    cdef Py_ssize_t R = states.shape[0]
    cdef Py_ssize_t N = states.shape[1]
    cdef Py_ssize_t P = table.shape[1]
    cdef Py_ssize_t s, r, i, p
    cdef long j
    cdef double sqh = sqrt(h)
    cdef double sq2 = sqrt(2.0)
    cdef double sx, sy, mx, my, qx, qy, x, y, z, li, xi1, xi2, ex, ey

    buf_arr = np.empty((N, 3), dtype=np.float64)
    cdef double[:, ::1] buf = buf_arr

    for s in range(S):
        for r in range(R):
            for i in range(N):
                x = states[r, i, 0]
                y = states[r, i, 1]
                z = states[r, i, 2]
                li = lam[i]
                if gain != 0.0:
                    sx = 0.0
                    sy = 0.0
                    for p in range(P):
                        j = table[i, p]
                        if j < N:
                            sx += states[r, j, 0]
                            sy += states[r, j, 1]
                    mx = sx / P
                    my = sy / P
                    ex = exp(-fabs(x))
                    ey = exp(-fabs(y))
                    qx = gain * tanh(mx) * (2.0 * ex / (1.0 + ex * ex))
                    qy = gain * tanh(my) * (2.0 * ey / (1.0 + ey * ey))
                else:
                    qx = 0.0
                    qy = 0.0
                xi1 = noise[s, r, i, 0]
                xi2 = noise[s, r, i, 1]
                buf[i, 0] = x + h * (qx - li * x) + sqh * (sq2 * xi1)
                buf[i, 1] = y + h * (qy - li * y) + sqh * (sq2 * xi2)
                buf[i, 2] = (z + h * (-2.0 * li * z + 0.5 * (qy * x - qx * y))
                             + sqh * ((x * xi2 - y * xi1) / sq2))
            for i in range(N):
                states[r, i, 0] = buf[i, 0]
                states[r, i, 1] = buf[i, 1]
                states[r, i, 2] = buf[i, 2]
