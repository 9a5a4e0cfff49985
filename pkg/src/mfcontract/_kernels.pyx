# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled path kernel. Mirrors ``_kernels_py.simulate_block`` exactly."""
import numpy as np
from libc.math cimport isfinite

from .errors import NonFiniteState


def simulate_block(const double[:, ::1] g, const double[:, ::1] u, x0, double y0,
                   const double[:, ::1] tables, const double[::1] bdt, const double[::1] zsig,
                   const double[::1] zb, const double[::1] uj, const double[::1] hdt,
                   const double[::1] c0dt, const double[::1] a1,
                   double sig_sqdt, double dt, double f0, double f1, double g0, double g1,
                   snap_idx):
    cdef Py_ssize_t n = g.shape[0], n_steps = g.shape[1], width = tables.shape[1]
    cdef long[::1] snaps = np.ascontiguousarray(snap_idx, dtype=np.int_)
    cdef Py_ssize_t n_snap = snaps.shape[0]
    cdef double[::1] xin = np.ascontiguousarray(x0, dtype=np.float64)

    x_out = np.empty(n)
    y_out = np.empty(n)
    j_out = np.empty(n, dtype=np.int64)
    c_out = np.empty(n)
    r_out = np.empty(n)
    gi_out = np.empty(n)
    xs_out = np.empty((n, n_snap))
    ys_out = np.empty((n, n_snap))
    cdef double[::1] xv = x_out, yv = y_out, cv = c_out, rv = r_out, gv = gi_out
    cdef long long[::1] jv = j_out
    cdef double[:, ::1] xsv = xs_out, ysv = ys_out

    cdef Py_ssize_t i, s, k, c
    cdef double x, xn, xm, y, cost, reward, gint, gs, us, dn, fdt
    cdef long long jumps
    cdef Py_ssize_t bad_step = -1, bad_path = -1

    with nogil:
        for i in range(n):
            x = xin[i]
            y = y0
            cost = 0.0
            reward = 0.0
            gint = 0.0
            jumps = 0
            k = 0
            if n_snap > 0 and snaps[0] == 0:
                xsv[i, 0] = x
                ysv[i, 0] = y
                k = 1
            for s in range(n_steps):
                gs = g[i, s]
                us = u[i, s]
                c = 0
                while c < width and us > tables[s, c]:
                    c = c + 1
                dn = <double>c
                xn = x + bdt[s] + sig_sqdt * gs - dn
                xm = 0.5 * (x + xn)
                fdt = (f0 + f1 * xm) * dt
                y = y + zsig[s] * gs + zb[s] + uj[s] * dn - hdt[s] - fdt
                cost = cost + c0dt[s] - fdt
                reward = reward + a1[s] * dn
                gint = gint + (g0 + g1 * xm) * dt
                jumps = jumps + c
                x = xn
                if not (isfinite(x) and isfinite(y)):
                    if bad_step < 0 or s < bad_step:
                        bad_step = s
                        bad_path = i
                    break
                if k < n_snap and snaps[k] == s + 1:
                    xsv[i, k] = x
                    ysv[i, k] = y - cost + reward
                    k = k + 1
            xv[i] = x
            yv[i] = y
            cv[i] = cost
            rv[i] = reward
            gv[i] = gint
            jv[i] = jumps
    if bad_step >= 0:
        raise NonFiniteState(bad_step, bad_path)
    return x_out, y_out, j_out, c_out, r_out, gi_out, xs_out, ys_out
