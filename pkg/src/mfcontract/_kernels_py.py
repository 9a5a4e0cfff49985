"""Pure numpy path kernel; the reference for the compiled ``_kernels`` module.

Every arithmetic expression here is mirrored operand-for-operand in
``_kernels.pyx`` so both backends produce bit-identical ensembles.
"""
import numpy as np

from .errors import NonFiniteState


def simulate_block(g, u, x0, y0, tables, bdt, zsig, zb, uj, hdt, c0dt, a1,
                   sig_sqdt, dt, f0, f1, g0, g1, snap_idx):
    n, n_steps = g.shape
    x = np.array(x0, dtype=float, copy=True)
    y = np.full(n, float(y0))
    cost = np.zeros(n)
    reward = np.zeros(n)
    gint = np.zeros(n)
    jumps = np.zeros(n, dtype=np.int64)
    n_snap = len(snap_idx)
    xs = np.empty((n, n_snap))
    ys = np.empty((n, n_snap))
    k = 0
    if n_snap and snap_idx[0] == 0:
        xs[:, 0] = x
        ys[:, 0] = y
        k = 1
    for s in range(n_steps):
        gs = g[:, s]
        cnt = np.searchsorted(tables[s], u[:, s], side="left")
        dn = cnt.astype(float)
        xn = x + bdt[s] + sig_sqdt * gs - dn
        xm = 0.5 * (x + xn)
        fdt = (f0 + f1 * xm) * dt
        y = y + zsig[s] * gs + zb[s] + uj[s] * dn - hdt[s] - fdt
        cost = cost + c0dt[s] - fdt
        reward = reward + a1[s] * dn
        gint = gint + (g0 + g1 * xm) * dt
        jumps += cnt
        x = xn
        bad = ~(np.isfinite(x) & np.isfinite(y))
        if bad.any():
            raise NonFiniteState(s, int(np.argmax(bad)))
        if k < n_snap and snap_idx[k] == s + 1:
            xs[:, k] = x
            ys[:, k] = y - cost + reward
            k += 1
    return x, y, jumps, cost, reward, gint, xs, ys
