"""Reproducible random streams for path simulation.

Paths are grouped in fixed blocks of ``BLOCK_SIZE``. Each block owns a
Philox (counter-based) generator keyed by ``(seed, block index)``, and a
path's draws depend only on its block and its row inside the block, so
the result does not change with the number of workers or with how blocks
are scheduled.
"""
from __future__ import annotations

import numpy as np

BLOCK_SIZE = 4096
_TAIL = 1e-17


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def blocks(n_paths: int, block_size: int = BLOCK_SIZE):
    """Yield ``(block_index, start, stop)`` covering ``range(n_paths)``."""
    for b, start in enumerate(range(0, n_paths, block_size)):
        yield b, start, min(start + block_size, n_paths)


def draw_block(seed: int, block: int, n: int, n_steps: int, n_uniform: int = 1, antithetic: bool = False):
    """Draws for one block: initial normals ``(n,)``, step normals ``(n, n_steps)``
    and ``n_uniform`` uniform arrays ``(n, n_steps)`` for jump counts.

    Draw order is fixed (initial, normals, uniforms by stream), so the first
    uniform stream is shared by engines that use one or several marks.
    With ``antithetic`` odd rows mirror the even rows: ``-G`` and ``1 - U``.
    """
    rng = block_rng(seed, block)
    rows = (n + 1) // 2 if antithetic else n
    z0 = rng.standard_normal(rows)
    g = rng.standard_normal((rows, n_steps))
    us = [rng.random((rows, n_steps)) for _ in range(n_uniform)]
    if not antithetic:
        return z0, g, us

    def mirror(a, flip):
        out = np.empty((n,) + a.shape[1:])
        out[0::2] = a
        out[1::2] = flip(a[: n // 2])
        return out

    z0 = mirror(z0, np.negative)
    g = mirror(g, np.negative)
    # 1 - U can be exactly 1.0 only if U == 0; keep the open upper end
    us = [mirror(u, lambda a: np.where(a > 0, 1.0 - a, a)) for u in us]
    return z0, g, us


def poisson_cdf_tables(mu) -> np.ndarray:
    """Cumulative Poisson probabilities per step, padded with 1.0.

    A jump count is the number of table entries strictly below a uniform
    draw (inversion), which couples counts monotonically across intensities.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0) or not np.all(np.isfinite(mu)):
        raise ValueError("Poisson means must be finite and non-negative")
    rows = []
    for m in mu:
        pk = np.exp(-m)
        cdf = [pk]
        k = 0
        while k < m or pk > _TAIL * 1e-3:
            k += 1
            pk *= m / k
            cdf.append(cdf[-1] + pk)
        cdf[-1] = 1.0
        rows.append(np.minimum(cdf, 1.0))  # rounding can overshoot 1 in the tail
    width = max(len(r) for r in rows)
    table = np.ones((len(rows), width))
    for i, r in enumerate(rows):
        table[i, : len(r)] = r
    return table


def poisson_inverse(u, mu):
    """Elementwise Poisson inversion for varying means (used by the generic engine)."""
    u = np.asarray(u, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), u.shape)
    pk = np.exp(-mu)
    cdf = pk.copy()
    count = np.zeros(u.shape, dtype=np.int64)
    active = u > cdf
    k = 0
    while np.any(active):
        k += 1
        pk = pk * mu / k
        cdf = cdf + pk
        count += active
        # once pk underflows the cdf cannot move; stop even if rounding left it below u
        active &= (u > cdf) & (pk > 0)
    return count
