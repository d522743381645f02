"""Seeded 2-D simplex noise, vectorized over numpy arrays."""
from __future__ import annotations

import math

import numpy as np

_F2 = 0.5 * (math.sqrt(3.0) - 1.0)
_G2 = (3.0 - math.sqrt(3.0)) / 6.0

# 12 gradient directions (edges of a cube projected to 2-D), as in the
# classic reference implementation
_GRAD = np.array(
    [[1, 1], [-1, 1], [1, -1], [-1, -1], [1, 0], [-1, 0], [1, 0], [-1, 0], [0, 1], [0, -1], [0, 1], [0, -1]],
    dtype=np.float64,
)

# Scaling by 70 brings the raw sum close to [-1, 1]; the final clip makes
# the bound exact.
_SCALE = 70.0

_perm_cache: dict[int, np.ndarray] = {}


def permutation(seed: int) -> np.ndarray:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    perm = _perm_cache.get(seed)
    if perm is None:
        p = np.random.default_rng(seed).permutation(256)
        perm = np.concatenate([p, p]).astype(np.intp)
        perm.setflags(write=False)
        _perm_cache[seed] = perm
    return perm


def simplex2_many(seed: int, x, y) -> np.ndarray:
    perm = permutation(seed)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    s = (x + y) * _F2
    i = np.floor(x + s)
    j = np.floor(y + s)
    t = (i + j) * _G2
    x0 = x - (i - t)
    y0 = y - (j - t)
    upper = x0 > y0
    i1 = upper.astype(np.intp)
    j1 = 1 - i1
    x1 = x0 - i1 + _G2
    y1 = y0 - j1 + _G2
    x2 = x0 - 1.0 + 2.0 * _G2
    y2 = y0 - 1.0 + 2.0 * _G2
    ii = np.mod(i, 256).astype(np.intp)
    jj = np.mod(j, 256).astype(np.intp)
    gi0 = perm[ii + perm[jj]] % 12
    gi1 = perm[ii + i1 + perm[jj + j1]] % 12
    gi2 = perm[ii + 1 + perm[jj + 1]] % 12

    total = np.zeros(np.broadcast(x, y).shape)
    for gi, dx, dy in ((gi0, x0, y0), (gi1, x1, y1), (gi2, x2, y2)):
        t = 0.5 - dx * dx - dy * dy
        g = _GRAD[gi]
        contrib = t ** 4 * (g[..., 0] * dx + g[..., 1] * dy)
        total += np.where(t > 0, contrib, 0.0)
    return np.clip(_SCALE * total, -1.0, 1.0)


def simplex2(seed: int, x: float, y: float) -> float:
    return float(simplex2_many(seed, np.array([x]), np.array([y]))[0])
