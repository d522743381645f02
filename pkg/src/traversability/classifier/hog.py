"""Histogram-of-gradients descriptor for height patches.

Gradients are central differences (one-sided at the border). Orientations
are unsigned and split into ``orientations`` bins over [0, pi); each pixel
votes its gradient magnitude into its bin. Cells are ``cell_px`` squares
tiled from the patch center outward, so a 60 px patch with 8 px cells keeps
the central 7 x 7 cells (56 px). Blocks of ``block_cells`` x ``block_cells``
cells are L2-normalized and concatenated.

Block placement: ``block_stride`` gives the step between blocks in cells as
(rows, cols). The default (3, 2) places 2 blocks across the lateral axis and
3 along the heading axis on a 7 x 7 cell grid, for 6 blocks of 9 cells x 6
bins = 324 features.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-8


@dataclass(frozen=True)
class HogParams:
    orientations: int = 6
    cell_px: int = 8
    block_cells: int = 3
    block_stride: tuple[int, int] = (3, 2)

    def grid(self, side: int) -> tuple[int, int, int]:
        """(cells per axis, block rows, block cols) for a square patch."""
        n = side // self.cell_px
        if n < self.block_cells:
            raise ValueError(f"{side} px patch holds fewer than {self.block_cells} cells of {self.cell_px} px")
        br = (n - self.block_cells) // self.block_stride[0] + 1
        bc = (n - self.block_cells) // self.block_stride[1] + 1
        return n, br, bc

    def length(self, side: int) -> int:
        _, br, bc = self.grid(side)
        return br * bc * self.block_cells ** 2 * self.orientations


def hog_many(patches: np.ndarray, params: HogParams = HogParams(), chunk: int = 256) -> np.ndarray:
    """Descriptors for a (N, side, side) stack; returns (N, length) float32."""
    patches = np.asarray(patches)
    if patches.ndim == 2:
        patches = patches[None]
    if len(patches) <= chunk:
        return _hog_block(patches, params)
    return np.concatenate([_hog_block(patches[s:s + chunk], params) for s in range(0, len(patches), chunk)])


def _hog_block(patches: np.ndarray, params: HogParams) -> np.ndarray:
    x = np.asarray(patches, dtype=np.float64)
    side = x.shape[1]
    if x.shape[2] != side:
        raise ValueError("patches must be square")
    n_cells, br, bc = params.grid(side)
    gy = np.gradient(x, axis=1)
    gx = np.gradient(x, axis=2)
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), np.pi)
    bins = np.minimum((ang / np.pi * params.orientations).astype(np.intp), params.orientations - 1)

    used = n_cells * params.cell_px
    o = (side - used) // 2
    mag = mag[:, o:o + used, o:o + used]
    bins = bins[:, o:o + used, o:o + used]
    hist = np.zeros((x.shape[0], used, used, params.orientations))
    np.put_along_axis(hist, bins[..., None], mag[..., None], axis=-1)
    c = params.cell_px
    cells = hist.reshape(x.shape[0], n_cells, c, n_cells, c, params.orientations).sum(axis=(2, 4))

    b = params.block_cells
    sr, sc = params.block_stride
    blocks = []
    for i in range(br):
        for j in range(bc):
            blk = cells[:, i * sr:i * sr + b, j * sc:j * sc + b].reshape(x.shape[0], -1)
            norm = np.sqrt(np.sum(blk * blk, axis=1, keepdims=True) + EPS ** 2)
            blocks.append(blk / norm)
    return np.concatenate(blocks, axis=1).astype(np.float32)


def hog(patch, params: HogParams = HogParams()) -> np.ndarray:
    values = getattr(patch, "values", patch)
    return hog_many(np.asarray(values)[None], params)[0]
