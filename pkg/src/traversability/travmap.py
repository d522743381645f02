"""Dense oriented traversability maps and their rendering.

Grid point (r, c) sits at world position ``((c * stride + 0.5) * res,
(r * stride + 0.5) * res)``, i.e. on heightmap node (r * stride, c * stride).
Orientation k faces ``2 * pi * k / n_orientations``.
"""
from __future__ import annotations

import json
import math
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .heightmap import DEFAULT_PATCH_RES, DEFAULT_PATCH_SIDE, Heightmap, extract_patches, patch_world_coords

MAGIC = b"TRVOMAP\0"
VERSION = 1


@dataclass
class OrientedTravMap:
    grid: np.ndarray  # (n_orientations, rows, cols); NaN where the patch leaves the map
    stride_px: int
    map_id: str = ""
    model_id: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def n_orientations(self) -> int:
        return self.grid.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.grid)

    def theta(self, k: int) -> float:
        return 2.0 * math.pi * (k % self.n_orientations) / self.n_orientations

    def to_bytes(self) -> bytes:
        header = {"shape": list(self.grid.shape), "stride_px": self.stride_px, "n_orientations": self.n_orientations,
                  "map_id": self.map_id, "model_id": self.model_id, "dtype": "<f4"}
        blob = json.dumps(header, sort_keys=True).encode()
        return MAGIC + struct.pack("<II", VERSION, len(blob)) + blob + self.grid.astype("<f4").tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "OrientedTravMap":
        if raw[:8] != MAGIC:
            raise ValueError("not an oriented traversability map")
        version, n = struct.unpack("<II", raw[8:16])
        if version != VERSION:
            raise ValueError(f"unsupported map version {version}")
        h = json.loads(raw[16:16 + n].decode())
        grid = np.frombuffer(raw[16 + n:], dtype="<f4").reshape(h["shape"]).astype(np.float32)
        return cls(grid, h["stride_px"], h["map_id"], h["model_id"])


def grid_positions(hm: Heightmap, stride_px: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.arange(0, hm.height_px, stride_px)
    cols = np.arange(0, hm.width_px, stride_px)
    return rows, cols


def build_oriented_map(hm: Heightmap, model, stride_px: int = 5, n_orientations: int = 32,
                       side_px: int = DEFAULT_PATCH_SIDE, patch_resolution: float = DEFAULT_PATCH_RES,
                       batch: int = 1024, region: tuple[slice, slice] | None = None,
                       map_id: str = "", model_id: str = "") -> OrientedTravMap:
    """Score every grid point and orientation; cells whose patch leaves the map are NaN.

    ``region`` optionally restricts evaluation to a (row slice, col slice) of
    the grid; cells outside it stay NaN.
    """
    if stride_px < 1 or n_orientations < 1:
        raise ValueError("stride and orientation count must be positive")
    rows, cols = grid_positions(hm, stride_px)
    grid = np.full((n_orientations, len(rows), len(cols)), np.nan, dtype=np.float32)
    rr, cc = np.meshgrid(np.arange(len(rows)), np.arange(len(cols)), indexing="ij")
    sel_mask = np.ones(rr.shape, bool)
    if region is not None:
        sel_mask[:] = False
        sel_mask[region] = True
    rr, cc = rr[sel_mask], cc[sel_mask]
    r = hm.resolution
    xy = np.stack([(cols[cc] + 0.5) * r, (rows[rr] + 0.5) * r], axis=1)
    t0 = time.perf_counter()
    evaluated = 0
    for k in range(n_orientations):
        theta = 2.0 * math.pi * k / n_orientations
        cx, cy = patch_world_coords(xy, theta, side_px, patch_resolution)
        corners = (slice(None), [0, 0, -1, -1], [0, -1, 0, -1])
        fits = np.flatnonzero(np.all(hm.contains(cx[corners], cy[corners]), axis=1))
        for s in range(0, len(fits), batch):
            idx = fits[s:s + batch]
            patches = extract_patches(hm, xy[idx], theta, side_px, patch_resolution).astype(np.float32)
            grid[k, rr[idx], cc[idx]] = model.predict_proba(patches)
            evaluated += len(idx)
    wall = time.perf_counter() - t0
    stats = {"patches_evaluated": evaluated, "wall_seconds": wall,
             "patches_per_second": evaluated / wall if wall > 0 else float("inf")}
    return OrientedTravMap(grid, stride_px, map_id, model_id, stats)


def throughput_report(m: OrientedTravMap) -> dict:
    return dict(m.stats)


def evaluations_per_square_meter(stride_m: float, n_orientations: int) -> float:
    per_axis = 1.0 / stride_m
    return per_axis * per_axis * n_orientations


def min_over_orientations(m: OrientedTravMap) -> np.ndarray:
    """Pointwise minimum across orientations; NaN wherever any orientation is invalid."""
    # np.min propagates NaN, which is exactly the masking rule
    return m.grid.min(axis=0)


# --------------------------------------------------------------------------- rendering

GREEN = np.array([0.0, 200.0, 0.0])
MAX_ALPHA = 0.6


def hillshade(hm: Heightmap, azimuth_deg: float = 315.0, altitude_deg: float = 45.0) -> np.ndarray:
    """Lambertian hillshade in [0, 1] with the light from ``azimuth`` (clockwise from north)."""
    gy, gx = np.gradient(hm.data, hm.resolution)
    slope = np.arctan(np.hypot(gx, gy))
    # rows grow toward +y (north), so the aspect uses gy directly
    aspect = np.arctan2(-gx, -gy)
    az = math.radians(azimuth_deg)
    alt = math.radians(altitude_deg)
    shade = math.sin(alt) * np.cos(slope) + math.cos(alt) * np.sin(slope) * np.cos(az - aspect)
    return np.clip(shade, 0.0, 1.0)


def overlay_rgb(hm: Heightmap, overlay: np.ndarray, stride_px: int) -> np.ndarray:
    """Float RGB image (rows flipped so north is up) with green alpha = 0.6 * probability."""
    base = np.repeat(hillshade(hm)[..., None] * 255.0, 3, axis=2)
    prob = np.repeat(np.repeat(overlay, stride_px, axis=0), stride_px, axis=1)[: hm.height_px, : hm.width_px]
    alpha = np.where(np.isnan(prob), 0.0, MAX_ALPHA * np.nan_to_num(prob))[..., None]
    rgb = base * (1.0 - alpha) + GREEN * alpha
    return rgb[::-1]


def render_overlay(hm: Heightmap, overlay: np.ndarray, path, stride_px: int = 5) -> None:
    rows, cols = grid_positions(hm, stride_px)
    if overlay.shape != (len(rows), len(cols)):
        raise ValueError(f"overlay shape {overlay.shape} does not match the {len(rows)}x{len(cols)} grid")
    rgb = overlay_rgb(hm, overlay, stride_px)
    Image.fromarray(np.clip(np.rint(rgb), 0, 255).astype(np.uint8), "RGB").save(Path(path), format="PNG")
