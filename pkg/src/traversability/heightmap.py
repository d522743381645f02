"""Heightmaps, poses, bilinear sampling and rotated patch extraction.

World coordinates: grid node (row i, col j) sits at
``x = (j + 0.5) * resolution``, ``y = (i + 0.5) * resolution``. Rows run along
+y, columns along +x. Headings are measured counterclockwise from +x.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

TWO_PI = 2.0 * math.pi

DEFAULT_PATCH_SIDE = 60
DEFAULT_PATCH_RES = 0.02


class OutOfBoundsError(ValueError):
    """A query or footprint falls outside the sampleable area of a map."""


@dataclass(frozen=True)
class Heightmap:
    data: np.ndarray
    resolution: float

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError("heightmap data must be 2-D")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if not np.all(np.isfinite(data)):
            raise ValueError("heightmap contains non-finite values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def height_px(self) -> int:
        return self.data.shape[0]

    @property
    def width_px(self) -> int:
        return self.data.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        """Physical (width, height) in meters."""
        return self.width_px * self.resolution, self.height_px * self.resolution

    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the sampleable region (node centers)."""
        r = self.resolution
        return 0.5 * r, (self.width_px - 0.5) * r, 0.5 * r, (self.height_px - 0.5) * r

    def contains(self, x, y) -> np.ndarray:
        xmin, xmax, ymin, ymax = self.bounds()
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax)

    def node_xy(self, row: int, col: int) -> tuple[float, float]:
        return (col + 0.5) * self.resolution, (row + 0.5) * self.resolution

    def shifted(self, offset: float) -> "Heightmap":
        return Heightmap(self.data + offset, self.resolution)


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def advanced(self, distance: float) -> "Pose":
        return Pose(self.x + distance * math.cos(self.theta), self.y + distance * math.sin(self.theta), self.theta)


def normalize_angle(theta: float) -> float:
    t = math.fmod(float(theta), TWO_PI)
    if t < 0:
        t += TWO_PI
    # fmod of a tiny negative value can round up to exactly 2*pi
    return 0.0 if t >= TWO_PI else t


@dataclass(frozen=True)
class Patch:
    values: np.ndarray
    resolution: float = DEFAULT_PATCH_RES

    @property
    def side_px(self) -> int:
        return self.values.shape[0]

    @property
    def center(self) -> float:
        c = self.side_px // 2
        return float(self.values[c, c])


# --------------------------------------------------------------------------- sampling


def sample_bilinear_many(hm: Heightmap, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized bilinear interpolation. Raises if any point is out of bounds."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.all(hm.contains(x, y)):
        raise OutOfBoundsError("query outside heightmap bounds")
    return _bilinear(hm.data, x / hm.resolution - 0.5, y / hm.resolution - 0.5)


def _bilinear(data: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # u: fractional column, v: fractional row; both already in range
    h, w = data.shape
    j0 = np.minimum(np.floor(u).astype(np.intp), w - 2) if w > 1 else np.zeros(np.shape(u), np.intp)
    i0 = np.minimum(np.floor(v).astype(np.intp), h - 2) if h > 1 else np.zeros(np.shape(v), np.intp)
    fu = u - j0
    fv = v - i0
    j1 = np.minimum(j0 + 1, w - 1)
    i1 = np.minimum(i0 + 1, h - 1)
    # a + f * (b - a) reproduces constant data exactly
    top = data[i0, j0] + fu * (data[i0, j1] - data[i0, j0])
    bot = data[i1, j0] + fu * (data[i1, j1] - data[i1, j0])
    return top + fv * (bot - top)


def sample_bilinear(hm: Heightmap, x: float, y: float) -> float:
    return float(sample_bilinear_many(hm, np.array([x]), np.array([y]))[0])


# --------------------------------------------------------------------------- patches


def patch_offsets(side_px: int, patch_resolution: float) -> tuple[np.ndarray, np.ndarray]:
    """Patch-local (forward, lateral) offsets in meters, shape (side, side).

    Column index maps to the forward axis, row index to the lateral (left) axis;
    pixel (side//2, side//2) is the pose itself.
    """
    k = (np.arange(side_px) - side_px // 2) * patch_resolution
    fwd = np.broadcast_to(k[None, :], (side_px, side_px))
    lat = np.broadcast_to(k[:, None], (side_px, side_px))
    return fwd, lat


def patch_radius(side_px: int = DEFAULT_PATCH_SIDE, patch_resolution: float = DEFAULT_PATCH_RES) -> float:
    """Largest distance from the pose to any patch sample, over all headings."""
    k = side_px // 2
    far = max(k, side_px - 1 - k) * patch_resolution
    return math.hypot(far, far)


def patch_world_coords(poses_xy: np.ndarray, theta: float, side_px: int, patch_resolution: float):
    """World sample coordinates for patches at several positions sharing one heading.

    ``poses_xy`` has shape (N, 2); returns (N, side, side) arrays of x and y.
    """
    fwd, lat = patch_offsets(side_px, patch_resolution)
    c = math.cos(theta)
    s = math.sin(theta)
    dx = fwd * c - lat * s
    dy = fwd * s + lat * c
    px = np.asarray(poses_xy, dtype=np.float64)[:, 0, None, None]
    py = np.asarray(poses_xy, dtype=np.float64)[:, 1, None, None]
    return px + dx, py + dy


def patch_fits(hm: Heightmap, pose: Pose, side_px: int = DEFAULT_PATCH_SIDE,
               patch_resolution: float = DEFAULT_PATCH_RES) -> bool:
    xs, ys = patch_world_coords(np.array([[pose.x, pose.y]]), pose.theta, side_px, patch_resolution)
    return bool(np.all(hm.contains(xs, ys)))


def extract_patches(hm: Heightmap, poses_xy: np.ndarray, theta: float, side_px: int = DEFAULT_PATCH_SIDE,
                    patch_resolution: float = DEFAULT_PATCH_RES) -> np.ndarray:
    """Batched patch extraction for positions sharing a heading; (N, side, side) float64."""
    xs, ys = patch_world_coords(poses_xy, theta, side_px, patch_resolution)
    if not np.all(hm.contains(xs, ys)):
        raise OutOfBoundsError("patch footprint exceeds map bounds")
    vals = _bilinear(hm.data, xs / hm.resolution - 0.5, ys / hm.resolution - 0.5)
    c = side_px // 2
    # the center sample lands exactly on the pose, so subtracting it zeroes the center
    return vals - vals[:, c:c + 1, c:c + 1]


def extract_patch(hm: Heightmap, pose: Pose, side_px: int = DEFAULT_PATCH_SIDE,
                  patch_resolution: float = DEFAULT_PATCH_RES) -> Patch:
    vals = extract_patches(hm, np.array([[pose.x, pose.y]]), pose.theta, side_px, patch_resolution)[0]
    vals.setflags(write=False)
    return Patch(vals, patch_resolution)


# --------------------------------------------------------------------------- I/O


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def save_heightmap(hm: Heightmap, path, format: str = "png16") -> None:
    path = Path(path)
    if format == "png16":
        z_min = float(hm.data.min())
        z_max = float(hm.data.max())
        span = z_max - z_min
        if span > 0:
            q = np.rint((hm.data - z_min) / span * 65535.0)
        else:
            q = np.zeros(hm.data.shape)
        Image.fromarray(q.astype(np.uint16)).save(path, format="PNG")
        meta = {"resolution_m_per_px": hm.resolution, "z_min_m": z_min, "z_max_m": z_max}
        _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    elif format == "ascii-grid":
        lines = [f"{hm.width_px} {hm.height_px} {hm.resolution!r}"]
        lines += [" ".join(repr(float(v)) for v in row) for row in hm.data]
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown heightmap format {format!r}")


def load_heightmap(path, format: str | None = None, resolution: float | None = None,
                   z_min: float | None = None, z_max: float | None = None) -> Heightmap:
    """Load a png16 (with optional sidecar metadata) or ascii-grid heightmap.

    Explicit ``resolution``/``z_min``/``z_max`` override the sidecar values.
    """
    path = Path(path)
    if format is None:
        format = "png16" if path.suffix.lower() == ".png" else "ascii-grid"
    if format == "png16":
        with Image.open(path) as img:
            raw = np.array(img)
        if raw.ndim != 2:
            raise ValueError(f"{path}: expected a single-channel image")
        side = _sidecar(path)
        meta = json.loads(side.read_text()) if side.exists() else {}
        resolution = resolution if resolution is not None else meta.get("resolution_m_per_px")
        z_min = z_min if z_min is not None else meta.get("z_min_m")
        z_max = z_max if z_max is not None else meta.get("z_max_m")
        if resolution is None or z_min is None or z_max is None:
            raise ValueError(f"{path}: resolution and z-range must be given or present in the sidecar")
        if raw.dtype == np.uint8:
            raw = raw.astype(np.float64) * 257.0
        if not z_max >= z_min:
            raise ValueError("z_max must not be below z_min")
        heights = z_min + raw.astype(np.float64) / 65535.0 * (z_max - z_min)
        return Heightmap(heights, resolution)
    if format == "ascii-grid":
        tokens = path.read_text().split()
        try:
            width, height = int(tokens[0]), int(tokens[1])
            res = float(tokens[2])
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{path}: malformed ascii-grid header") from exc
        values = np.array([float(t) for t in tokens[3:]])
        if values.size != width * height:
            raise ValueError(f"{path}: expected {width * height} heights, found {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{path}: non-finite height values")
        return Heightmap(values.reshape(height, width), resolution if resolution is not None else res)
    raise ValueError(f"unknown heightmap format {format!r}")
