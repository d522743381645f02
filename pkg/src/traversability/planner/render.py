"""PNG output for planned paths and reachability over a hillshaded map."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ..heightmap import Heightmap
from ..travmap import hillshade
from .graph import PoseGraph
from .search import PathResult


def _base(hm: Heightmap) -> Image.Image:
    gray = np.clip(np.rint(hillshade(hm) * 255.0), 0, 255).astype(np.uint8)[::-1]
    return Image.fromarray(np.repeat(gray[..., None], 3, axis=2), "RGB")


def prob_color(p: float) -> tuple[int, int, int]:
    """Red at probability 0 through green at 1."""
    p = min(max(float(p), 0.0), 1.0)
    return int(round(255 * (1 - p))), int(round(255 * p)), 0


def _pixel(hm: Heightmap, x: float, y: float) -> tuple[float, float]:
    return x / hm.resolution - 0.5, hm.height_px - 0.5 - y / hm.resolution


def render_paths(hm: Heightmap, g: PoseGraph, paths: list[PathResult], path, width: int = 3) -> None:
    """Draw each path as a polyline colored by its traversal probability."""
    img = _base(hm)
    draw = ImageDraw.Draw(img)
    for p in paths:
        pts = [_pixel(hm, *g.node_pose(n)[:2]) for n in p.nodes]
        if len(pts) >= 2:
            draw.line(pts, fill=prob_color(p.traversal_prob), width=width)
        elif pts:
            x, y = pts[0]
            draw.ellipse([x - width, y - width, x + width, y + width], fill=prob_color(p.traversal_prob))
    img.save(Path(path), format="PNG")


def render_reachability(hm: Heightmap, g: PoseGraph, per_cell: dict, path) -> None:
    """Paint each lattice cell with its best reachability value."""
    img = _base(hm)
    draw = ImageDraw.Draw(img)
    half = g.spatial_step / 2
    for (i, j), v in sorted(per_cell.items()):
        x, y, _ = g.node_pose((i, j, 0))
        x0, y0 = _pixel(hm, x - half, y + half)
        x1, y1 = _pixel(hm, x + half, y - half)
        draw.rectangle([x0, y0, x1, y1], outline=prob_color(v), width=2)
    img.save(Path(path), format="PNG")
