"""Pose graphs: lattice nodes joined by in-place rotations and forward moves."""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable

import numpy as np

from ..heightmap import DEFAULT_PATCH_RES, DEFAULT_PATCH_SIDE, Heightmap, extract_patches, patch_radius, patch_world_coords

ROTATE = "rotate"
TRANSLATE = "translate"

N_HEADINGS = 8
# heading index k -> lattice step (dx, dy); k * 45 degrees counterclockwise from +x
HEADING_STEPS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


@dataclass(frozen=True)
class Edge:
    src: Hashable
    dst: Hashable
    kind: str
    length: float
    prob: float

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"edge probability {self.prob} outside [0, 1]")
        if self.length < 0:
            raise ValueError("edge length must be non-negative")


@dataclass
class PoseGraph:
    nodes: list
    edges: list[Edge]
    spatial_step: float = 0.18
    angular_step: float = math.pi / 4
    # world position of lattice index (0, 0)
    origin: tuple[float, float] = (0.0, 0.0)
    out: dict = field(init=False, repr=False)

    def __post_init__(self):
        known = set(self.nodes)
        self.out = defaultdict(list)
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                raise ValueError(f"edge {e.src}->{e.dst} references an unknown node")
            self.out[e.src].append(e)

    def __contains__(self, node) -> bool:
        return node in self.out or node in set(self.nodes)

    def out_edges(self, node) -> list[Edge]:
        return self.out.get(node, [])

    def without_edge(self, edge: Edge) -> "PoseGraph":
        edges = list(self.edges)
        edges.remove(edge)
        return PoseGraph(list(self.nodes), edges, self.spatial_step, self.angular_step, self.origin)

    def node_pose(self, node) -> tuple[float, float, float]:
        ix, iy, k = node
        return (self.origin[0] + ix * self.spatial_step, self.origin[1] + iy * self.spatial_step,
                k * self.angular_step)

    def to_dict(self) -> dict:
        return {
            "spatial_step": self.spatial_step,
            "angular_step": self.angular_step,
            "origin": list(self.origin),
            "nodes": [list(n) if isinstance(n, tuple) else n for n in self.nodes],
            "edges": [
                {"src": list(e.src) if isinstance(e.src, tuple) else e.src,
                 "dst": list(e.dst) if isinstance(e.dst, tuple) else e.dst,
                 "kind": e.kind, "length": e.length, "prob": e.prob}
                for e in self.edges
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PoseGraph":
        def key(n):
            return tuple(n) if isinstance(n, list) else n

        edges = [Edge(key(e["src"]), key(e["dst"]), e["kind"], e["length"], e["prob"]) for e in d["edges"]]
        return cls([key(n) for n in d["nodes"]], edges, d["spatial_step"], d["angular_step"], tuple(d["origin"]))


def lattice_axis(lo: float, hi: float, step: float) -> tuple[float, int]:
    """First node coordinate and node count for cells of ``step`` tiling [lo, hi], centered."""
    extent = hi - lo
    n = int(math.floor(extent / step + 1e-9))
    if n < 1:
        return lo, 0
    return lo + (extent - n * step) / 2 + step / 2, n


def build_graph(hm: Heightmap, trav_model, turn_model, spatial_step: float = 0.18,
                angular_step: float = math.pi / 4, side_px: int = DEFAULT_PATCH_SIDE,
                patch_resolution: float = DEFAULT_PATCH_RES, rotation_cost: float = 0.0) -> PoseGraph:
    """Score every lattice edge with the traversability / turnability classifiers.

    Nodes sit at the centers of ``spatial_step`` cells tiling the region where a
    patch fits at every heading. A forward edge takes the traversability of the
    patch at its origin node facing along the edge; both rotations out of a node
    take the turnability of the patch at that node facing its heading.
    """
    if not math.isclose(angular_step * N_HEADINGS, 2 * math.pi):
        raise ValueError("only 8 headings (45 degree steps) are supported")
    r = patch_radius(side_px, patch_resolution)
    xmin, xmax, ymin, ymax = hm.bounds()
    x0, nx = lattice_axis(xmin + r, xmax - r, spatial_step)
    y0, ny = lattice_axis(ymin + r, ymax - r, spatial_step)
    if nx == 0 or ny == 0:
        raise ValueError("heightmap is smaller than one patch")
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    ix, iy = ix.ravel(), iy.ravel()
    xy = np.stack([x0 + ix * spatial_step, y0 + iy * spatial_step], axis=1)

    nodes, edges = [], []
    present = set()
    trav = {}
    turn = {}
    for k in range(N_HEADINGS):
        theta = k * angular_step
        cx, cy = patch_world_coords(xy, theta, side_px, patch_resolution)
        corners = (slice(None), [0, 0, -1, -1], [0, -1, 0, -1])
        fits = np.all(hm.contains(cx[corners], cy[corners]), axis=1)
        sel = np.flatnonzero(fits)
        if sel.size == 0:
            continue
        patches = extract_patches(hm, xy[sel], theta, side_px, patch_resolution).astype(np.float32)
        pt = np.clip(trav_model.predict_proba(patches), 0.0, 1.0)
        pr = np.clip(turn_model.predict_proba(patches), 0.0, 1.0)
        for n_i, a, b in zip(sel, pt, pr):
            node = (int(ix[n_i]), int(iy[n_i]), k)
            nodes.append(node)
            present.add(node)
            trav[node] = float(a)
            turn[node] = float(b)
    nodes.sort()
    diag = spatial_step * math.sqrt(2.0)
    for node in nodes:
        i, j, k = node
        dx, dy = HEADING_STEPS[k]
        fwd = (i + dx, j + dy, k)
        if fwd in present:
            edges.append(Edge(node, fwd, TRANSLATE, diag if dx and dy else spatial_step, trav[node]))
        for dk in (1, -1):
            nb = (i, j, (k + dk) % N_HEADINGS)
            if nb in present:
                edges.append(Edge(node, nb, ROTATE, rotation_cost, turn[node]))
    return PoseGraph(nodes, edges, spatial_step, angular_step, (x0, y0))


def nearest_node(g: PoseGraph, x: float, y: float, theta: float) -> tuple[int, int, int]:
    """Lattice node closest to a world pose (heading rounded to 45 degrees)."""
    ix = int(round((x - g.origin[0]) / g.spatial_step))
    iy = int(round((y - g.origin[1]) / g.spatial_step))
    k = int(round(theta / g.angular_step)) % N_HEADINGS
    return ix, iy, k


def cells(nodes: Iterable) -> set:
    return {(n[0], n[1]) for n in nodes}
