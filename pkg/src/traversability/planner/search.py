"""Path searches over probability-weighted graphs.

Path traversal probability is the product of edge probabilities, so the
most probable path is a shortest path under edge cost ``-log(prob)``.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

from .graph import Edge, PoseGraph

DEFAULT_PROB_FLOOR = 1e-6


class UnreachableError(LookupError):
    """No path with positive probability joins the requested nodes."""


@dataclass(frozen=True)
class PathResult:
    edges: tuple[Edge, ...]
    total_length: float
    traversal_prob: float

    @classmethod
    def from_edges(cls, edges) -> "PathResult":
        edges = tuple(edges)
        return cls(edges, sum(e.length for e in edges), path_probability(edges))

    @property
    def nodes(self) -> list:
        if not self.edges:
            return []
        return [self.edges[0].src] + [e.dst for e in self.edges]

    def to_dict(self) -> dict:
        def key(n):
            return list(n) if isinstance(n, tuple) else n

        return {
            "length": self.total_length,
            "prob": self.traversal_prob,
            "nodes": [key(n) for n in self.nodes],
            "edges": [{"src": key(e.src), "dst": key(e.dst), "kind": e.kind, "length": e.length, "prob": e.prob}
                      for e in self.edges],
        }


@dataclass(frozen=True)
class ParetoSet:
    paths: tuple[PathResult, ...]
    truncated: bool = False
    labels_created: int = 0

    def objectives(self) -> list[tuple[float, float]]:
        return [(p.total_length, p.traversal_prob) for p in self.paths]


def path_probability(edges) -> float:
    """Product of edge probabilities along a contiguous chain; 1 for the empty path."""
    prob = 1.0
    prev = None
    for e in edges:
        if prev is not None and prev.dst != e.src:
            raise ValueError(f"path is not contiguous at {prev.dst} -> {e.src}")
        prob *= e.prob
        prev = e
    return prob


def edge_cost(e: Edge) -> float:
    return -math.log(e.prob)


def _dijkstra(g: PoseGraph, src, key_of, usable, dst=None):
    """Label-correcting search ordered by (primary, secondary, node sequence).

    ``key_of(edge)`` gives the (primary, secondary) increment. Returns the
    settled labels {node: (primary, secondary, edges)}.
    """
    tie = itertools.count()
    heap = [(0.0, 0.0, (src,), next(tie), src, ())]
    settled = {}
    best = {src: (0.0, 0.0, (src,))}
    while heap:
        a, b, seq, _, node, path = heapq.heappop(heap)
        if node in settled:
            continue
        settled[node] = (a, b, path)
        if node == dst:
            break
        for e in g.out_edges(node):
            if not usable(e) or e.dst in settled:
                continue
            da, db = key_of(e)
            cand = (a + da, b + db, seq + (e.dst,))
            cur = best.get(e.dst)
            if cur is None or cand < cur:
                best[e.dst] = cand
                heapq.heappush(heap, (*cand, next(tie), e.dst, path + (e,)))
    return settled


def _check_nodes(g: PoseGraph, *nodes) -> None:
    known = set(g.nodes)
    for n in nodes:
        if n not in known:
            raise KeyError(f"node {n!r} not in graph")


def max_prob_path(g: PoseGraph, src, dst) -> PathResult:
    """Most probable path; ties go to the shorter, then the lexicographically smaller node sequence."""
    _check_nodes(g, src, dst)
    settled = _dijkstra(g, src, lambda e: (edge_cost(e), e.length), lambda e: e.prob > 0.0, dst)
    if dst not in settled:
        raise UnreachableError(f"{dst!r} unreachable from {src!r}")
    return PathResult.from_edges(settled[dst][2])


def shortest_path(g: PoseGraph, src, dst, prob_floor: float = DEFAULT_PROB_FLOOR) -> PathResult:
    """Shortest path over edges with prob >= prob_floor; ties go to the more probable path."""
    _check_nodes(g, src, dst)
    settled = _dijkstra(g, src, lambda e: (e.length, edge_cost(e)),
                        lambda e: e.prob > 0.0 and e.prob >= prob_floor, dst)
    if dst not in settled:
        raise UnreachableError(f"{dst!r} unreachable from {src!r}")
    return PathResult.from_edges(settled[dst][2])


@dataclass
class ReachabilityMap:
    source: object
    values: dict = field(default_factory=dict)  # node -> max traversal probability
    log_values: dict = field(default_factory=dict)  # node -> -log of the above

    def __getitem__(self, node) -> float:
        return self.values.get(node, 0.0)

    def per_cell(self) -> dict:
        """Max over headings for lattice nodes (ix, iy, k)."""
        out = {}
        for node, v in self.values.items():
            c = (node[0], node[1])
            out[c] = max(out.get(c, 0.0), v)
        return out


def reachability(g: PoseGraph, src) -> ReachabilityMap:
    _check_nodes(g, src)
    settled = _dijkstra(g, src, lambda e: (edge_cost(e), e.length), lambda e: e.prob > 0.0)
    rm = ReachabilityMap(src)
    for node, (cost, _, path) in settled.items():
        rm.log_values[node] = cost
        rm.values[node] = path_probability(path)
    return rm


def pareto_paths(g: PoseGraph, src, dst, max_labels: int = 1_000_000) -> ParetoSet:
    """All nondominated (length, probability) trade-offs between two nodes.

    Biobjective label setting: labels leave the queue in lexicographic
    (length, cost) order, so a label is dominated exactly when a label already
    made permanent at its node has a cost no larger. One representative path
    is kept per objective pair.
    """
    _check_nodes(g, src, dst)
    tie = itertools.count()
    # label: (length, cost, tie, node, parent_label, edge)
    root = (0.0, 0.0, next(tie), src, None, None)
    heap = [root]
    best_cost = {}
    found = []
    created = 1
    permanent = 0
    truncated = False
    while heap:
        lab = heapq.heappop(heap)
        length, cost, _, node, _, _ = lab
        if cost >= best_cost.get(node, math.inf) or cost >= best_cost.get(dst, math.inf):
            continue
        best_cost[node] = cost
        permanent += 1
        if node == dst:
            found.append(lab)
            continue
        if permanent >= max_labels:
            truncated = True
            break
        for e in g.out_edges(node):
            if e.prob <= 0.0:
                continue
            nc = cost + edge_cost(e)
            if nc >= best_cost.get(e.dst, math.inf) or nc >= best_cost.get(dst, math.inf):
                continue
            heapq.heappush(heap, (length + e.length, nc, next(tie), e.dst, lab, e))
            created += 1
    if not found:
        if truncated:
            return ParetoSet((), True, created)
        raise UnreachableError(f"{dst!r} unreachable from {src!r}")
    paths = []
    for lab in found:
        edges = []
        cur = lab
        while cur[5] is not None:
            edges.append(cur[5])
            cur = cur[4]
        paths.append(PathResult.from_edges(reversed(edges)))
    return ParetoSet(tuple(paths), truncated, created)
