"""Random small graphs and exhaustive path enumeration for planner checks."""
import math

import numpy as np

from traversability.planner import ROTATE, TRANSLATE, Edge, PoseGraph
from traversability.planner.search import path_probability


def random_graph(rng: np.random.Generator, n_nodes: int, mean_degree: float = 2.0,
                 p_zero: float = 0.05, p_tiny: float = 0.05) -> PoseGraph:
    """Directed graph on integer nodes with integer-ish lengths and random probabilities.

    A small fraction of edges get probability exactly 0 or below the default
    shortest-path floor, and some lengths are 0, so the degenerate cases get
    exercised.
    """
    edges = []
    seen = set()
    n_edges = int(round(mean_degree * n_nodes))
    for _ in range(n_edges):
        a, b = (int(v) for v in rng.integers(n_nodes, size=2))
        if a == b or (a, b) in seen:
            continue
        seen.add((a, b))
        u = rng.random()
        if u < p_zero:
            prob = 0.0
        elif u < p_zero + p_tiny:
            prob = float(rng.uniform(0, 1e-6))
        else:
            prob = float(rng.uniform(0.05, 1.0))
        length = float(rng.integers(0, 4)) * 0.18
        edges.append(Edge(a, b, ROTATE if length == 0 else TRANSLATE, length, prob))
    return PoseGraph(list(range(n_nodes)), edges)


def simple_paths(g: PoseGraph, src, dst, limit: int = 2_000_000):
    """Every simple path from src to dst as a tuple of edges (src == dst gives the empty path)."""
    if src == dst:
        yield ()
        return
    count = 0
    stack = [(src, (), frozenset([src]))]
    while stack:
        node, path, visited = stack.pop()
        for e in g.out_edges(node):
            if e.dst in visited:
                continue
            p = path + (e,)
            if e.dst == dst:
                count += 1
                if count > limit:
                    raise RuntimeError("too many simple paths for brute force")
                yield p
            else:
                stack.append((e.dst, p, visited | {e.dst}))


def objectives(path) -> tuple[float, float]:
    return sum(e.length for e in path), path_probability(path)


def brute_max_prob(g: PoseGraph, src, dst):
    """(prob, length) of the best positive-probability path, or None."""
    best = None
    for p in simple_paths(g, src, dst):
        length, prob = objectives(p)
        if prob <= 0:
            continue
        if best is None or prob > best[0] or (prob == best[0] and length < best[1]):
            best = (prob, length)
    return best


def brute_shortest(g: PoseGraph, src, dst, floor: float = 1e-6):
    """(length, prob) of the shortest path over edges with prob >= floor, or None."""
    best = None
    for p in simple_paths(g, src, dst):
        if any(e.prob <= 0 or e.prob < floor for e in p):
            continue
        length, prob = objectives(p)
        if best is None or length < best[0] or (length == best[0] and prob > best[1]):
            best = (length, prob)
    return best


def brute_pareto(g: PoseGraph, src, dst) -> list[tuple[float, float]]:
    """Nondominated (length, prob) pairs over positive-probability simple paths, sorted by length."""
    pts = {objectives(p) for p in simple_paths(g, src, dst)}
    pts = [q for q in pts if q[1] > 0]
    front = [q for q in pts
             if not any(o[0] <= q[0] and o[1] >= q[1] and o != q for o in pts)]
    return sorted(front)


def close(a: float, b: float, rel: float = 1e-12) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=0.0) or a == b
