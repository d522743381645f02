"""Pose-graph planning over classifier-scored edges."""
from .graph import (
    N_HEADINGS,
    ROTATE,
    TRANSLATE,
    Edge,
    PoseGraph,
    build_graph,
    cells,
    nearest_node,
)
from .search import (
    ParetoSet,
    PathResult,
    ReachabilityMap,
    UnreachableError,
    edge_cost,
    max_prob_path,
    pareto_paths,
    path_probability,
    reachability,
    shortest_path,
)
from .turnability import can_turn, generate_turn_dataset, train_turnability
from .render import render_paths, render_reachability

__all__ = [
    "N_HEADINGS", "ROTATE", "TRANSLATE", "Edge", "PoseGraph", "build_graph", "cells", "nearest_node",
    "ParetoSet", "PathResult", "ReachabilityMap", "UnreachableError", "edge_cost", "max_prob_path",
    "pareto_paths", "path_probability", "reachability", "shortest_path",
    "can_turn", "generate_turn_dataset", "train_turnability", "render_paths", "render_reachability",
]
