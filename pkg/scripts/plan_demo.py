"""Pareto paths and a reachability map on one synthetic terrain.

Without model files, small HOG+RF traversability and turnability models are
trained on the fly from a handful of terrains.

    python scripts/plan_demo.py --out results/plan
"""
import argparse
import json
from pathlib import Path

from traversability import generate_dataset
from traversability.classifier import load_model, rf_train
from traversability.planner import (
    build_graph,
    max_prob_path,
    pareto_paths,
    reachability,
    render_paths,
    render_reachability,
    shortest_path,
    train_turnability,
)
from traversability.terraingen import SuiteRanges, generate_terrain_suite


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--trav-model", type=Path)
    ap.add_argument("--turn-model", type=Path)
    ap.add_argument("--size-px", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    train_maps, (hm,) = generate_terrain_suite(4, 1, master_seed=args.seed,
                                               ranges=SuiteRanges(size_px=args.size_px))
    if args.trav_model:
        trav = load_model(args.trav_model)
    else:
        trav = rf_train(generate_dataset(train_maps, n_trajectories=60, seed=args.seed), seed=args.seed)
    if args.turn_model:
        turn = load_model(args.turn_model)
    else:
        turn, _ = train_turnability(train_maps, n_samples=600, seed=args.seed)

    g = build_graph(hm, trav, turn)
    src, dst = min(g.nodes), max(n for n in g.nodes if n[2] == 0)
    front = pareto_paths(g, src, dst)
    best = max_prob_path(g, src, dst)
    short = shortest_path(g, src, dst)
    render_paths(hm, g, list(front.paths), args.out / "pareto.png")
    rm = reachability(g, src)
    render_reachability(hm, g, rm.per_cell(), args.out / "reach.png")
    summary = {
        "nodes": len(g.nodes), "edges": len(g.edges), "source": src, "destination": dst,
        "frontier": front.objectives(), "truncated": front.truncated,
        "max_prob": [best.total_length, best.traversal_prob],
        "shortest": [short.total_length, short.traversal_prob],
        "reachable_cells": sum(v > 0 for v in rm.per_cell().values()),
    }
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
