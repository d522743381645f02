"""Command-line front end: ``trav <subcommand> ...``.

Every subcommand writes its artifacts plus ``manifest.json`` into ``--out``
(a directory). Settings resolve as flags > ``--config`` file > defaults.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 unreachable or
empty result.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .classifier import baseline_train, cnn_train, evaluate, load_model, model_id, rf_train, save_model
from .classifier.train import validation_split
from .config import ConfigError, RunConfig, load_config
from .dataset_io import load_dataset, save_dataset
from .heightmap import load_heightmap, save_heightmap
from .oracle import generate_dataset
from .planner import (
    UnreachableError,
    build_graph,
    generate_turn_dataset,
    max_prob_path,
    nearest_node,
    pareto_paths,
    reachability,
    render_paths,
    render_reachability,
    shortest_path,
)
from .terraingen import suite_specs, synthesize
from .travmap import build_oriented_map, min_over_orientations, render_overlay

log = logging.getLogger("trav")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_EMPTY = 4

HEIGHTMAP_SUFFIXES = (".png", ".asc", ".txt")


class InputError(OSError):
    """An input file is missing or malformed."""


class EmptyResultError(RuntimeError):
    """The command produced nothing usable."""


# --------------------------------------------------------------------------- helpers


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _entry(path: Path, out_dir: Path) -> dict:
    return {"path": Path(os.path.relpath(path, out_dir)).as_posix(), "sha256": sha256_file(path)}


def write_manifest(out_dir: Path, command: str, cfg: RunConfig, inputs, outputs, extra: dict | None = None) -> Path:
    """Deterministic record of a run: no timestamps, paths relative to ``out_dir``."""
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "inputs": [_entry(Path(p), out_dir) for p in inputs],
        "outputs": [_entry(Path(p), out_dir) for p in outputs],
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _read(loader, path, what: str):
    try:
        return loader(path)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read {what} {path}: {exc}") from exc


def expand_heightmaps(paths) -> list[Path]:
    """Files as given; directories expand to their heightmap files in sorted order."""
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in HEIGHTMAP_SUFFIXES))
        elif p.exists():
            out.append(p)
        else:
            raise InputError(f"no such heightmap {p}")
    if not out:
        raise InputError("no heightmap files found")
    return out


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


# --------------------------------------------------------------------------- subcommands


def cmd_gen_terrain(args, cfg: RunConfig) -> int:
    out = _out_dir(args.out)
    t = cfg.terrain
    outputs = []
    for split, specs in zip(("train", "eval"), suite_specs(t.n_train, t.n_eval, cfg.seed, t.ranges())):
        d = out / split
        d.mkdir(exist_ok=True)
        for i, spec in enumerate(specs):
            stem = d / f"terrain_{i:03d}"
            spec_path = stem.with_suffix(".spec.json")
            spec_path.write_text(spec.to_json() + "\n")
            map_path = stem.with_suffix(".png")
            save_heightmap(synthesize(spec), map_path, format="png16")
            outputs += [map_path, Path(f"{map_path}.json"), spec_path]
    inputs = [args.config] if args.config else []
    write_manifest(out, "gen-terrain", cfg, inputs, outputs)
    log.info("wrote %d train and %d eval terrains to %s", t.n_train, t.n_eval, out)
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    out = _out_dir(args.out)
    files = expand_heightmaps(args.terrains)
    terrains = [_read(load_heightmap, f, "heightmap") for f in files]
    ids = [Path(os.path.relpath(f, out)).as_posix() for f in files]
    o = cfg.oracle
    if args.task == "turnability":
        ds = generate_turn_dataset(terrains, cfg.robot, o.n_turn_samples, cfg.seed, o, ids)
    else:
        ds = generate_dataset(terrains, cfg.robot, o.n_trajectories, cfg.seed, o, ids)
    if len(ds) == 0:
        raise EmptyResultError("simulation produced no labeled samples")
    path = out / "dataset.trd"
    save_dataset(ds, path)
    write_manifest(out, "simulate", cfg, files + ([args.config] if args.config else []), [path],
                   {"task": args.task, "n_samples": len(ds), "positive_fraction": ds.positive_fraction})
    log.info("%d samples, %.3f traversable", len(ds), ds.positive_fraction)
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    out = _out_dir(args.out)
    ds = _read(load_dataset, args.dataset, "dataset")
    if len(ds) == 0:
        raise EmptyResultError("dataset is empty")
    tc = cfg.trainer()
    train_part, val_part = validation_split(ds, tc)
    if args.kind == "baseline":
        model = baseline_train(train_part)
    elif args.kind == "rf":
        model = rf_train(train_part, n_trees=cfg.train.n_trees, seed=cfg.seed, min_leaf=cfg.train.min_leaf)
    else:
        model = cnn_train(ds, tc)
    scored = val_part if len(val_part) else train_part
    report = evaluate(model, scored)
    model_path = out / "model.tvm"
    save_model(model, model_path)
    report_path = _write_json(out / "report.json", {"split": "validation" if len(val_part) else "train",
                                                     **report.to_dict()})
    write_manifest(out, "train", cfg, [args.dataset] + ([args.config] if args.config else []),
                   [model_path, report_path], {"kind": args.kind, "model_id": model_id(model)})
    print(report.table())
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    out = _out_dir(args.out)
    model = _read(load_model, args.model, "model")
    ds = _read(load_dataset, args.dataset, "dataset")
    if len(ds) == 0:
        raise EmptyResultError("dataset is empty")
    report = evaluate(model, ds)
    report_path = _write_json(out / "report.json", report.to_dict())
    write_manifest(out, "eval", cfg, [args.model, args.dataset], [report_path], {"model_id": model_id(model)})
    print(report.table())
    return EXIT_OK


def cmd_map(args, cfg: RunConfig) -> int:
    out = _out_dir(args.out)
    hm = _read(load_heightmap, args.heightmap, "heightmap")
    model = _read(load_model, args.model, "model")
    m = build_oriented_map(hm, model, cfg.map.stride_px, cfg.map.n_orientations, cfg.oracle.patch_side,
                           cfg.oracle.patch_resolution, cfg.map.batch, map_id=sha256_file(args.heightmap)[:16],
                           model_id=model_id(model))
    if m.stats["patches_evaluated"] == 0:
        raise EmptyResultError("no grid cell fits a whole patch; the map is too small")
    map_path = out / "travmap.tom"
    map_path.write_bytes(m.to_bytes())
    png = out / "overlay.png"
    render_overlay(hm, min_over_orientations(m), png, cfg.map.stride_px)
    # wall-clock figures vary run to run, so they stay out of the manifest
    _write_json(out / "throughput.json", m.stats)
    write_manifest(out, "map", cfg, [args.heightmap, args.model], [map_path, png],
                   {"patches_evaluated": m.stats["patches_evaluated"]})
    log.info("%d patches in %.2f s (%.0f/s)", m.stats["patches_evaluated"], m.stats["wall_seconds"],
             m.stats["patches_per_second"])
    return EXIT_OK


def _node(g, pose, label: str):
    x, y, theta = pose
    node = nearest_node(g, x, y, theta)
    if node not in g:
        raise ConfigError(f"{label} pose ({x}, {y}) is outside the planning lattice")
    return node


def cmd_plan(args, cfg: RunConfig) -> int:
    out = _out_dir(args.out)
    hm = _read(load_heightmap, args.heightmap, "heightmap")
    trav = _read(load_model, args.trav_model, "traversability model")
    turn = _read(load_model, args.turn_model, "turnability model")
    p = cfg.plan
    try:
        g = build_graph(hm, trav, turn, p.spatial_step, p.angular_step, cfg.oracle.patch_side,
                        cfg.oracle.patch_resolution, p.rotation_cost)
    except ValueError as exc:
        raise EmptyResultError(str(exc)) from exc
    src = _node(g, args.src, "source")
    outputs = []
    extra = {"mode": args.mode, "source": list(src)}
    if args.mode == "reach":
        rm = reachability(g, src)
        cells = rm.per_cell()
        res = {"source": list(src),
               "nodes": [{"node": list(n), "prob": v} for n, v in sorted(rm.values.items())],
               "cells": [{"cell": list(c), "prob": v} for c, v in sorted(cells.items())]}
        outputs.append(_write_json(out / "reach.json", res))
        render_reachability(hm, g, cells, out / "reach.png")
        outputs.append(out / "reach.png")
    else:
        if args.dst is None:
            raise ConfigError(f"--dst is required for mode {args.mode}")
        dst = _node(g, args.dst, "destination")
        extra["destination"] = list(dst)
        if args.mode == "maxprob":
            paths = [max_prob_path(g, src, dst)]
            res = paths[0].to_dict()
        elif args.mode == "shortest":
            paths = [shortest_path(g, src, dst, p.prob_floor)]
            res = paths[0].to_dict()
        else:
            front = pareto_paths(g, src, dst, p.max_labels)
            if not front.paths:
                raise EmptyResultError("label budget exhausted before any path was found")
            paths = list(front.paths)
            res = {"truncated": front.truncated, "labels_created": front.labels_created,
                   "paths": [q.to_dict() for q in paths]}
        outputs.append(_write_json(out / "path.json", res))
        render_paths(hm, g, paths, out / "path.png")
        outputs.append(out / "path.png")
    if args.export_graph:
        g_path = out / "graph.json"
        g_path.write_text(g.to_json() + "\n")
        outputs.append(g_path)
    write_manifest(out, "plan", cfg, [args.heightmap, args.trav_model, args.turn_model], outputs, extra)
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="output directory (created if missing)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config file)")
    p.add_argument("--config", help="JSON run config; unknown keys are rejected")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trav",
        description="Terrain traversability pipeline: synthetic terrain, oracle labels, patch classifiers, "
                    "dense maps and probabilistic planning.",
        epilog="Settings resolve as flags > --config file > defaults. Exit codes: 0 success, 2 configuration "
               "error, 3 I/O error, 4 unreachable or empty result.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen-terrain", help="synthesize the train/eval terrain suite",
                       description="Write train/ and eval/ heightmaps (png16 + sidecar) and their JSON specs.")
    _common(p)
    p.add_argument("--n-train", type=int, help="number of training terrains (terrain.n_train)")
    p.add_argument("--n-eval", type=int, help="number of evaluation terrains (terrain.n_eval)")
    p.add_argument("--size-px", type=int, help="terrain side in pixels (terrain.size_px)")
    p.set_defaults(func=cmd_gen_terrain, overrides=lambda a: {
        "terrain.n_train": a.n_train, "terrain.n_eval": a.n_eval, "terrain.size_px": a.size_px})

    p = sub.add_parser("simulate", help="label patches with the geometric oracle",
                       description="Simulate straight runs (or in-place turns) and write dataset.trd.")
    _common(p)
    p.add_argument("--terrains", nargs="+", required=True, help="heightmap files or directories")
    p.add_argument("--task", choices=("traversability", "turnability"), default="traversability")
    p.add_argument("--n-trajectories", type=int, help="straight runs to simulate (oracle.n_trajectories)")
    p.add_argument("--n-samples", type=int, help="poses to label for turnability (oracle.n_turn_samples)")
    p.set_defaults(func=cmd_simulate, overrides=lambda a: {
        "oracle.n_trajectories": a.n_trajectories, "oracle.n_turn_samples": a.n_samples})

    p = sub.add_parser("train", help="fit a classifier and report on the validation split",
                       description="Write model.tvm and report.json (validation-split metrics).")
    _common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=("baseline", "rf", "cnn"), required=True)
    p.add_argument("--epochs", type=int, help="CNN epochs (train.epochs)")
    p.set_defaults(func=cmd_train, overrides=lambda a: {"train.epochs": a.epochs})

    p = sub.add_parser("eval", help="score a model on a dataset",
                       description="Write report.json and print a table with ACC and AUC.")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_eval, overrides=lambda a: {})

    p = sub.add_parser("map", help="dense oriented traversability map and overlay",
                       description="Write travmap.tom, overlay.png and throughput.json.")
    _common(p)
    p.add_argument("--heightmap", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--stride-px", type=int, help="grid stride in pixels (map.stride_px)")
    p.add_argument("--orientations", type=int, help="number of headings (map.n_orientations)")
    p.set_defaults(func=cmd_map, overrides=lambda a: {
        "map.stride_px": a.stride_px, "map.n_orientations": a.orientations})

    p = sub.add_parser("plan", help="plan over the pose graph",
                       description="Build the pose graph from both classifiers, then search. Poses are "
                                   "world x y (m) and heading (rad), snapped to the nearest lattice node.")
    _common(p)
    p.add_argument("--heightmap", required=True)
    p.add_argument("--trav-model", required=True)
    p.add_argument("--turn-model", required=True)
    p.add_argument("--src", nargs=3, type=float, metavar=("X", "Y", "THETA"), required=True)
    p.add_argument("--dst", nargs=3, type=float, metavar=("X", "Y", "THETA"))
    p.add_argument("--mode", choices=("maxprob", "shortest", "pareto", "reach"), default="maxprob")
    p.add_argument("--export-graph", action="store_true", help="also write graph.json")
    p.set_defaults(func=cmd_plan, overrides=lambda a: {})
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"seed": args.seed, **args.overrides(args)})
        log.info("resolved config:\n%s", cfg.to_json())
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"trav: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnreachableError, EmptyResultError) as exc:
        print(f"trav: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except OSError as exc:
        print(f"trav: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
