"""Small end-to-end CLI pipeline shared by the CLI and acceptance tests."""
import json
from pathlib import Path

from traversability.cli import main, sha256_file

SMALL_CONFIG = {
    "seed": 0,
    "terrain": {"n_train": 2, "n_eval": 1, "size_px": 160, "amplitude_min": 0.02, "amplitude_max": 0.2},
    "oracle": {"n_trajectories": 20, "n_turn_samples": 60},
    "train": {"epochs": 1, "n_trees": 3},
    "map": {"stride_px": 10, "n_orientations": 4},
}


def run(*argv) -> int:
    return main([str(a) for a in argv])


def run_pipeline(root: Path, seed: int = 0, config: dict = SMALL_CONFIG) -> dict[str, str]:
    """gen-terrain -> simulate (both tasks) -> train -> eval -> map -> plan.

    Returns {stage: sha256 of its manifest}. Every path handed to the CLI is
    relative to ``root``'s layout, so two roots give comparable manifests.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    cfg = root / "config.json"
    cfg.write_text(json.dumps(config))
    c = ["--config", cfg, "--seed", seed]
    terr, sim, turn = root / "terrain", root / "sim", root / "turn"
    steps = {
        "gen-terrain": ["gen-terrain", "--out", terr, *c],
        "simulate": ["simulate", "--out", sim, "--terrains", terr / "train", *c],
        "simulate-turn": ["simulate", "--out", turn, "--terrains", terr / "train", "--task", "turnability", *c],
        "train-cnn": ["train", "--out", root / "cnn", "--dataset", sim / "dataset.trd", "--kind", "cnn", *c],
        "train-rf": ["train", "--out", root / "rf", "--dataset", sim / "dataset.trd", "--kind", "rf", *c],
        "train-turn": ["train", "--out", root / "turnmodel", "--dataset", turn / "dataset.trd", "--kind", "rf", *c],
        "eval": ["eval", "--out", root / "eval", "--model", root / "cnn" / "model.tvm",
                 "--dataset", sim / "dataset.trd", *c],
        "map": ["map", "--out", root / "map", "--heightmap", terr / "eval" / "terrain_000.png",
                "--model", root / "cnn" / "model.tvm", *c],
        "plan": ["plan", "--out", root / "plan", "--heightmap", terr / "eval" / "terrain_000.png",
                 "--trav-model", root / "cnn" / "model.tvm", "--turn-model", root / "turnmodel" / "model.tvm",
                 "--src", 1.0, 1.0, 0.0, "--dst", 2.2, 2.2, 0.0, "--mode", "pareto", "--export-graph", *c],
    }
    hashes = {}
    for name, argv in steps.items():
        code = run(*argv)
        if code != 0:
            raise RuntimeError(f"stage {name} exited with {code}")
        out = Path(argv[argv.index("--out") + 1])
        hashes[name] = sha256_file(out / "manifest.json")
    return hashes
