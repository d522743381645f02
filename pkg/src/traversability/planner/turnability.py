"""Turn-in-place labels and classifiers."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..heightmap import Heightmap, Pose, extract_patches, patch_fits
from ..oracle import (
    NON_TRAVERSABLE,
    OK,
    TRAVERSABLE,
    Dataset,
    OracleConfig,
    RobotSpec,
    dataset_meta,
    footprint_check,
    footprint_inside,
    random_pose,
)

TURN_ANGLE = math.pi / 4


def can_turn(hm: Heightmap, pose: Pose, robot: RobotSpec = RobotSpec(), increments: int = 5,
             angle: float = TURN_ANGLE) -> bool:
    """True if the footprint stays clear while sweeping 45 degrees one way or the other."""
    for sign in (1.0, -1.0):
        ok = True
        for j in range(increments + 1):
            p = Pose(pose.x, pose.y, pose.theta + sign * angle * j / increments)
            if not footprint_inside(hm, p, robot) or footprint_check(hm, p, robot) != OK:
                ok = False
                break
        if ok:
            return True
    return False


def generate_turn_dataset(terrains: Sequence[Heightmap], robot: RobotSpec = RobotSpec(), n_samples: int = 1000,
                          seed: int = 0, cfg: OracleConfig = OracleConfig(),
                          terrain_ids: Sequence[str] | None = None) -> Dataset:
    """Random poses labeled by the turn sweep; patches face the starting heading."""
    if not terrains:
        raise ValueError("need at least one terrain")
    ids = list(terrain_ids) if terrain_ids is not None else [f"terrain-{i}" for i in range(len(terrains))]
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    margin = robot.reach + 1e-6
    patches, poses, labels = [], [], []
    while len(labels) < n_samples:
        hm = terrains[int(rng.integers(len(terrains)))]
        pose = random_pose(hm, rng, margin)
        if not patch_fits(hm, pose, cfg.patch_side, cfg.patch_resolution):
            continue
        lab = TRAVERSABLE if can_turn(hm, pose, robot) else NON_TRAVERSABLE
        patch = extract_patches(hm, np.array([[pose.x, pose.y]]), pose.theta, cfg.patch_side, cfg.patch_resolution)
        patches.append(patch[0].astype(np.float32))
        poses.append((pose.x, pose.y, pose.theta))
        labels.append(lab)
    meta = dataset_meta(robot, cfg, ids, seed, n_samples, task="turnability")
    return Dataset(np.array(patches).reshape(-1, cfg.patch_side, cfg.patch_side), np.array(poses).reshape(-1, 3),
                   np.array(labels), meta)


def train_turnability(terrains: Sequence[Heightmap], robot: RobotSpec = RobotSpec(), n_samples: int = 2000,
                      seed: int = 0, kind: str = "rf", cfg: OracleConfig = OracleConfig(), train_config=None):
    """Label random poses by turn sweep and fit a classifier of the given kind."""
    from ..classifier import TrainConfig, baseline_train, cnn_train, rf_train

    ds = generate_turn_dataset(terrains, robot, n_samples, seed, cfg)
    if kind == "baseline":
        return baseline_train(ds), ds
    if kind == "rf":
        return rf_train(ds, seed=seed), ds
    if kind == "cnn":
        return cnn_train(ds, train_config or TrainConfig(seed=seed)), ds
    raise ValueError(f"unknown classifier kind {kind!r}")
