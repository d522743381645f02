"""Geometric stand-in for a physics simulator.

The robot footprint is sampled on a k x k lattice and a least-squares ground
plane is fit to it. A pose is blocked when the robot would have to climb a
plane steeper than ``max_pitch``, tilt sideways past ``max_roll``, step up
more than ``max_step`` just ahead of the front axle, or scrape its belly on
terrain sticking out more than ``clearance`` above the plane.
"""
from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .heightmap import (
    DEFAULT_PATCH_RES,
    DEFAULT_PATCH_SIDE,
    Heightmap,
    OutOfBoundsError,
    Pose,
    _bilinear,
    extract_patches,
    patch_world_coords,
)

OK = "ok"
BLOCKED = "blocked"

EDGE_REACHED = "edge_reached"
STUCK = "stuck"

TRAVERSABLE = 1
NON_TRAVERSABLE = 0


@dataclass(frozen=True)
class RobotSpec:
    length: float = 0.49
    width: float = 0.50
    body_height: float = 0.29
    clearance: float = 0.08
    max_step: float = 0.06
    max_pitch: float = 0.35
    max_roll: float = 0.35
    speed: float = 0.15
    lattice: int = 7
    # how far past the front axle the step probe looks
    step_lookahead: float = 0.05

    def __post_init__(self):
        for name in ("length", "width", "body_height", "clearance", "max_step", "max_pitch",
                     "max_roll", "speed", "step_lookahead"):
            if not getattr(self, name) > 0:
                raise ValueError(f"robot {name} must be positive")
        if self.max_pitch >= math.pi / 2 or self.max_roll >= math.pi / 2:
            raise ValueError("max_pitch and max_roll must be below pi/2")
        if self.lattice < 3:
            raise ValueError("footprint lattice needs at least 3 points per side")

    @property
    def reach(self) -> float:
        """Radius around the pose that the footprint check samples."""
        fwd = self.length / 2 + self.step_lookahead
        return math.hypot(fwd, self.width / 2)


@dataclass(frozen=True)
class FootprintGeometry:
    pitch: float
    roll: float
    step: float
    residual: float


@functools.lru_cache(maxsize=32)
def _footprint_points(robot: RobotSpec):
    k = robot.lattice
    u = np.linspace(-robot.length / 2, robot.length / 2, k)
    v = np.linspace(-robot.width / 2, robot.width / 2, k)
    uu, vv = np.meshgrid(u, v)
    ahead = robot.length / 2 + np.linspace(0.0, robot.step_lookahead, 3)[1:]
    au, av = np.meshgrid(ahead, v)
    return uu.ravel(), vv.ravel(), au.ravel(), av.ravel()


def _to_world(pose: Pose, u: np.ndarray, v: np.ndarray):
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return pose.x + u * c - v * s, pose.y + u * s + v * c


def footprint_inside(hm: Heightmap, pose: Pose, robot: RobotSpec) -> bool:
    uu, vv, au, av = _footprint_points(robot)
    xs, ys = _to_world(pose, np.concatenate([uu, au]), np.concatenate([vv, av]))
    return bool(np.all(hm.contains(xs, ys)))


def footprint_geometry(hm: Heightmap, pose: Pose, robot: RobotSpec) -> FootprintGeometry:
    uu, vv, au, av = _footprint_points(robot)
    xs, ys = _to_world(pose, np.concatenate([uu, au]), np.concatenate([vv, av]))
    if not np.all(hm.contains(xs, ys)):
        raise OutOfBoundsError("robot footprint outside heightmap")
    z = _bilinear(hm.data, xs / hm.resolution - 0.5, ys / hm.resolution - 0.5)
    n = uu.size
    zf, za = z[:n], z[n:]
    # the lattice is symmetric, so the least-squares plane decouples per axis
    a = zf.mean()
    b = float(np.dot(uu, zf - a) / np.dot(uu, uu))
    c = float(np.dot(vv, zf - a) / np.dot(vv, vv))
    plane_front = a + b * (robot.length / 2) + c * av
    step = float(np.max(za - plane_front))
    residual = float(np.max(zf - (a + b * uu + c * vv)))
    return FootprintGeometry(math.atan(b), math.atan(c), step, residual)


def footprint_check(hm: Heightmap, pose: Pose, robot: RobotSpec = RobotSpec()) -> str:
    g = footprint_geometry(hm, pose, robot)
    blocked = (
        g.pitch > robot.max_pitch  # only uphill blocks
        or abs(g.roll) > robot.max_roll
        or g.step >= robot.max_step
        or g.residual > robot.clearance
    )
    return BLOCKED if blocked else OK


# --------------------------------------------------------------------------- trajectories


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    poses: tuple[Pose, ...]
    terminal: str

    def __post_init__(self):
        if len(self.poses) == 0:
            raise ValueError("trajectory must contain the start pose")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def xy(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.poses])

    def __len__(self) -> int:
        return len(self.poses)


def simulate_straight(hm: Heightmap, start: Pose, robot: RobotSpec = RobotSpec(), dt: float = 0.05,
                      stuck_timeout: float = 2.0, max_time: float = 600.0) -> Trajectory:
    """Drive forward at constant speed without steering until stuck or at the map edge."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not footprint_inside(hm, start, robot):
        raise OutOfBoundsError("start footprint outside heightmap")
    step = robot.speed * dt
    c, s = math.cos(start.theta), math.sin(start.theta)
    poses = [start]
    times = [0.0]
    blocked_for = 0.0
    status = footprint_check(hm, start, robot)
    terminal = STUCK
    i = 0
    while i * dt < max_time:
        pose = poses[-1]
        if status == OK:
            nxt = Pose(pose.x + step * c, pose.y + step * s, start.theta)
            if not footprint_inside(hm, nxt, robot):
                terminal = EDGE_REACHED
                break
            blocked_for = 0.0
            status = footprint_check(hm, nxt, robot)
        else:
            # held in place; the terrain under a stationary robot does not change
            nxt = pose
            blocked_for += dt
        i += 1
        poses.append(nxt)
        times.append(i * dt)
        if blocked_for >= stuck_timeout - 1e-9:
            terminal = STUCK
            break
    return Trajectory(np.array(times), tuple(poses), terminal)


def label_trajectory(traj: Trajectory, T: float = 1.0, d: float = 0.12,
                     align_tol: float = 0.35) -> list[tuple[int, Pose, int]]:
    """Apply the displacement rule; returns (sample index, pose, label) triples.

    A sample is traversable iff the pose T seconds later is more than d meters
    away in a direction within ``align_tol`` of the heading. Samples with no
    future witness are non-traversable when the run ended stuck and dropped
    when it ended at the map edge.
    """
    if not (T > 0 and d > 0):
        raise ValueError("T and d must be positive")
    times = traj.times
    out = []
    n = len(traj)
    for i in range(n):
        target = times[i] + T
        j = int(np.searchsorted(times, target - 1e-9))
        p = traj.poses[i]
        if j < n and abs(times[j] - target) < 1e-6:
            q = traj.poses[j]
            dx, dy = q.x - p.x, q.y - p.y
            dist = math.hypot(dx, dy)
            ok = False
            if dist > d:
                err = math.atan2(dy, dx) - p.theta
                err = abs(math.atan2(math.sin(err), math.cos(err)))
                ok = err <= align_tol
            out.append((i, p, TRAVERSABLE if ok else NON_TRAVERSABLE))
        elif traj.terminal == STUCK:
            out.append((i, p, NON_TRAVERSABLE))
    return out


# --------------------------------------------------------------------------- datasets


@dataclass(frozen=True)
class LabeledSample:
    patch: np.ndarray
    pose: Pose
    label: int


@dataclass
class Dataset:
    patches: np.ndarray  # (N, side, side) float32
    poses: np.ndarray  # (N, 3) float64: x, y, theta
    labels: np.ndarray  # (N,) uint8, 1 = traversable
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.patches = np.asarray(self.patches, dtype=np.float32)
        self.poses = np.asarray(self.poses, dtype=np.float64).reshape(-1, 3)
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if not (len(self.patches) == len(self.poses) == len(self.labels)):
            raise ValueError("dataset arrays differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> LabeledSample:
        x, y, t = self.poses[i]
        return LabeledSample(self.patches[i], Pose(x, y, t), int(self.labels[i]))

    @property
    def side(self) -> int:
        return self.patches.shape[1] if self.patches.ndim == 3 else self.meta.get("patch_side", DEFAULT_PATCH_SIDE)

    @property
    def positive_fraction(self) -> float:
        return float(self.labels.mean()) if len(self) else float("nan")

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.patches[idx], self.poses[idx], self.labels[idx], dict(self.meta))

    @classmethod
    def concat(cls, parts: Sequence["Dataset"], meta: dict | None = None) -> "Dataset":
        return cls(
            np.concatenate([p.patches for p in parts]),
            np.concatenate([p.poses for p in parts]),
            np.concatenate([p.labels for p in parts]),
            dict(meta if meta is not None else parts[0].meta),
        )


@dataclass(frozen=True)
class OracleConfig:
    T: float = 1.0
    d: float = 0.12
    align_tol: float = 0.35
    dt: float = 0.05
    stuck_timeout: float = 2.0
    sample_hz: float = 20.0
    patch_side: int = DEFAULT_PATCH_SIDE
    patch_resolution: float = DEFAULT_PATCH_RES


def random_pose(hm: Heightmap, rng: np.random.Generator, margin: float) -> Pose:
    xmin, xmax, ymin, ymax = hm.bounds()
    if xmax - xmin <= 2 * margin or ymax - ymin <= 2 * margin:
        raise ValueError("heightmap too small for the requested margin")
    x = rng.uniform(xmin + margin, xmax - margin)
    y = rng.uniform(ymin + margin, ymax - margin)
    return Pose(x, y, rng.uniform(0.0, 2 * math.pi))


def _patches_for(hm: Heightmap, poses: list[Pose], cfg: OracleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Patches for the poses whose footprint fits; returns (patches, kept index)."""
    if not poses:
        return np.zeros((0, cfg.patch_side, cfg.patch_side), np.float32), np.zeros(0, np.intp)
    theta = poses[0].theta
    xy = np.array([[p.x, p.y] for p in poses])
    # the sample grid is a rotated square, so its four corners decide containment
    cx, cy = patch_world_coords(xy, theta, cfg.patch_side, cfg.patch_resolution)
    corners = (slice(None), [0, 0, -1, -1], [0, -1, 0, -1])
    keep = np.flatnonzero(np.all(hm.contains(cx[corners], cy[corners]), axis=1))
    if keep.size == 0:
        return np.zeros((0, cfg.patch_side, cfg.patch_side), np.float32), keep
    return extract_patches(hm, xy[keep], theta, cfg.patch_side, cfg.patch_resolution).astype(np.float32), keep


def generate_dataset(terrains: Sequence[Heightmap], robot: RobotSpec = RobotSpec(), n_trajectories: int = 100,
                     seed: int = 0, cfg: OracleConfig = OracleConfig(),
                     terrain_ids: Sequence[str] | None = None) -> Dataset:
    """Simulate straight runs from random poses and collect labeled patches."""
    if not terrains:
        raise ValueError("need at least one terrain")
    ids = list(terrain_ids) if terrain_ids is not None else [f"terrain-{i}" for i in range(len(terrains))]
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    every = max(1, int(round(1.0 / (cfg.sample_hz * cfg.dt))))
    margin = robot.reach + 1e-6
    parts = []
    for _ in range(n_trajectories):
        k = int(rng.integers(len(terrains)))
        hm = terrains[k]
        start = random_pose(hm, rng, margin)
        traj = simulate_straight(hm, start, robot, cfg.dt, cfg.stuck_timeout)
        labeled = [s for s in label_trajectory(traj, cfg.T, cfg.d, cfg.align_tol) if s[0] % every == 0]
        poses = [p for _, p, _ in labeled]
        patches, keep = _patches_for(hm, poses, cfg)
        if keep.size == 0:
            continue
        labels = np.array([labeled[i][2] for i in keep], dtype=np.uint8)
        pose_arr = np.array([[poses[i].x, poses[i].y, poses[i].theta] for i in keep])
        parts.append(Dataset(patches, pose_arr, labels))
    meta = dataset_meta(robot, cfg, ids, seed, n_trajectories)
    if not parts:
        return Dataset(np.zeros((0, cfg.patch_side, cfg.patch_side)), np.zeros((0, 3)), np.zeros(0), meta)
    return Dataset.concat(parts, meta)


def dataset_meta(robot: RobotSpec, cfg: OracleConfig, ids: Sequence[str], seed: int, n: int,
                 task: str = "traversability") -> dict:
    return {
        "task": task,
        "robot": asdict(robot),
        "T": cfg.T,
        "d": cfg.d,
        "align_tol": cfg.align_tol,
        "dt": cfg.dt,
        "stuck_timeout": cfg.stuck_timeout,
        "sample_hz": cfg.sample_hz,
        "patch_side": cfg.patch_side,
        "patch_resolution": cfg.patch_resolution,
        "terrain_ids": list(ids),
        "seed": int(seed),
        "n_trajectories": int(n),
    }
