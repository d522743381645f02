"""Run configuration: one JSON document with optional sections per pipeline stage.

Resolution order is command-line flags, then the config file, then the
defaults below. Unknown sections or keys are rejected.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .classifier import TrainConfig
from .oracle import OracleConfig, RobotSpec
from .terraingen import SuiteRanges


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range configuration."""


@dataclass(frozen=True)
class TerrainSection:
    n_train: int = 30
    n_eval: int = 10
    size_px: int = 512
    resolution: float = 0.02
    period_min: float = 0.3
    period_max: float = 10.0
    amplitude_min: float = 0.2
    amplitude_max: float = 3.0
    amplitude_jitter: float = 2.0
    max_features: int = 2
    gentle_fraction: float = 0.3
    bump_gain_max: float = 30.0

    def ranges(self) -> SuiteRanges:
        return SuiteRanges(self.period_min, self.period_max, self.amplitude_min, self.amplitude_max,
                           self.amplitude_jitter, self.max_features, self.size_px, self.resolution,
                           self.gentle_fraction, self.bump_gain_max)


@dataclass(frozen=True)
class OracleSection(OracleConfig):
    n_trajectories: int = 100
    # used by the turnability task: number of random poses to label
    n_turn_samples: int = 2000


@dataclass(frozen=True)
class TrainSection:
    epochs: int = 100
    batch_size: int = 128
    rho: float = 0.95
    epsilon: float = 1e-6
    learning_rate: float = 1.0
    validation_fraction: float = 0.1
    n_trees: int = 10
    min_leaf: int = 5
    mirror: bool = True

    def cnn(self, seed: int) -> TrainConfig:
        return TrainConfig(self.epochs, self.batch_size, self.rho, self.epsilon, self.learning_rate,
                           self.validation_fraction, seed, self.mirror)


@dataclass(frozen=True)
class MapSection:
    stride_px: int = 5
    n_orientations: int = 32
    batch: int = 1024


@dataclass(frozen=True)
class PlanSection:
    spatial_step: float = 0.18
    angular_step: float = math.pi / 4
    rotation_cost: float = 0.0
    prob_floor: float = 1e-6
    max_labels: int = 1_000_000


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    terrain: TerrainSection = field(default_factory=TerrainSection)
    robot: RobotSpec = field(default_factory=RobotSpec)
    oracle: OracleSection = field(default_factory=OracleSection)
    train: TrainSection = field(default_factory=TrainSection)
    map: MapSection = field(default_factory=MapSection)
    plan: PlanSection = field(default_factory=PlanSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def trainer(self) -> TrainConfig:
        try:
            return self.train.cnn(self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """Apply ``{"section.key": value}`` or ``{"seed": value}`` overrides (None values skipped)."""
        cfg = self
        for dotted, value in overrides.items():
            if value is None:
                continue
            if dotted == "seed":
                cfg = replace(cfg, seed=_coerce(int, value, "seed"))
                continue
            section, _, key = dotted.partition(".")
            sec = getattr(cfg, section)
            cfg = replace(cfg, **{section: _update(sec, {key: value}, section)})
        return cfg


def _coerce(kind, value, where: str):
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is int and isinstance(value, float) and value.is_integer():
        return int(value)
    if kind is bool and isinstance(value, bool):
        return value
    raise ConfigError(f"{where}: expected {kind.__name__}, got {value!r}")


def _update(obj, values: dict, section: str):
    types = {f.name: f.type for f in fields(obj)}
    clean = {}
    for key, value in values.items():
        if key not in types:
            raise ConfigError(f"unknown key {section}.{key}")
        t = types[key]
        kind = {"int": int, "float": float, "bool": bool}.get(t if isinstance(t, str) else t.__name__)
        clean[key] = _coerce(kind, value, f"{section}.{key}") if kind else value
    try:
        return replace(obj, **clean)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


_SECTIONS = ("terrain", "robot", "oracle", "train", "map", "plan")


def _validate(cfg: RunConfig) -> RunConfig:
    checks = [
        (cfg.terrain.n_train >= 1 and cfg.terrain.n_eval >= 1, "terrain counts must be positive"),
        (cfg.terrain.size_px >= 64, "terrain.size_px must be at least 64"),
        (cfg.terrain.resolution > 0, "terrain.resolution must be positive"),
        (0 <= cfg.terrain.gentle_fraction <= 1, "terrain.gentle_fraction must lie in [0, 1]"),
        (cfg.terrain.bump_gain_max >= 2, "terrain.bump_gain_max must be at least 2"),
        (cfg.oracle.n_trajectories >= 0, "oracle.n_trajectories must be non-negative"),
        (cfg.oracle.patch_side >= 2 and cfg.oracle.patch_resolution > 0, "bad patch geometry"),
        (cfg.train.epochs >= 1, "train.epochs must be at least 1"),
        (cfg.train.batch_size >= 1, "train.batch_size must be positive"),
        (0 <= cfg.train.validation_fraction < 1, "train.validation_fraction must lie in [0, 1)"),
        (cfg.train.n_trees >= 1 and cfg.train.min_leaf >= 1, "forest parameters must be positive"),
        (cfg.map.stride_px >= 1 and cfg.map.n_orientations >= 1, "map stride and orientations must be positive"),
        (cfg.plan.spatial_step > 0, "plan.spatial_step must be positive"),
        (cfg.plan.rotation_cost >= 0, "plan.rotation_cost must be non-negative"),
        (cfg.plan.max_labels >= 1, "plan.max_labels must be positive"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)
    return cfg


def config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    cfg = RunConfig()
    for key, value in d.items():
        if key == "seed":
            cfg = replace(cfg, seed=_coerce(int, value, "seed"))
        elif key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"section {key} must be an object")
            cfg = replace(cfg, **{key: _update(getattr(cfg, key), value, key)})
        else:
            raise ConfigError(f"unknown section {key!r}")
    return _validate(cfg)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file at ``path`` (if any), then ``overrides``."""
    base = {}
    if path is not None:
        try:
            base = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = config_from_dict(base)
    return _validate(cfg.with_overrides(overrides or {}))
