"""Procedural training terrains.

A terrain is the sum of two simplex-noise components whose weights ramp
linearly from 0 to 1, one along x and the other along y, so each map sweeps
from flat ground at the origin corner to the full mix at the far corner.
Discrete features (steps, holes, bumps, rails) are then applied as pointwise
or stripe-wise functions of the height field.

The four feature functions are our own definitions:

* ``steps``: round heights to the nearest multiple of ``quantum``.
* ``holes``: subtract ``depth`` wherever a secondary noise field exceeds
  ``threshold``.
* ``bumps``: add ``clip(gain * height * cos(2 pi x / spacing) * cos(2 pi y / spacing), 0, height)``.
* ``rails``: subtract ``depth`` inside stripes of ``width`` repeating every
  ``spacing`` meters along the direction ``angle``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .heightmap import Heightmap
from .noise import simplex2_many

FEATURE_KINDS = ("steps", "holes", "bumps", "rails")

_FEATURE_DEFAULTS = {
    "steps": {"quantum": 0.1},
    "holes": {"threshold": 0.6, "depth": 0.2, "period": 1.0, "seed": 0},
    "bumps": {"height": 0.1, "spacing": 1.0, "gain": 2.0},
    "rails": {"width": 0.1, "depth": 0.08, "spacing": 1.5, "angle": 0.0},
}
_LENGTHS = {"quantum", "depth", "period", "height", "spacing", "width", "gain"}


@dataclass(frozen=True)
class NoiseComponent:
    period: float
    amplitude: float
    seed: int

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("noise period must be positive")
        if self.amplitude < 0:
            raise ValueError("noise amplitude must be non-negative")


@dataclass(frozen=True)
class FeatureSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        merged = {**_FEATURE_DEFAULTS[self.kind], **self.params}
        unknown = set(merged) - set(_FEATURE_DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown {self.kind} parameters: {sorted(unknown)}")
        for k, v in merged.items():
            if k in _LENGTHS and not v > 0:
                raise ValueError(f"{self.kind}.{k} must be positive")
        object.__setattr__(self, "params", merged)


@dataclass(frozen=True)
class TerrainSpec:
    component_x: NoiseComponent
    component_y: NoiseComponent
    features: tuple[FeatureSpec, ...] = ()
    size_px: int = 512
    resolution: float = 0.02
    master_seed: int = 0

    def __post_init__(self):
        if self.size_px < 64:
            raise ValueError("size_px must be at least 64")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        object.__setattr__(self, "features", tuple(self.features))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["features"] = [asdict(f) for f in self.features]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TerrainSpec":
        d = dict(d)
        allowed = {"component_x", "component_y", "features", "size_px", "resolution", "master_seed"}
        if set(d) - allowed:
            raise ValueError(f"unknown terrain spec keys: {sorted(set(d) - allowed)}")
        return cls(
            component_x=NoiseComponent(**d.pop("component_x")),
            component_y=NoiseComponent(**d.pop("component_y")),
            features=tuple(FeatureSpec(**f) for f in d.pop("features", [])),
            **d,
        )

    @classmethod
    def from_json(cls, text: str) -> "TerrainSpec":
        return cls.from_dict(json.loads(text))


def _grid(size_px: int, resolution: float) -> tuple[np.ndarray, np.ndarray]:
    k = (np.arange(size_px) + 0.5) * resolution
    return np.meshgrid(k, k)


def synthesize(spec: TerrainSpec) -> Heightmap:
    n = spec.size_px
    x, y = _grid(n, spec.resolution)
    ramp = np.arange(n) / (n - 1)
    wx = ramp[None, :]
    wy = ramp[:, None]
    cx, cy = spec.component_x, spec.component_y
    h = wx * cx.amplitude * simplex2_many(cx.seed, x / cx.period, y / cx.period)
    h = h + wy * cy.amplitude * simplex2_many(cy.seed, x / cy.period, y / cy.period)
    hm = Heightmap(h, spec.resolution)
    for f in spec.features:
        hm = apply_feature(hm, f)
    return hm


def feature_region(hm: Heightmap, f: FeatureSpec) -> np.ndarray | None:
    """Boolean mask of pixels a stripe/threshold feature may change (None = everywhere)."""
    p = f.params
    x, y = _grid_like(hm)
    if f.kind == "holes":
        return simplex2_many(int(p["seed"]), x / p["period"], y / p["period"]) > p["threshold"]
    if f.kind == "rails":
        a = p["angle"]
        along = x * math.cos(a) + y * math.sin(a)
        return np.mod(along, p["spacing"]) < p["width"]
    return None


def _grid_like(hm: Heightmap) -> tuple[np.ndarray, np.ndarray]:
    r = hm.resolution
    xs = (np.arange(hm.width_px) + 0.5) * r
    ys = (np.arange(hm.height_px) + 0.5) * r
    return np.meshgrid(xs, ys)


def apply_feature(hm: Heightmap, f: FeatureSpec) -> Heightmap:
    p = f.params
    h = hm.data
    if f.kind == "steps":
        q = p["quantum"]
        out = np.floor(h / q + 0.5) * q
    elif f.kind in ("holes", "rails"):
        out = np.where(feature_region(hm, f), h - p["depth"], h)
    elif f.kind == "bumps":
        x, y = _grid_like(hm)
        w = 2.0 * math.pi / p["spacing"]
        prof = p["gain"] * p["height"] * np.cos(w * x) * np.cos(w * y)
        out = h + np.clip(prof, 0.0, p["height"])
    else:  # pragma: no cover - guarded by FeatureSpec
        raise ValueError(f.kind)
    return Heightmap(out, hm.resolution)


# --------------------------------------------------------------------------- suite


@dataclass(frozen=True)
class SuiteRanges:
    """Sampler ranges for procedurally generated terrain suites.

    Periods are drawn log-uniformly. Each amplitude starts on the log-log line
    through (period_min, amplitude_min) and (period_max, amplitude_max) and is
    scaled down by a log-uniform factor in [1 / amplitude_jitter, 1], then
    clipped into the amplitude range. Scaling only downward keeps short-period
    components from dominating the suite with impassable roughness.

    A ``gentle_fraction`` of the maps instead pairs long periods (the top third
    of the log range) with the minimum amplitude and always carries at least
    one feature, so the suite contains obstacles standing on nearly level
    ground. Bump gains are drawn log-uniformly from [2, ``bump_gain_max``];
    large gains clip the bumps into flat-topped blocks with steep sides. Rails
    whose width nearly fills their spacing leave narrow raised ridges standing
    between the lowered stripes.
    """

    period_min: float = 0.3
    period_max: float = 10.0
    amplitude_min: float = 0.2
    amplitude_max: float = 3.0
    amplitude_jitter: float = 2.0
    max_features: int = 2
    size_px: int = 512
    resolution: float = 0.02
    gentle_fraction: float = 0.3
    bump_gain_max: float = 30.0

    def __post_init__(self):
        if not 0.0 <= self.gentle_fraction <= 1.0:
            raise ValueError("gentle_fraction must lie in [0, 1]")
        if self.bump_gain_max < 2.0:
            raise ValueError("bump_gain_max must be at least 2")


def _sample_component(rng: np.random.Generator, r: SuiteRanges, gentle: bool = False) -> NoiseComponent:
    span = r.period_max / r.period_min
    if gentle:
        period = r.period_min * span ** rng.uniform(2.0 / 3.0, 1.0)
        return NoiseComponent(period=float(period), amplitude=float(r.amplitude_min),
                              seed=int(rng.integers(2**63)))
    t = rng.uniform()
    period = r.period_min * span ** t
    amp = r.amplitude_min * (r.amplitude_max / r.amplitude_min) ** t
    amp *= r.amplitude_jitter ** rng.uniform(-1.0, 0.0)
    amp = float(np.clip(amp, r.amplitude_min, r.amplitude_max))
    return NoiseComponent(period=float(period), amplitude=amp, seed=int(rng.integers(2**63)))


def _sample_feature(rng: np.random.Generator, r: SuiteRanges) -> FeatureSpec:
    kind = FEATURE_KINDS[int(rng.integers(len(FEATURE_KINDS)))]
    u = rng.uniform
    if kind == "steps":
        params = {"quantum": u(0.02, 0.08)}
    elif kind == "holes":
        params = {"threshold": u(0.5, 0.85), "depth": u(0.1, 0.3), "period": u(0.5, 2.0),
                  "seed": int(rng.integers(2**63))}
    elif kind == "bumps":
        params = {"height": u(0.02, 0.12), "spacing": u(0.6, 2.0),
                  "gain": 2.0 * (r.bump_gain_max / 2.0) ** u()}
    else:
        spacing = u(0.8, 3.0)
        # half the rails are narrow grooves; the rest cut away all but a narrow ridge
        width = u(0.04, 0.15) if u() < 0.5 else spacing - u(0.04, 0.3)
        params = {"width": width, "depth": u(0.03, 0.12), "spacing": spacing, "angle": u(0.0, math.pi)}
    return FeatureSpec(kind, {k: float(v) if k != "seed" else v for k, v in params.items()})


def sample_spec(master_seed: int, split: int, index: int, ranges: SuiteRanges = SuiteRanges()) -> TerrainSpec:
    """Spec for terrain ``index`` of suite ``split`` (0 = train, 1 = eval)."""
    rng = np.random.default_rng([int(master_seed) & 0xFFFFFFFFFFFFFFFF, split, index])
    gentle = bool(rng.uniform() < ranges.gentle_fraction)
    cx = _sample_component(rng, ranges, gentle)
    cy = _sample_component(rng, ranges, gentle)
    lo = min(1, ranges.max_features) if gentle else 0
    n_feat = int(rng.integers(lo, ranges.max_features + 1))
    feats = tuple(_sample_feature(rng, ranges) for _ in range(n_feat))
    return TerrainSpec(cx, cy, feats, ranges.size_px, ranges.resolution, master_seed=int(master_seed))


def suite_specs(n_train: int = 30, n_eval: int = 10, master_seed: int = 0,
                ranges: SuiteRanges = SuiteRanges()) -> tuple[list[TerrainSpec], list[TerrainSpec]]:
    if n_train < 1 or n_eval < 1:
        raise ValueError("suite sizes must be positive")
    train = [sample_spec(master_seed, 0, i, ranges) for i in range(n_train)]
    evals = [sample_spec(master_seed, 1, i, ranges) for i in range(n_eval)]
    return train, evals


def generate_terrain_suite(n_train: int = 30, n_eval: int = 10, master_seed: int = 0,
                           ranges: SuiteRanges = SuiteRanges()) -> tuple[list[Heightmap], list[Heightmap]]:
    train, evals = suite_specs(n_train, n_eval, master_seed, ranges)
    return [synthesize(s) for s in train], [synthesize(s) for s in evals]
