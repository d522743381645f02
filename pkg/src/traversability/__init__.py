"""Terrain traversability estimation: synthetic terrain, oracle labels, patch classifiers,
dense maps and probabilistic planning."""
__version__ = "0.1.0"

from .heightmap import Heightmap, OutOfBoundsError, Patch, Pose, extract_patch, load_heightmap, save_heightmap
from .oracle import Dataset, OracleConfig, RobotSpec, footprint_check, generate_dataset, simulate_straight
from .terraingen import TerrainSpec, generate_terrain_suite, synthesize

__all__ = [
    "Heightmap", "OutOfBoundsError", "Patch", "Pose", "extract_patch", "load_heightmap", "save_heightmap",
    "Dataset", "OracleConfig", "RobotSpec", "footprint_check", "generate_dataset", "simulate_straight",
    "TerrainSpec", "generate_terrain_suite", "synthesize",
]
