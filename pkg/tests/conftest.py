import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from traversability.heightmap import Heightmap

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance results, filled by tests/test_acceptance.py and echoed in the terminal summary
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {k}. {name}: {detail}")


def flat_map(size: int = 200, res: float = 0.02, z: float = 0.0) -> Heightmap:
    return Heightmap(np.full((size, size), z), res)


def ramp_map(angle: float, size: int = 200, res: float = 0.02, axis: str = "x") -> Heightmap:
    """Plane rising along +x (or +y) at the given slope angle."""
    k = (np.arange(size) + 0.5) * res * math.tan(angle)
    data = np.broadcast_to(k[None, :] if axis == "x" else k[:, None], (size, size))
    return Heightmap(np.array(data), res)


def wall_map(x_wall: float, height: float, size: int = 200, res: float = 0.02) -> Heightmap:
    """Flat floor with a raised block for x >= x_wall."""
    x = (np.arange(size) + 0.5) * res
    data = np.where(x[None, :] >= x_wall, height, 0.0) * np.ones((size, 1))
    return Heightmap(data, res)


@pytest.fixture
def flat():
    return flat_map()
