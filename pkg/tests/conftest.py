import logging
from pathlib import Path

import pytest

from heartsway.config import EngineConfig

logging.getLogger("heartsway").setLevel(logging.WARNING)


@pytest.fixture
def config(tmp_path: Path) -> EngineConfig:
    return EngineConfig(data_dir=tmp_path / "data")


def level_shift_values(n: int, movements, baseline=330.0, shift=60.0) -> list[float]:
    """Stretch series with a level shift at each movement index, alternating
    direction — the same signature the simulator emits with zero noise."""
    vals, level, m = [], baseline, 0
    for k in range(n):
        while m < len(movements) and k >= movements[m]:
            level = level + shift if m % 2 == 0 else level - shift
            m += 1
        vals.append(level)
    return vals
