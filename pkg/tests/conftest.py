"""公共 fixture"""
from pathlib import Path

import pytest

from formats import load_schedule

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def golden_path() -> Path:
    return DATA_DIR / "golden_tcs_2_4.json"


@pytest.fixture
def golden_schedule(golden_path):
    return load_schedule(golden_path)


@pytest.fixture
def golden_edges() -> set[tuple[int, int]]:
    """深度 4 二叉树嵌入格点后的 14 条边"""
    return {
        (1, 8), (7, 8), (8, 15), (11, 18), (13, 14), (14, 15), (14, 21),
        (15, 16), (16, 17), (17, 18), (17, 24), (18, 19), (24, 25), (24, 31),
    }
