"""Shared fixtures: the 12-activity worked example and its PSPLIB file."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rcpsp_tabu import make_instance

DATA_DIR = Path(__file__).parent / "data"

# Worked example: 10 real activities, 2 resources of capacity 6.
EXAMPLE_DURATIONS = [0, 4, 3, 5, 5, 3, 2, 4, 2, 3, 4, 0]
EXAMPLE_CAPACITIES = [6, 6]
EXAMPLE_DEMANDS = [
    [0, 0], [5, 3], [2, 1], [3, 2], [2, 3], [3, 4],
    [4, 1], [2, 2], [4, 5], [1, 2], [2, 2], [0, 0],
]
EXAMPLE_SUCCESSORS = [
    [1, 2], [3, 6], [4, 5], [5, 10], [7], [8, 9],
    [7, 9], [8, 10], [11], [11], [11], [],
]
#: Feasible reference order evaluating to makespan 22 under the time-indexed
#: scheme, with start times {0,0,4,4,7,12,9,12,20,15,16,22}.
EXAMPLE_ORDER = np.array([0, 1, 2, 3, 4, 6, 5, 7, 9, 10, 8, 11], dtype=np.int32)
EXAMPLE_CMAX = 22
EXAMPLE_STARTS = [0, 0, 4, 4, 7, 12, 9, 12, 20, 15, 16, 22]
EXAMPLE_CPM = 16
EXAMPLE_OPTIMUM = 22   # exhaustive branch-and-bound; see test_cooperation


@pytest.fixture(scope="session")
def example12():
    return make_instance("example12", EXAMPLE_DURATIONS, EXAMPLE_CAPACITIES,
                         EXAMPLE_DEMANDS, EXAMPLE_SUCCESSORS)


@pytest.fixture(scope="session")
def example12_path() -> Path:
    return DATA_DIR / "example12.sm"


@pytest.fixture(scope="session")
def dummy2_path() -> Path:
    return DATA_DIR / "dummy2.sm"


@pytest.fixture(scope="session")
def dummy2():
    return make_instance("dummy2", [0, 0], [1], [[0], [0]], [[1], []])
