import sys
from pathlib import Path

import numpy as np
import pytest

# make oracles.py importable regardless of how pytest was invoked
sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: long validation runs (minutes); kept in the default run")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
