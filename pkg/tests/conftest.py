"""
Shared fixtures.
"""
import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from hypersphere.linalg import make_rng


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test instances."""
    return make_rng(1234)


@pytest.fixture
def out_dir(tmp_path):
    """Per-test output directory."""
    path = tmp_path / "out"
    path.mkdir()
    return path

