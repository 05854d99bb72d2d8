import numpy as np
import pytest

from jumppath import Path


@pytest.fixture
def hand_path():
    """Three events in d=1: 0 -> 0.2 at t=0.5 -> 0.9 at t=1.2, observed until t=2."""
    return Path(np.array([0.0, 0.5, 1.2]), np.array([[0.0], [0.2], [0.9]]), 2.0)
