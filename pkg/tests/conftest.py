from __future__ import annotations

import numpy as np
import pytest

from mrfkit import EnergyFunction


def potts(weight: float, labels: int = 2) -> np.ndarray:
    return weight * (1.0 - np.eye(labels))


@pytest.fixture
def two_node_chain() -> EnergyFunction:
    """Two binary nodes, unaries (0,1) and (0,2), unit Potts edge."""
    return EnergyFunction([2, 2], [[0.0, 1.0], [0.0, 2.0]], [(0, 1)], [potts(1.0)])


@pytest.fixture
def three_node_chain() -> EnergyFunction:
    """Binary chain with unaries (0,5), (0,0), (5,0) and unit Potts edges."""
    return EnergyFunction(
        [2, 2, 2],
        [[0.0, 5.0], [0.0, 0.0], [5.0, 0.0]],
        [(0, 1), (1, 2)],
        [potts(1.0), potts(1.0)],
    )
