import numpy as np
import pytest

from dbnkit import HmmModel


@pytest.fixture
def worked_model():
    """Two-state fixture whose likelihood and best path are known in closed form."""
    return HmmModel(
        pi=[0.6, 0.4],
        trans=[[0.7, 0.3], [0.4, 0.6]],
        emit=[[0.9, 0.1], [0.2, 0.8]],
    )


@pytest.fixture
def worked_obs():
    return np.array([0, 1, 0])
