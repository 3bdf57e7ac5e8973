import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make tests/oracles.py importable

from thermodistill import Ensemble, Subsystem


@pytest.fixture
def fig3_ensemble():
    """59 + 41 two-level mix used throughout the work-extraction examples."""
    g1 = Subsystem.from_gibbs([0.6, 0.4], [0.9, 0.1])
    g2 = Subsystem.from_gibbs([0.75, 0.25], [0.7, 0.3])
    return Ensemble.of((g1, 59), (g2, 41))


@pytest.fixture
def fig4_subsystem():
    return Subsystem.from_gibbs([0.6, 0.4], [0.7, 0.3])
