import numpy as np
import pytest

from alloy1d.model import (DiscreteSingleSite, DisorderLaw, ModelSpec,
                           unit_bump_model)


@pytest.fixture(scope="session")
def spec1():
    return unit_bump_model()


@pytest.fixture(scope="session")
def discrete_spec():
    return ModelSpec("discrete", DisorderLaw("uniform", 0.0, 1.0),
                     a=DiscreteSingleSite(np.array([1.0])))


@pytest.fixture(scope="session")
def ids_small(spec1):
    # coarse shared IDS table for the unit tests; acceptance builds its own
    from alloy1d.spectral_stats import estimate_ids
    grid = np.linspace(0.0, 3.0, 301)
    return estimate_ids(spec1, 60, 48, grid, seed=77, h=0.05)
