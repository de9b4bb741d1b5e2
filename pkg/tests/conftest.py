import numpy as np
import pytest

from multiloc.ensemble import EnsembleSpec
from multiloc.geometry import Region
from multiloc.model import DisorderSpec, InteractionSpec


@pytest.fixture
def three_site_pair():
    """Two interacting particles on three sites at strong uniform disorder."""
    return EnsembleSpec(Region.explicit([0, 1, 2]), 2, DisorderSpec("uniform", (0.0, 1.0), 20.0, 7),
                        InteractionSpec((0.5,)), M=40)


def random_symmetric(rng, n):
    A = rng.normal(size=(n, n))
    return A + A.T
