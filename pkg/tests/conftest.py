import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("qcflow", max_examples=40, deadline=None)
settings.load_profile("qcflow")


@pytest.fixture
def square_lattice():
    def make(lo=-1.0, hi=1.0, m=5):
        ax = np.linspace(lo, hi, m)
        return np.stack([g.ravel() for g in np.meshgrid(ax, ax, indexing="ij")], axis=1)

    return make
