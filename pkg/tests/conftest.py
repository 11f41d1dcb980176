import numpy as np
import pytest

from gravclean import PointCloud


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_cloud(rng, n, lo=-1.0, hi=1.0, labels=False):
    pts = rng.uniform(lo, hi, size=(n, 3))
    lab = rng.random(n) < 0.2 if labels else None
    return PointCloud(pts, lab)


@pytest.fixture
def make_cloud(rng):
    def factory(n, **kw):
        return random_cloud(rng, n, **kw)

    return factory
