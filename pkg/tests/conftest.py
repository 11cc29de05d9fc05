"""
Pytest configuration and fixtures for the test suite.
"""
import os
import tempfile
import shutil
import pytest
import numpy as np
import pandas as pd

from fairpolicy.distributions import StepCdf, SupportInterval
from fairpolicy.estimation import TrainingSample
from fairpolicy.objective import CondCdfArray, CovariateSpace
from fairpolicy.oracle import toy_cond_array, toy_sample


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    temp_path = tempfile.mkdtemp()
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture
def unit():
    """The unit interval [0, 1]."""
    return SupportInterval(0.0, 1.0)


@pytest.fixture
def rng():
    """Seeded generator for randomized property checks."""
    return np.random.default_rng(12345)


def random_cdf(rng, support, size=None):
    """StepCdf with a random number of atoms at random points of the support."""
    size = size or int(rng.integers(1, 12))
    points = rng.uniform(support.a, support.b, size)
    masses = rng.dirichlet(np.ones(size))
    return StepCdf.from_atoms(points, masses, support)


@pytest.fixture
def make_random_cdf(rng, unit):
    """Factory for random cdfs on [0, 1]."""
    return lambda size=None: random_cdf(rng, unit, size)


@pytest.fixture
def small_space():
    """Two covariate levels, two groups, two treatments."""
    return CovariateSpace(("x0", "x1"), ("z0", "z1"), 2)


def random_array(rng, space, support):
    """Conditional cdf array with random cells and random positive cell probabilities."""
    cdfs = {
        (i, x, z): random_cdf(rng, support)
        for i in space.treatments
        for x in space.x_levels
        for z in space.z_levels
    }
    weights = rng.dirichlet(np.ones(len(space.x_levels) * len(space.z_levels)))
    keys = [(x, z) for x in space.x_levels for z in space.z_levels]
    return CondCdfArray(space, cdfs, dict(zip(keys, weights)))


@pytest.fixture
def small_array(rng, small_space, unit):
    """Random array on the small space."""
    return random_array(rng, small_space, unit)


@pytest.fixture
def toy_array():
    """Toy problem discretized on 2000 grid points, majority share 3/4."""
    return toy_cond_array(0.75, 2000)


@pytest.fixture
def toy_data():
    """10^4 toy records under mechanism A1."""
    return toy_sample(10_000, 0.75, "A1", seed=7)


@pytest.fixture
def full_design_sample(rng, small_space, unit):
    """200 records with every (d, x, z) cell observed."""
    cells = [(d, x, z) for d in (1, 2) for x in ("x0", "x1") for z in ("z0", "z1")]
    rows = []
    for j in range(200):
        d, x, z = cells[j % len(cells)]
        rows.append({"y": float(rng.uniform()), "x": x, "z": z, "d": d})
    return TrainingSample(small_space, unit, pd.DataFrame(rows))


@pytest.fixture
def sample_csv(temp_dir):
    """Four records covering a 1 x 2 x 2 design."""
    df = pd.DataFrame({
        "y": [0.1, 0.2, 0.3, 0.4],
        "x": ["a", "a", "a", "a"],
        "z": ["g0", "g0", "g1", "g1"],
        "d": [1, 2, 1, 2],
    })
    csv_path = os.path.join(temp_dir, "sample.csv")
    df.to_csv(csv_path, index=False)
    return csv_path


@pytest.fixture
def write_csv(temp_dir):
    """Write raw CSV text to a file in the temporary directory."""
    def _write(text, name="input.csv"):
        path = os.path.join(temp_dir, name)
        with open(path, "w") as f:
            f.write(text)
        return path
    return _write
