import numpy as np
import pytest
from hypothesis import strategies as st

from discrepancy import MonteCarloPlan, NormalizedBox, PointSet, SpectralConfig, gen_iid
from hgroup import HPoint

coords = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


def hpoints(n: int = 1):
    """Strategy for points of H^n with bounded coordinates."""
    return st.builds(
        lambda xy, t: HPoint(tuple(xy), t),
        st.lists(coords, min_size=2 * n, max_size=2 * n),
        coords,
    )


def _point_set_csv(points, n=1, generator="manual", seed=0) -> str:
    return PointSet(np.asarray(points, dtype=float), generator, seed, n).to_csv()


@pytest.fixture()
def mu1():
    return NormalizedBox(1)


@pytest.fixture()
def mu2():
    return NormalizedBox(2)


@pytest.fixture()
def iid4(mu1):
    """Four iid points in B_1 (n=1)."""
    return gen_iid(mu1, 4, seed=3)


@pytest.fixture()
def small_spectral():
    """A coarse spectral configuration for fast structural checks."""
    return SpectralConfig(k_max=40, lambda_max=40.0, lambda_step=0.05)


@pytest.fixture(scope="module")
def plan1():
    """One shared Monte Carlo plan for n=1 (100k samples)."""
    return MonteCarloPlan.build(NormalizedBox(1), 100_000, seed=11)


@pytest.fixture()
def points_file(tmp_path):
    """Write a point-set CSV and return its path."""
    def write(points, n=1, name="points.csv"):
        path = tmp_path / name
        path.write_text(_point_set_csv(points, n), encoding="utf-8")
        return str(path)

    return write
