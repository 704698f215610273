import numpy as np
import pytest

from ahlfors_fredholm.sampled_space import SampledMeasureSpace, build_cantor, build_circle


@pytest.fixture(scope="session")
def circle_128():
    return build_circle(128)


@pytest.fixture(scope="session")
def circle_200():
    return build_circle(200)


@pytest.fixture(scope="session")
def circle_256():
    return build_circle(256)


@pytest.fixture(scope="session")
def circle_512():
    return build_circle(512)


@pytest.fixture(scope="session")
def circle_meshes(circle_128, circle_256, circle_512):
    return [circle_128, circle_256, circle_512]


@pytest.fixture(scope="session")
def cantor_7():
    return build_cantor(7)


@pytest.fixture(scope="session")
def cantor_8():
    return build_cantor(8)


@pytest.fixture
def point_mass():
    return SampledMeasureSpace.from_points(np.zeros((1, 1)), np.ones(1), label="point")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
