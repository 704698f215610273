import numpy as np
import pytest
from numpy.testing import assert_allclose

from ahlfors_fredholm.datum import DATUM_BUILDERS, parse_datum_spec
from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.sampled_space import build_weighted_interval


def test_builders():
    assert set(DATUM_BUILDERS) == {'const', 'coord', 'dist', 'step', 'cos'}


def test_const(circle_128):
    datum = parse_datum_spec("const:2.5")
    assert_allclose(datum(circle_128), 2.5)
    assert datum.holder_bound == (1.0, 0.0)
    assert datum.spec == "const:2.5"


def test_coord(circle_128):
    assert_allclose(parse_datum_spec("coord:1")(circle_128), circle_128.points[:, 1])
    assert_allclose(parse_datum_spec("coord")(circle_128), circle_128.points[:, 0])


def test_coord_outside_dimension():
    with pytest.raises(InvalidArgumentError):
        parse_datum_spec("coord:1")(build_weighted_interval(10))


def test_dist(circle_128):
    datum = parse_datum_spec("dist:0.5@3")
    assert_allclose(datum(circle_128), circle_128.dist[3] ** 0.5)
    assert datum.holder_bound == (0.5, 1.0)
    assert datum(circle_128)[3] == 0.0


def test_step(circle_128):
    datum = parse_datum_spec("step")
    values = datum(circle_128)
    assert set(np.unique(values)) == {-1.0, 1.0}
    assert not datum.continuous


def test_cos_of_angle(circle_128):
    angles = np.arctan2(circle_128.points[:, 1], circle_128.points[:, 0])
    assert_allclose(parse_datum_spec("cos")(circle_128), np.cos(angles), atol=1e-14)


def test_cos_needs_two_coordinates():
    with pytest.raises(InvalidArgumentError):
        parse_datum_spec("cos")(build_weighted_interval(10))


@pytest.mark.parametrize("text", ["", "  ", "gauss", "const", "const:a", "dist:1.5", "dist:0.5@x",
                                  "cos:1", "coord:x"])
def test_invalid(text):
    with pytest.raises(InvalidArgumentError):
        parse_datum_spec(text)
