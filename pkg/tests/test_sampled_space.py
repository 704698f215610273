import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ahlfors_fredholm.ahlfors import ball_measure, doubling_ratios, estimate_upper_ahlfors, geometric_grid
from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.sampled_space import (
    PointCloudParseError, ResourceLimitError, SampledMeasureSpace, build_cantor, build_circle,
    build_weighted_interval, load_point_cloud, validate_space, write_point_cloud,
)

CANTOR_DIM = math.log(2) / math.log(3)


class TestCircle:
    def test_square(self):
        space = build_circle(4, 1.0)
        assert space.n == 4
        assert space.dim == 2
        assert space.total_mass == pytest.approx(2 * math.pi, rel=1e-12)
        assert space.dist[0, 1] == pytest.approx(math.sqrt(2))
        assert space.dist[0, 2] == pytest.approx(2.0)

    def test_too_few_nodes(self):
        with pytest.raises(InvalidArgumentError):
            build_circle(2, 1.0)

    def test_nonpositive_radius(self):
        with pytest.raises(InvalidArgumentError):
            build_circle(8, 0.0)

    def test_node_cap(self):
        with pytest.raises(ResourceLimitError):
            build_circle(64, max_nodes=32)

    def test_total_mass_is_exact(self):
        space = build_circle(300, 2.5)
        assert space.total_mass == pytest.approx(2 * math.pi * 2.5, rel=1e-12)

    def test_ball_measure_matches_cap_length(self, circle_512):
        h = 2 * math.pi / 512
        for r in geometric_grid(0.01, 1.99, 1.3):
            expected = 4 * math.asin(r / 2)
            assert abs(ball_measure(circle_512, 0, r) - expected) <= 2 * h

    def test_mesh_and_diameter(self):
        space = build_circle(6)
        assert space.mesh == pytest.approx(1.0)
        assert space.diameter == pytest.approx(2.0)

    def test_arrays_are_read_only(self, circle_128):
        with pytest.raises(ValueError):
            circle_128.dist[0, 1] = 5.0
        with pytest.raises(ValueError):
            circle_128.weights[0] = 5.0


class TestCantor:
    def test_level_zero(self):
        space = build_cantor(0)
        assert space.n == 1
        assert_allclose(space.points[:, 0], [0.0])
        assert_allclose(space.weights, [1.0])
        assert space.mesh is None

    def test_level_one(self):
        space = build_cantor(1)
        assert_allclose(space.points[:, 0], [0.0, 2.0 / 3.0])
        assert_allclose(space.weights, [0.5, 0.5])

    @pytest.mark.parametrize("level", [0, 3, 6, 10])
    def test_total_mass_is_one(self, level):
        assert build_cantor(level).total_mass == 1.0

    def test_level_guard(self):
        with pytest.raises(ResourceLimitError):
            build_cantor(15)

    def test_node_cap_applies_below_guard(self):
        with pytest.raises(ResourceLimitError):
            build_cantor(13)

    def test_negative_level(self):
        with pytest.raises(InvalidArgumentError):
            build_cantor(-1)

    def test_points_are_exact(self):
        space = build_cantor(5)
        numerators = np.rint(space.points[:, 0] * 3 ** 5).astype(int)
        # base-3 digits of every left endpoint are 0 or 2
        for m in numerators:
            digits = np.base_repr(int(m), 3)
            assert set(digits) <= {'0', '2'}

    def test_upper_ahlfors_bounded(self, cantor_8):
        grid = geometric_grid(3.0 ** -8, 1.0)
        report = estimate_upper_ahlfors(cantor_8, CANTOR_DIM, radius_grid=grid)
        assert report.c_upper <= 4.0


class TestWeightedInterval:
    def test_uniform_pair(self):
        space = build_weighted_interval(2, 'uniform')
        assert_allclose(space.weights, [0.5, 0.5])
        assert_allclose(space.points[:, 0], [0.0, 1.0])

    def test_unknown_density(self):
        with pytest.raises(InvalidArgumentError):
            build_weighted_interval(10, 'gaussian')

    def test_exp_cusp_is_upper_one_regular(self):
        space = build_weighted_interval(1000, 'exp_cusp')
        report = estimate_upper_ahlfors(space, 1.0)
        assert report.c_upper <= 1.0 + 1.0 / 1000

    def test_exp_cusp_is_not_doubling(self):
        space = build_weighted_interval(1000, 'exp_cusp')
        ratios = doubling_ratios(space, 0)
        assert ratios
        assert max(ratio for _, ratio in ratios) > 100

    def test_exp_cusp_weight_vanishes_at_zero(self):
        space = build_weighted_interval(50, 'exp_cusp')
        assert space.weights[0] == 0.0
        assert space.weights[-1] == pytest.approx(math.exp(-1) / 50)


class TestPointCloud:
    def test_load(self, tmp_path):
        path = tmp_path / "cloud.txt"
        path.write_text("# three points\n2 3\n0 0 1\n1 0 1\n\n0 1 0.5\n", encoding="utf-8")
        space = load_point_cloud(path)
        assert space.n == 3
        assert space.dim == 2
        assert space.total_mass == pytest.approx(2.5)
        assert space.dist[1, 2] == pytest.approx(math.sqrt(2))

    def test_negative_weight_names_the_row(self, tmp_path):
        path = tmp_path / "cloud.txt"
        path.write_text("1 2\n0 1\n1 -1\n", encoding="utf-8")
        with pytest.raises(PointCloudParseError) as info:
            load_point_cloud(path)
        assert info.value.line_number == 3
        assert "row 2" in str(info.value)

    @pytest.mark.parametrize("content,line", [
        ("2\n0 0 1\n", 1),
        ("1 2\n0 1\n", 2),
        ("1 1\n0 x\n", 2),
        ("1 1\n0 1 1\n", 2),
        ("1 1\nnan 1\n", 2),
    ])
    def test_malformed(self, tmp_path, content, line):
        path = tmp_path / "bad.txt"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(PointCloudParseError) as info:
            load_point_cloud(path)
        assert info.value.line_number == line

    def test_missing_file(self, tmp_path):
        with pytest.raises(PointCloudParseError):
            load_point_cloud(tmp_path / "absent.txt")

    def test_round_trip(self, tmp_path):
        space = build_circle(16, 1.0)
        path = tmp_path / "circle.txt"
        write_point_cloud(space, path)
        loaded = load_point_cloud(path)
        assert_allclose(loaded.dist, space.dist, atol=1e-12)
        assert_allclose(loaded.weights, space.weights, rtol=0, atol=0)


class TestInvariants:
    @pytest.mark.parametrize("builder", [
        lambda: build_circle(64),
        lambda: build_cantor(6),
        lambda: build_weighted_interval(100, 'exp_cusp'),
    ])
    def test_constructed_spaces_are_valid(self, builder):
        assert validate_space(builder(), triples=10_000) == []

    def test_detects_asymmetry_and_triangle_violation(self):
        dist = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [4.0, 1.0, 0.0]])
        space = SampledMeasureSpace(points=np.zeros((3, 1)), dist=dist, weights=np.ones(3))
        violations = validate_space(space, triples=2000)
        assert any("symmetric" in v for v in violations)
        assert any("triangle" in v for v in violations)

    def test_rejects_negative_weight(self):
        with pytest.raises(InvalidArgumentError):
            SampledMeasureSpace.from_points(np.zeros((2, 1)), np.array([1.0, -1.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            SampledMeasureSpace(points=np.zeros((2, 1)), dist=np.zeros((3, 3)), weights=np.ones(2))

    def test_check_index(self, circle_128):
        assert circle_128.check_index(5) == 5
        with pytest.raises(InvalidArgumentError):
            circle_128.check_index(128)
