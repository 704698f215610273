import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ahlfors_fredholm.ahlfors import mesh_stability_ratio, riesz_integrals
from ahlfors_fredholm.class_calculus import compose_potential_classes, smoothing_order
from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.kernels import RieszKernel, ScaledKernel, TabulatedKernel, ZeroKernel, potential_norm
from ahlfors_fredholm.operator import (
    AssemblyError, NeumannRefusedError, SolveError, apply, assemble, assemble_normalized, bootstrap_scale,
    compose_numeric, iterate_kernel, normalize_to, residual_inf, scaled_system, solve_direct,
    solve_neumann, verify_bootstrap,
)
from ahlfors_fredholm.sampled_space import SampledMeasureSpace, build_circle


@pytest.fixture
def pair_space():
    return SampledMeasureSpace.from_points(np.array([0.0, 1.0]), np.array([2.0, 2.0]), label="pair")


@pytest.fixture
def random_system(circle_200, rng):
    table = rng.normal(size=(circle_200.n, circle_200.n))
    kernel = TabulatedKernel(table, label=circle_200.label)
    system, _ = assemble_normalized(circle_200, kernel, 0.5)
    return system


class TestAssemble:
    def test_zero_kernel(self, circle_128):
        system = assemble(circle_128, ZeroKernel())
        assert not system.matrix.any()
        assert system.row_sum_norm == 0.0

    def test_constant_kernel_row_sums(self):
        space = build_circle(4)
        system = assemble(space, RieszKernel(0.0))
        assert_allclose(system.matrix.sum(axis=1), 3 * (2 * math.pi / 4))
        assert np.all(np.diag(system.matrix) == 0)

    def test_row_sum_norm_is_recomputable(self, random_system):
        assert random_system.row_sum_norm == np.abs(random_system.matrix).sum(axis=1).max()

    def test_matrices_are_read_only(self, circle_128):
        system = assemble(circle_128, RieszKernel(0.5))
        with pytest.raises(ValueError):
            system.matrix[0, 1] = 1.0

    def test_non_finite_value_names_the_pair(self):
        space = SampledMeasureSpace.from_points(np.array([0.0, 1.0, 1.0]), np.ones(3))
        with pytest.raises(AssemblyError) as info:
            assemble(space, RieszKernel(0.5))
        assert info.value.pair == (1, 2)


class TestNormalize:
    def test_scale_factor(self, pair_space):
        system = assemble(pair_space, RieszKernel(0.0))
        assert system.row_sum_norm == 2.0
        assert normalize_to(system, 0.5) == 0.25

    def test_target_out_of_range(self, pair_space):
        system = assemble(pair_space, RieszKernel(0.0))
        with pytest.raises(InvalidArgumentError):
            normalize_to(system, 1.5)

    def test_zero_norm(self, circle_128):
        with pytest.raises(InvalidArgumentError):
            normalize_to(assemble(circle_128, ZeroKernel()), 0.5)

    def test_idempotent(self, circle_128):
        system = assemble(circle_128, RieszKernel(0.5))
        scaled = scaled_system(system, normalize_to(system, 0.5))
        assert normalize_to(scaled, 0.5) == pytest.approx(1.0, rel=1e-14)

    def test_assemble_normalized(self, circle_128):
        system, lam = assemble_normalized(circle_128, RieszKernel(0.5), 0.5)
        assert 0.45 <= system.row_sum_norm <= 0.5 + 1e-15
        assert isinstance(system.kernel, ScaledKernel)
        assert system.kernel.lam == lam
        assert_allclose(system.matrix, lam * assemble(circle_128, RieszKernel(0.5)).matrix)

    def test_zero_kernel_is_left_unscaled(self, circle_128):
        system, lam = assemble_normalized(circle_128, ZeroKernel(), 0.5)
        assert lam == 1.0
        assert system.row_sum_norm == 0.0


class TestApply:
    def test_zero_vector(self, random_system):
        assert not apply(random_system, np.zeros(random_system.n)).any()

    def test_zero_kernel(self, circle_128, rng):
        system = assemble(circle_128, ZeroKernel())
        assert not apply(system, rng.normal(size=circle_128.n)).any()

    def test_ones_give_riesz_integrals(self, circle_128):
        system = assemble(circle_128, RieszKernel(0.5))
        assert_allclose(apply(system, np.ones(circle_128.n)), riesz_integrals(circle_128, 0.5), rtol=1e-12)

    def test_max_norm_bound(self, random_system, rng):
        for _ in range(20):
            f = rng.uniform(-1, 1, size=random_system.n)
            bound = random_system.row_sum_norm * np.abs(f).max()
            assert np.abs(apply(random_system, f)).max() <= bound * (1 + 1e-12)

    def test_length_mismatch(self, random_system):
        with pytest.raises(InvalidArgumentError):
            apply(random_system, np.ones(3))


class TestComposeNumeric:
    def test_zero_factor(self, circle_128):
        composed = compose_numeric(assemble(circle_128, RieszKernel(0.5)), assemble(circle_128, ZeroKernel()))
        assert not composed.matrix.any()

    def test_constant_kernels_count_weights(self):
        space = build_circle(8)
        system = assemble(space, RieszKernel(0.0))
        k3 = compose_numeric(system, system).matrix
        w = space.weights
        expected = space.total_mass - w[:, None] - w[None, :]
        off = ~np.eye(space.n, dtype=bool)
        assert_allclose(k3[off], expected[off], rtol=1e-12)

    def test_agrees_with_matrix_product(self, circle_128):
        first = assemble(circle_128, RieszKernel(0.4))
        second = assemble(circle_128, ScaledKernel(RieszKernel(0.2), -1.5))
        k3 = compose_numeric(first, second).matrix
        product = first.matrix @ second.matrix
        np.fill_diagonal(product, 0)
        assert_allclose(k3 * circle_128.weights[None, :], product, rtol=1e-12, atol=1e-12)

    def test_space_mismatch(self, circle_128, circle_256):
        with pytest.raises(InvalidArgumentError):
            compose_numeric(assemble(circle_128, RieszKernel(0.5)), assemble(circle_256, RieszKernel(0.5)))

    def test_matches_symbolic_class(self, circle_128, circle_256):
        predicted = compose_potential_classes(0.3, 0.3, 1.0)
        measured = []
        for space in (circle_128, circle_256):
            system = assemble(space, RieszKernel(0.7))
            composed = compose_numeric(system, system)
            measured.append(potential_norm(composed, space, predicted.s1))
        assert all(np.isfinite(measured))
        assert mesh_stability_ratio(*measured) < 2.0


class TestIterateKernel:
    def test_first_iterate(self, circle_128):
        system = assemble(circle_128, RieszKernel(0.6))
        assert np.array_equal(iterate_kernel(system, 1).matrix, system.kernel_matrix)

    def test_zero_iterations(self, circle_128):
        with pytest.raises(InvalidArgumentError):
            iterate_kernel(assemble(circle_128, RieszKernel(0.6)), 0)

    def test_second_iterate_matches_composition(self, circle_128):
        system = assemble(circle_128, RieszKernel(0.6))
        assert_allclose(iterate_kernel(system, 2).matrix, compose_numeric(system, system).matrix)

    def test_smoothing_order_bounds_near_diagonal(self, circle_128, circle_256):
        r = smoothing_order(0.6, 1.0)
        assert r == 3
        near_sup, weighted_sup = [], []
        for space in (circle_128, circle_256):
            system = assemble(space, RieszKernel(0.6))
            near = (space.dist > 0) & (space.dist < 4 * space.mesh)
            near_sup.append(float(np.abs(iterate_kernel(system, r).matrix[near]).max()))
            second = iterate_kernel(system, 2)
            weighted_sup.append(potential_norm(second, space, 0.2))
        assert mesh_stability_ratio(*near_sup) < 2.0
        assert mesh_stability_ratio(*weighted_sup) < 2.0


class TestSolveDirect:
    def test_zero_kernel(self, circle_128, rng):
        g = rng.normal(size=circle_128.n)
        report = solve_direct(assemble(circle_128, ZeroKernel()), g)
        assert_allclose(report.mu, g, rtol=0, atol=1e-15)
        assert report.method == 'direct'

    def test_zero_datum(self, random_system):
        report = solve_direct(random_system, np.zeros(random_system.n))
        assert np.abs(report.mu).max() == 0.0

    def test_random_system(self, random_system, rng):
        g = rng.normal(size=random_system.n)
        report = solve_direct(random_system, g)
        assert report.residual_inf <= 1e-10
        assert report.residual_inf == residual_inf(random_system, report.mu, g)
        assert 1.0 <= report.condition_estimate < 10.0

    def test_linearity(self, random_system, rng):
        g1, g2 = rng.normal(size=(2, random_system.n))
        alpha = -2.5
        combined = solve_direct(random_system, alpha * g1 + g2).mu
        separate = alpha * solve_direct(random_system, g1).mu + solve_direct(random_system, g2).mu
        assert np.abs(combined - separate).max() <= 1e-9 * np.abs(separate).max()

    def test_singular_system(self):
        space = SampledMeasureSpace.from_points(np.array([0.0, 1.0]), np.ones(2))
        system = assemble(space, TabulatedKernel(np.array([[0.0, 1.0], [1.0, 0.0]])))
        with pytest.raises(SolveError):
            solve_direct(system, np.ones(2))

    def test_complex_kernel(self, circle_128, rng):
        system, _ = assemble_normalized(circle_128, ScaledKernel(RieszKernel(0.5), 1j), 0.5)
        g = rng.normal(size=circle_128.n)
        direct = solve_direct(system, g)
        assert np.iscomplexobj(direct.mu)
        assert direct.residual_inf <= 1e-10
        assert_allclose(solve_neumann(system, g).mu, direct.mu, atol=1e-10)


class TestSolveNeumann:
    def test_zero_kernel(self, circle_128, rng):
        g = rng.normal(size=circle_128.n)
        report = solve_neumann(assemble(circle_128, ZeroKernel()), g)
        assert report.neumann_terms == 1
        assert_allclose(report.mu, g)

    def test_agrees_with_direct(self, random_system, rng):
        g = rng.normal(size=random_system.n)
        neumann = solve_neumann(random_system, g, tol=1e-12)
        assert neumann.method == 'neumann'
        assert neumann.neumann_terms <= 45
        assert np.abs(neumann.mu - solve_direct(random_system, g).mu).max() <= 1e-10

    def test_refused_above_unit_norm(self, circle_128):
        system = assemble(circle_128, RieszKernel(0.5))
        assert system.row_sum_norm > 1
        with pytest.raises(NeumannRefusedError):
            solve_neumann(system, np.ones(circle_128.n))

    def test_term_limit(self, random_system, rng):
        with pytest.raises(SolveError):
            solve_neumann(random_system, rng.normal(size=random_system.n), tol=1e-12, max_terms=5)


class TestBootstrap:
    @pytest.mark.parametrize("r", [1, 2, 5])
    def test_identity_holds_to_round_off(self, random_system, rng, r):
        g = rng.normal(size=random_system.n)
        mu = solve_direct(random_system, g).mu
        deviation = verify_bootstrap(random_system, mu, g, r)
        assert deviation <= 1e-10 * bootstrap_scale(mu, g)

    def test_all_orders_up_to_ten(self, random_system, rng):
        g = rng.uniform(-1, 1, size=random_system.n)
        mu = solve_direct(random_system, g).mu
        for r in range(1, 11):
            assert verify_bootstrap(random_system, mu, g, r) <= r * random_system.n * 1e-12 * bootstrap_scale(mu, g)

    def test_zero_datum(self, random_system):
        zeros = np.zeros(random_system.n)
        assert verify_bootstrap(random_system, zeros, zeros, 3) == 0.0

    def test_zero_kernel(self, circle_128, rng):
        system = assemble(circle_128, ZeroKernel())
        g = rng.normal(size=circle_128.n)
        mu = solve_direct(system, g).mu
        assert verify_bootstrap(system, mu, g, 2) <= 1e-15

    def test_order_must_be_positive(self, random_system):
        zeros = np.zeros(random_system.n)
        with pytest.raises(InvalidArgumentError):
            verify_bootstrap(random_system, zeros, zeros, 0)

    def test_scale(self):
        assert bootstrap_scale(np.array([0.1]), np.array([-0.2])) == 1.0
        assert bootstrap_scale(np.array([3.0]), np.array([-5.0])) == 5.0
