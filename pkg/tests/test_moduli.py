import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.moduli import (
    LogPowerModulus, MaxModulus, PowerModulus, check_modulus_conditions, combine_max, modulus_omega,
    modulus_varpi, omega_theta, parse_modulus,
)


class TestOmegaTheta:
    def test_at_cutoff(self):
        assert omega_theta(1.0, math.exp(-1)) == pytest.approx(math.exp(-1))

    def test_plateau(self):
        assert omega_theta(1.0, 0.9) == pytest.approx(math.exp(-1))
        assert omega_theta(1.0, 50.0) == pytest.approx(math.exp(-1))

    def test_half(self):
        assert omega_theta(0.5, math.exp(-2)) == pytest.approx(2 * math.exp(-1))

    def test_zero_and_arrays(self):
        values = omega_theta(0.5, np.array([0.0, 1e-4, 0.5]))
        assert isinstance(values, np.ndarray)
        assert values[0] == 0.0
        assert_allclose(values[1], 1e-2 * math.log(1e4))
        assert omega_theta(0.5, 0.0) == 0.0

    def test_nondecreasing(self):
        r = np.geomspace(1e-9, 10, 2000)
        assert np.all(np.diff(omega_theta(0.3, r)) >= 0)

    @pytest.mark.parametrize("theta", [0.0, -0.5, 1.5])
    def test_theta_range(self, theta):
        with pytest.raises(InvalidArgumentError):
            omega_theta(theta, 0.1)

    def test_negative_radius(self):
        with pytest.raises(InvalidArgumentError):
            omega_theta(0.5, -1.0)


class TestModulusConditions:
    @pytest.mark.parametrize("beta", [0.1, 0.5, 1.0])
    def test_power_passes(self, beta):
        check = check_modulus_conditions(PowerModulus(beta=beta))
        assert check.passed
        assert check.sup_ratio <= 1.0 + 1e-12

    def test_square_fails_linearly(self):
        check = check_modulus_conditions(PowerModulus(beta=2.0))
        assert not check.passed
        for a, ratio in check.ratio_by_a:
            assert ratio == pytest.approx(a, rel=1e-9)

    @pytest.mark.parametrize("theta", [0.2, 0.5, 1.0])
    def test_log_power_passes(self, theta):
        check = check_modulus_conditions(LogPowerModulus(theta=theta))
        assert check.passed
        assert check.sup_ratio <= 1.0 + 1e-9

    def test_max_passes(self):
        assert check_modulus_conditions(parse_modulus("max(r^1, omega_theta(0.5))")).passed

    def test_empty_grid(self):
        with pytest.raises(InvalidArgumentError):
            check_modulus_conditions(PowerModulus(beta=0.5), t_grid=[])


class TestParseModulus:
    @pytest.mark.parametrize("modulus", [
        PowerModulus(beta=0.5),
        LogPowerModulus(theta=0.25),
        MaxModulus(parts=[PowerModulus(beta=1.0), LogPowerModulus(theta=1.0)]),
    ])
    def test_printed_form_parses_back(self, modulus):
        assert parse_modulus(str(modulus)) == modulus

    @pytest.mark.parametrize("text", ["r^", "omega_theta(2)", "sqrt(r)", "max()", "r^-1"])
    def test_invalid(self, text):
        with pytest.raises(InvalidArgumentError):
            parse_modulus(text)

    def test_combine_max_drops_repeats(self):
        power = PowerModulus(beta=0.5)
        assert combine_max(power, PowerModulus(beta=0.5)) == power
        combined = combine_max(power, MaxModulus(parts=[power, LogPowerModulus(theta=0.5)]))
        assert combined == MaxModulus(parts=[power, LogPowerModulus(theta=0.5)])

    def test_max_is_pointwise(self):
        modulus = parse_modulus("max(r^1, omega_theta(0.5))")
        r = np.array([1e-3, 0.1, 0.9])
        assert_allclose(modulus(r), np.maximum(r, omega_theta(0.5, r)))


class TestModulusVarpi:
    def test_first_branch(self):
        assert modulus_varpi(0.5, 0.8, 1.0, 1.0) == PowerModulus(beta=0.5)

    def test_boundary_example_lipschitz(self):
        assert modulus_varpi(1.5, 2.5, 1.0, 2.0) == PowerModulus(beta=0.5)

    def test_boundary_example_smooth(self):
        modulus = modulus_varpi(1.0, 2.0, 1.0, 2.0, strong=True)
        assert modulus == MaxModulus(parts=[PowerModulus(beta=1.0), LogPowerModulus(theta=1.0)])

    def test_equality_needs_strong_regularity(self):
        with pytest.raises(InvalidArgumentError, match="strongly"):
            modulus_varpi(1.0, 2.0, 1.0, 2.0)

    @pytest.mark.parametrize("args", [
        (0.5, 2.5, 1.0, 2.0),   # s1 below upsilon - 1
        (1.0, 1.0, 1.0, 1.0),   # s1 = upsilon
        (0.5, 2.0, 1.0, 1.0),   # s2 = upsilon + s3
        (0.5, 0.8, 0.0, 1.0),   # s3 = 0
        (0.5, 0.8, 1.5, 1.0),   # s3 > 1
    ])
    def test_preconditions(self, args):
        with pytest.raises(InvalidArgumentError):
            modulus_varpi(*args)


class TestModulusOmega:
    def test_first_branch(self):
        assert modulus_omega(0.5, 1.0, 1.0, 0.5, 1.0) == PowerModulus(beta=1.0)

    def test_second_branch(self):
        modulus = modulus_omega(0.5, 1.5, 0.5, 0.5, 1.0, strong=True)
        assert modulus == MaxModulus(parts=[PowerModulus(beta=1.0), LogPowerModulus(theta=0.5)])

    def test_third_branch(self):
        modulus = modulus_omega(0.2, 1.7, 1.0, 0.2, 1.0)
        assert isinstance(modulus, PowerModulus)
        assert modulus.beta == pytest.approx(0.5)

    def test_improves_on_class_only_modulus(self):
        plain = modulus_varpi(0.5, 1.5, 1.0, 1.0)
        improved = modulus_omega(0.5, 1.5, 1.0, 1.0, 1.0)
        assert improved.beta > plain.beta

    @pytest.mark.parametrize("args", [
        (0.5, 0.4, 1.0, 0.5, 1.0),   # s2 < beta
        (0.5, 1.0, 1.0, 0.0, 1.0),   # beta = 0
        (0.2, 3.0, 0.5, 0.5, 1.0),   # tail exponent not positive
    ])
    def test_preconditions(self, args):
        with pytest.raises(InvalidArgumentError):
            modulus_omega(*args)


@pytest.mark.parametrize("modulus", [
    modulus_varpi(0.5, 0.8, 1.0, 1.0),
    modulus_varpi(0.5, 1.5, 1.0, 1.0),
    modulus_varpi(0.0, 1.0, 0.5, 1.0, strong=True),
    modulus_varpi(1.5, 2.5, 1.0, 2.0),
    modulus_omega(0.5, 1.0, 1.0, 0.5, 1.0),
    modulus_omega(0.5, 1.5, 0.5, 0.5, 1.0, strong=True),
    modulus_omega(0.2, 1.7, 1.0, 0.2, 1.0),
])
def test_solution_moduli_satisfy_conditions(modulus):
    assert check_modulus_conditions(modulus).passed
