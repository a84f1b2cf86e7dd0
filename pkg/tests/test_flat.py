"""
Tests for boundary-flat polynomials, separated examples and counterexample families.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from app.core.bohr_lift import directional_taylor, evaluate_theta
from app.core.errors import CertificationError, PreconditionError
from app.core.flat import (
    build_flat_example,
    build_flat_polynomial,
    build_separated_example,
    certify,
    chebyshev_coeffs,
    chebyshev_identity_residual,
    counterexample_factory,
    flat_residual,
    is_block_triangular,
    printed_determinant_integer_roots,
    system_matrix,
)
from app.models.flat import ChebyshevKind
from app.models.lift import BohrLift


class TestChebyshev:
    """Test cases for the Chebyshev basis in powers of 1 - y."""

    def test_low_degrees(self):
        """T_1(y) = 1 - (1 - y) and U_0 = 1."""
        assert chebyshev_coeffs(ChebyshevKind.T, 1).coeffs_in_one_minus_y == [1, -1]
        assert chebyshev_coeffs("U", 0).coeffs_in_one_minus_y == [1]

    def test_evaluation_matches_numpy(self):
        y = np.linspace(-1, 1, 11)
        for n in range(1, 8):
            t = chebyshev_coeffs(ChebyshevKind.T, n)
            expected = np.polynomial.chebyshev.chebval(y, [0] * n + [1])
            values = np.array([float(t.evaluate(Fraction(v).limit_denominator(10))) for v in y])
            assert np.allclose(values, expected, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 4, 9])
    def test_trig_identities(self, n):
        """sin nx = sin x U_(n-1)(cos x) and cos nx = T_n(cos x) at high precision."""
        sin_residual, cos_residual = chebyshev_identity_residual(n, samples=200)

        assert sin_residual < 1e-30
        assert cos_residual < 1e-30

    def test_invalid_degree(self):
        with pytest.raises(PreconditionError):
            chebyshev_coeffs(ChebyshevKind.T, 0)


class TestFlatPolynomial:
    """Test cases for the block triangular solve."""

    def test_quartic_flatness(self):
        """Target (0, 1) gives (1 - z) + (1 - z)^2 / 2."""
        poly = build_flat_polynomial([0, 1])

        assert poly.exact
        assert poly.a == [2]
        assert poly.b == [-1]
        assert poly.lift.constant == Fraction(3, 2)
        assert poly.lift.terms == {(1,): -2, (2,): Fraction(1, 2)}

    @pytest.mark.parametrize("target", [[1, 0], [0, 0, 1, 0], [0, 0, 0, 0, 0, 1], [1, -1, 2, 0]])
    def test_flatness_residual(self, target):
        poly = build_flat_polynomial(target)

        assert flat_residual(poly) < 1e-12

    def test_float_solve_matches_exact(self):
        exact = build_flat_polynomial([0, 0, 1, 0])
        approx = build_flat_polynomial([0, 0, 1, 0], exact=False)

        assert not approx.exact
        assert np.allclose([float(a) for a in exact.a], approx.a)
        assert np.allclose([float(b) for b in exact.b], approx.b)

    def test_odd_target_rejected(self):
        with pytest.raises(PreconditionError):
            build_flat_polynomial([0, 1, 0])

    @pytest.mark.parametrize("n_blocks", [1, 2, 5])
    def test_system_is_block_triangular(self, n_blocks):
        matrix = system_matrix(n_blocks)

        assert len(matrix) == 2 * n_blocks
        assert is_block_triangular(matrix)

    def test_printed_determinant_never_vanishes(self):
        assert printed_determinant_integer_roots() == []


class TestFlatExample:
    """Test cases for certified one-variable examples."""

    def test_flat_example_is_certified(self):
        result = build_flat_example(2, 1)

        assert result.name == "flat"
        assert result.certification.passed
        assert result.certification.zeros_off_origin == 0
        assert result.parameters["flatness_residual"] < 1e-12

    def test_default_block_count(self):
        result = build_flat_example(3)

        assert result.parameters["N"] == 2

    def test_power_above_range(self):
        with pytest.raises(PreconditionError):
            build_flat_example(5, 2)


class TestSeparatedExample:
    """Test cases for separated-variable constructions."""

    def test_orders_four_four(self):
        """Re phi behaves like theta_j^4 / 4 along each axis."""
        result = build_separated_example([4, 4], grid=1024)
        phi = result.lift

        assert phi.dim == 2
        assert phi.is_separated()
        assert all(comp.a[0] > 0 for comp in result.components)
        assert result.certification.passed
        for axis in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            coefficients = directional_taylor(phi, [0.0, 0.0], axis, max_order=6)
            assert np.allclose(coefficients[:4], 0, atol=1e-12)
            assert coefficients[4] == pytest.approx(0.25)

    def test_orders_count_theta_powers(self):
        """Order 4 is (1 - z) + (1 - z)^2 / 2 and order 2 is 1 - z."""
        result = build_separated_example([4, 2], grid=256)
        quartic, quadratic = (comp.lift for comp in result.components)

        assert float(quartic.constant) == pytest.approx(1.5)
        assert float(quartic.terms[(1,)]) == pytest.approx(-2.0)
        assert float(quartic.terms[(2,)]) == pytest.approx(0.5)
        assert float(quadratic.constant) == pytest.approx(1.0)
        assert float(quadratic.terms[(1,)]) == pytest.approx(-1.0)
        assert float(quadratic.terms.get((2,), 0)) == pytest.approx(0.0)

    def test_mixed_orders(self):
        result = build_separated_example([2, 6], grid=1024)

        assert result.orders() == [2, 6]
        assert evaluate_theta(result.lift, np.zeros((1, 2)))[0] == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("orders", [[], [3, 4], [0, 2]])
    def test_invalid_orders(self, orders):
        with pytest.raises(PreconditionError):
            build_separated_example(orders)


class TestCounterexamples:
    """Test cases for the non-compact families."""

    def test_cex3_small_delta(self):
        """(1 - z1) + (1 - z1)^2 z2 / 10 = 1 - z1 + z2/10 - z1 z2/5 + z1^2 z2/10."""
        result = counterexample_factory("cex3", Fraction(1, 10), poly="z2", grid=256)

        assert result.name == "cex3"
        assert result.certification.passed
        assert result.lift.dim == 2
        assert result.lift.constant == 1
        assert result.lift.terms == {
            (1, 0): -1,
            (0, 1): Fraction(1, 10),
            (1, 1): Fraction(-1, 5),
            (2, 1): Fraction(1, 10),
        }

    def test_cex3_vanishes_on_first_boundary_face(self):
        """Phi(1, z2) = 0 for every z2 on the circle."""
        result = counterexample_factory("cex3", Fraction(1, 10), poly="z2", grid=256)
        theta = np.column_stack([np.zeros(16), np.linspace(-math.pi, math.pi, 16)])

        assert np.allclose(evaluate_theta(result.lift, theta), 0, atol=1e-12)

    def test_cex5a_dimension(self):
        result = counterexample_factory("cex5a", Fraction(1, 100), dim=3, grid=64)

        assert result.lift.dim == 3
        assert result.certification.passed

    def test_cex5b_polynomial(self):
        result = counterexample_factory("cex5b", Fraction(1, 100), poly="z2*z3", grid=64)

        assert result.lift.dim == 3
        assert result.parameters["poly"] == "z2*z3"

    def test_large_delta_fails_certification(self):
        """(1 - z1) + 2 (1 - z1)^2 z2 takes negative real values."""
        with pytest.raises(CertificationError):
            counterexample_factory("cex3", 2, poly="z2", grid=128)

    def test_nonpositive_delta(self):
        with pytest.raises(PreconditionError):
            counterexample_factory("cex3", 0)

    def test_foreign_variables(self):
        with pytest.raises(PreconditionError):
            counterexample_factory("cex3", Fraction(1, 10), poly="x + z2")


class TestCertify:
    """Test cases for grid certification."""

    def test_negative_lift_fails(self):
        report = certify(BohrLift(constant=0, terms={(1,): 1}, dim=1), grid=64)

        assert not report.passed
        assert report.min_re == pytest.approx(-1)

    def test_grid_budget(self):
        phi = BohrLift(constant=3, terms={(1, 0, 0): -1, (0, 1, 0): -1, (0, 0, 1): -1}, dim=3)
        report = certify(phi, grid=4096, max_points=64**3)

        assert report.grid_per_dim == 64
        assert report.points == 64**3
        assert report.min_re == pytest.approx(0, abs=1e-12)
        assert report.lower_bound <= report.min_re
        assert math.isclose(report.lipschitz, 3.0)
