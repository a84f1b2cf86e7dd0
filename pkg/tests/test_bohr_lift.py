"""
Tests for Bohr lifts, derivatives, boundary search and local expansions.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from app.core.bohr_lift import (
    evaluate,
    evaluate_theta,
    find_boundary_points,
    gradient_z,
    julia_caratheodory_check,
    lift,
    lift_phi0,
    local_expansion,
    polish_seed,
    range_analysis,
    re_gradient_hessian,
    resum_expansion,
    wrap_angles,
)
from app.core.errors import ClassMembershipError, ConvergenceError, DimensionMismatchError, PreconditionError
from app.core.symbols import complex_dimension, optimal_generating_set, parse_symbol
from app.models.lift import BohrLift
from app.models.symbol import GeneratingSet, RangeKind


def lift_of(text: str) -> BohrLift:
    sym = parse_symbol(text)
    _, sets = complex_dimension(sym.support())
    return lift(sym, optimal_generating_set(sets))


@pytest.fixture
def phi_1():
    """Lift of 9/2 - 2^-s - 3^-s - 2*6^-s."""
    return lift_of("9/2 - 2^-s - 3^-s - 2*6^-s")


@pytest.fixture
def phi_2():
    """Lift of 13/2 - 4*2^-s - 4*3^-s + 2*6^-s."""
    return lift_of("13/2 - 4*2^-s - 4*3^-s + 2*6^-s")


class TestLift:
    """Test cases for lift construction and evaluation."""

    def test_mixed_example_lift(self, phi_1):
        assert phi_1.constant == 4
        assert phi_1.terms == {(1, 0): -1, (0, 1): -1, (1, 1): -2}
        assert phi_1.dim == 2

    def test_second_example_lift(self, phi_2):
        assert phi_2.constant == 6
        assert phi_2.terms == {(1, 0): -4, (0, 1): -4, (1, 1): 2}

    def test_holomorphic_gradient(self, phi_1):
        """d/dz1 (4 - z1 - z2 - 2 z1 z2) = -1 - 2 z2."""
        grad = gradient_z(phi_1, np.array([0.5, 0.25j]))

        assert grad[0] == pytest.approx(-1 - 0.5j)
        assert grad[1] == pytest.approx(-2.0)

    def test_constant_lift(self):
        """The constant symbol 1 lifts to Phi = 1/2 in no variables."""
        phi = lift(parse_symbol("1"), GeneratingSet(generators=[], exponent_map={}))

        assert phi.constant == Fraction(1, 2)
        assert phi.dim == 0
        assert phi.is_constant()

    def test_shifted_lift_needs_zero_characteristic(self):
        sym = parse_symbol("s + 2^-s")
        _, sets = complex_dimension(sym.support())

        with pytest.raises(PreconditionError):
            lift(sym, sets[0])
        assert lift_phi0(sym, sets[0]).constant == 0

    def test_evaluate(self, phi_1):
        """Phi vanishes at z = 1 and equals 4 at z = (-1, -1)."""
        assert evaluate(phi_1, [1, 1]) == pytest.approx(0)
        assert evaluate(phi_1, [-1, -1]) == pytest.approx(4)

    def test_evaluate_sum_of_coefficients(self):
        phi = BohrLift(constant=Fraction(1, 3), terms={(2, 1): 2, (0, 3): -1.5}, dim=2)

        assert evaluate(phi, [1, 1]) == pytest.approx(1 / 3 + 2 - 1.5)

    def test_evaluate_dimension_mismatch(self, phi_1):
        with pytest.raises(DimensionMismatchError):
            evaluate(phi_1, [1, 1, 1])

    def test_evaluate_outside_polydisc(self, phi_1):
        with pytest.raises(PreconditionError):
            evaluate(phi_1, [2, 0])

    def test_wrap_angles(self):
        wrapped = wrap_angles([math.pi, -math.pi, 3 * math.pi / 2])

        assert wrapped == pytest.approx([math.pi, math.pi, -math.pi / 2])


class TestDerivatives:
    """Test cases for the analytic gradient and Hessian of Re phi."""

    def test_hessian_mixed_example(self, phi_1):
        gradient, hessian = re_gradient_hessian(phi_1, [0.0, 0.0])

        assert np.allclose(gradient, 0)
        assert np.allclose(hessian, [[3, 2], [2, 3]])

    def test_hessian_second_example(self, phi_2):
        gradient, hessian = re_gradient_hessian(phi_2, [0.0, 0.0])

        assert np.allclose(gradient, 0)
        assert np.allclose(hessian, [[2, -2], [-2, 2]])

    def test_constant_lift_has_zero_derivatives(self):
        phi = BohrLift(constant=1, terms={}, dim=3)
        gradient, hessian = re_gradient_hessian(phi, [0.1, 0.2, 0.3])

        assert not gradient.any()
        assert not hessian.any()

    def test_matches_finite_differences(self):
        """Central differences with step 1e-5 agree with the analytic values."""
        rng = np.random.default_rng(11)
        for dim in (1, 2, 3, 4):
            exponents = {tuple(int(e) for e in rng.integers(0, 3, dim)) for _ in range(6)}
            exponents.discard((0,) * dim)
            terms = {alpha: complex(*rng.uniform(-2, 2, 2)) for alpha in exponents}
            phi = BohrLift(constant=float(rng.uniform(-2, 2)), terms=terms, dim=dim)
            theta = rng.uniform(-math.pi, math.pi, dim)
            gradient, hessian = re_gradient_hessian(phi, theta)

            h = 1e-5
            for j in range(dim):
                step = np.zeros(dim)
                step[j] = h
                up = evaluate_theta(phi, theta + step)[0].real
                down = evaluate_theta(phi, theta - step)[0].real
                assert (up - down) / (2 * h) == pytest.approx(gradient[j], rel=1e-6, abs=1e-6)
                grad_up, _ = re_gradient_hessian(phi, theta + step)
                grad_down, _ = re_gradient_hessian(phi, theta - step)
                assert np.allclose((grad_up - grad_down) / (2 * h), hessian[:, j], rtol=1e-6, atol=1e-6)


class TestBoundarySearch:
    """Test cases for range analysis and boundary points."""

    def test_mixed_example_single_point(self, phi_1):
        points = find_boundary_points(phi_1)

        assert len(points) == 1
        point = points[0]
        assert np.allclose(point.theta, 0, atol=1e-6)
        assert point.index_J == 2
        assert abs(point.re_value) <= 1e-10
        assert point.gradient_norm <= 1e-8
        assert min(point.eigvals) >= -1e-8

    def test_second_example_degenerate_direction(self, phi_2):
        """One positive eigenvalue; the null direction is the diagonal."""
        points = find_boundary_points(phi_2)

        assert len(points) == 1
        point = points[0]
        assert np.allclose(point.theta, 0, atol=1e-3)
        assert point.index_J == 1
        null = np.asarray(point.eigvecs[0])
        assert abs(abs(null @ np.array([1.0, 1.0]) / math.sqrt(2)) - 1) < 1e-6

    def test_restricted_range(self):
        """3/2 - z stays at distance 1/2 from the imaginary axis."""
        analysis = range_analysis(lift_of("2 - 2^-s"))

        assert analysis.range_kind == RangeKind.RESTRICTED
        assert analysis.min_re == pytest.approx(0.5, abs=1e-9)
        assert analysis.boundary_points == []

    def test_negative_real_part_rejected(self):
        with pytest.raises(ClassMembershipError):
            find_boundary_points(lift_of("1/2 - 2^-s"))


class TestPolishSeed:
    """Test cases for polishing a single grid seed."""

    def test_seed_next_to_zero_minimum(self, phi_1):
        """A grid seed one cell away from the zero of Re phi stays finite."""
        theta, value = polish_seed(phi_1, np.array([-0.09817477, 0.09817477]))

        assert np.all(np.isfinite(theta))
        assert value <= 1e-9
        assert np.allclose(theta, 0, atol=1e-4)

    def test_degenerate_minimum_within_dedup_radius(self, phi_2):
        """Re phi = t^4 on the diagonal; refinement closes in beyond the linear Newton rate."""
        theta, value = polish_seed(phi_2, np.array([0.1, 0.1]))

        assert value <= 1e-9
        assert np.allclose(theta, 0, atol=1e-4)

    def test_seed_at_zero_is_kept(self, phi_1):
        theta, value = polish_seed(phi_1, np.zeros(2))

        assert np.allclose(theta, 0)
        assert value == pytest.approx(0, abs=1e-12)

    def test_scipy_failure_falls_back_to_newton(self, phi_1, monkeypatch):
        def broken(*args, **kwargs):
            raise ValueError("array must not contain infs or NaNs")

        monkeypatch.setattr("app.core.bohr_lift.minimize", broken)
        theta, value = polish_seed(phi_1, np.array([0.1, 0.05]))

        assert np.allclose(theta, 0, atol=1e-6)
        assert value <= 1e-9

    def test_every_seed_failing(self, phi_1, monkeypatch):
        def broken(*args, **kwargs):
            raise ValueError("array must not contain infs or NaNs")

        monkeypatch.setattr("app.core.bohr_lift.polish_seed", broken)

        with pytest.raises(ConvergenceError):
            range_analysis(phi_1)


class TestLocalExpansion:
    """Test cases for the re-expansion around boundary points."""

    def test_mixed_example_linear_terms(self, phi_1):
        expansion = local_expansion(phi_1, [0.0, 0.0])

        assert expansion.a == [3, 3]
        assert expansion.tau == 0

    def test_second_example_linear_terms(self, phi_2):
        expansion = local_expansion(phi_2, [0.0, 0.0])

        assert expansion.a == [2, 2]

    def test_single_variable(self):
        """a (1 - z1) has a = (a) and nothing of higher order."""
        phi = BohrLift(constant=Fraction(3, 2), terms={(1,): Fraction(-3, 2)}, dim=1)
        expansion = local_expansion(phi, [0.0])

        assert expansion.a == [Fraction(3, 2)]
        assert expansion.b == [0]
        assert expansion.higher.is_zero()

    def test_resummation_reproduces_phi(self, phi_2):
        """The re-expansion is an exact identity, checked at random torus points."""
        point = find_boundary_points(phi_2)[0]
        expansion = local_expansion(phi_2, point)
        rng = np.random.default_rng(3)
        z = np.exp(1j * rng.uniform(-math.pi, math.pi, (200, 2)))

        resummed = np.asarray(resum_expansion(expansion, z), dtype=complex)

        assert np.allclose(resummed, evaluate(phi_2, z), atol=1e-12)

    def test_class_violation_raises(self):
        phi = BohrLift(constant=0, terms={(1,): 1}, dim=1)

        with pytest.raises(ClassMembershipError):
            local_expansion(phi, [0.0])


class TestJuliaCaratheodory:
    """Test cases for the linear coefficient check."""

    def test_mixed_example_passes(self, phi_1):
        report = julia_caratheodory_check(local_expansion(phi_1, [0.0, 0.0]))

        assert report.passed
        assert report.a_real == [3.0, 3.0]

    def test_flat_without_linear_term_fails(self):
        """(1 - z)^2 has no positive linear coefficient."""
        phi = BohrLift(constant=1, terms={(1,): -2, (2,): 1}, dim=1)
        report = julia_caratheodory_check(local_expansion(phi, [0.0]))

        assert not report.passed
        assert not report.any_positive

    def test_zero_lift_is_degenerate(self):
        phi = BohrLift(constant=0, terms={}, dim=2)
        report = julia_caratheodory_check(local_expansion(phi, [0.0, 0.0]))

        assert report.passed
        assert report.degenerate
