"""
Tests for boundary regularity, compactness indices and approximation-number tools.
"""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from app.core.approx import (
    an_bounds,
    blaschke_bound,
    blaschke_empirical,
    blaschke_product,
    boundary_regularity,
    compactness_index,
    eta,
    hyperbolic_length,
    hyperbolic_length_fit,
    lower_bound_witness,
    omega_estimate,
    pseudo_hyperbolic,
    schatten_predicate,
    schatten_separator,
    truncated_matrix_probe,
    witness_frame,
    zeta,
)
from app.core.bohr_lift import evaluate_theta, make_boundary_point
from app.core.errors import ClassMembershipError, PreconditionError
from app.core.symbols import parse_symbol, profile_with_range
from app.models.approx import BoundForm, SchattenMembership

PHI_1 = "9/2 - 2^-s - 3^-s - 2*6^-s"
PHI_2 = "13/2 - 4*2^-s - 4*3^-s + 2*6^-s"


def regularity_at_origin(text: str):
    _, phi, _ = profile_with_range(parse_symbol(text))
    return phi, boundary_regularity(phi, make_boundary_point(phi, [0.0, 0.0]))


class TestBoundaryRegularity:
    """Test cases for the local normal form."""

    def test_degenerate_direction_has_order_four(self):
        """Along the diagonal Re phi = t^4, so the orders are (4, 2)."""
        _, profile = regularity_at_origin(PHI_2)

        assert profile.k == [4, 2]
        assert profile.b[0] == pytest.approx(-4.0, abs=1e-6)
        assert profile.b[1] == pytest.approx(0.0, abs=1e-6)
        assert np.allclose(profile.ell[0], [0.5, 0.5], atol=1e-6)
        assert eta(profile) == Fraction(1, 3)

    def test_forms_have_unit_coefficients(self):
        """Re phi = ell_1^4 + ell_2^2 + o(...) and grad Im phi = sum b_j ell_j."""
        phi, profile = regularity_at_origin(PHI_2)
        ell = np.asarray(profile.ell)
        t = 1e-2

        diagonal = np.array([t, t])
        anti = np.array([t, -t])
        assert evaluate_theta(phi, diagonal)[0].real == pytest.approx((ell[0] @ diagonal) ** 4, rel=1e-3)
        assert evaluate_theta(phi, anti)[0].real == pytest.approx((ell[1] @ anti) ** 2, rel=1e-3)
        assert np.allclose(np.asarray(profile.b) @ ell, profile.point.im_gradient, atol=1e-8)

    def test_nondegenerate_point(self):
        _, profile = regularity_at_origin(PHI_1)

        assert profile.k == [2, 2]
        assert eta(profile) == Fraction(1, 2)

    def test_compactness_index_is_minimum(self):
        _, first = regularity_at_origin(PHI_1)
        _, second = regularity_at_origin(PHI_2)
        index = compactness_index([first, second])

        assert index.eta == Fraction(1, 3)
        assert [p.eta for p in index.per_point] == [Fraction(1, 2), Fraction(1, 3)]

    def test_no_boundary_points(self):
        with pytest.raises(PreconditionError):
            compactness_index([])

    def test_negative_curvature(self):
        """A saddle of Re phi cannot come from a class member."""
        _, phi, _ = profile_with_range(parse_symbol(PHI_1))
        point = make_boundary_point(phi, [0.0, 0.0]).model_copy(update={"eigvals": [-1.0, 5.0]})

        with pytest.raises(ClassMembershipError):
            boundary_regularity(phi, point)


class TestContactExponent:
    """Test cases for the omega fit."""

    def test_nondegenerate_point_gives_two(self):
        """|Im phi| grows like the square root of Re phi."""
        phi, profile = regularity_at_origin(PHI_1)
        result = omega_estimate(phi, profile.point, samples=2**16, seed=4, kappa_hat=1.5)

        assert result.omega_hat == pytest.approx(2.0, abs=0.2)
        assert result.kappa_hat == 1.5
        assert result.levels >= 3
        assert result.C > 0

    def test_degenerate_point_gives_four(self):
        """Along the diagonal Re phi = t^4 while Im phi ~ -4t."""
        phi, profile = regularity_at_origin(PHI_2)
        result = omega_estimate(phi, profile.point, seed=4)

        assert result.omega_hat == pytest.approx(4.0, abs=0.5)
        assert result.levels >= 3

    def test_restricted_range(self):
        _, phi, _ = profile_with_range(parse_symbol("2 - 2^-s"))
        result = omega_estimate(phi, None)

        assert result.restricted_range
        assert result.omega_hat is None


class TestAnBounds:
    """Test cases for the bound curves."""

    def test_eta_form(self):
        bounds = an_bounds(1000, eta_value=Fraction(1, 3))

        assert bounds.form == BoundForm.ETA
        assert bounds.lower == pytest.approx(0.1)
        assert bounds.upper == pytest.approx((math.log(1000) / 1000) ** (1 / 3))
        assert bounds.lower < bounds.upper

    def test_contact_form(self):
        """kappa = 3/2 and omega = 2 give exponent 1/2."""
        bounds = an_bounds(100, omega=2.0, kappa=1.5)

        assert bounds.form == BoundForm.CONTACT
        assert bounds.exponent == pytest.approx(0.5)

    def test_exponential_forms(self):
        printed = an_bounds(100, omega=1.0)
        corrected = an_bounds(100, omega=1.0, exponential_form="corrected")

        assert printed.form == BoundForm.EXPONENTIAL
        assert printed.upper == pytest.approx(math.exp(-0.1))
        assert corrected.upper == pytest.approx(math.exp(-10))

    def test_kappa_only(self):
        bounds = an_bounds(50, kappa=2.0)

        assert bounds.form == BoundForm.KAPPA_ONLY
        assert bounds.exponent == pytest.approx(0.5)

    @pytest.mark.parametrize(
        "kwargs",
        [{"n": 1, "kappa": 1.5}, {"n": 10}, {"n": 10, "omega": 0.5, "exponential_form": "other"}],
    )
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(PreconditionError):
            an_bounds(**kwargs)


class TestSchatten:
    """Test cases for Schatten membership."""

    @pytest.mark.parametrize(
        "value, p, expected",
        [
            (Fraction(1, 3), 3, SchattenMembership.NOT_IN_SP),
            (Fraction(1, 3), 4, SchattenMembership.IN_SP),
            (Fraction(1, 2), 2, SchattenMembership.NOT_IN_SP),
        ],
    )
    def test_predicate(self, value, p, expected):
        assert schatten_predicate(value, p) == expected

    def test_separator(self):
        """Two variables with quadratic contact give eta = 1/2, in S_4 but not in S_1."""
        recipe = schatten_separator(1, 4)

        assert (recipe.d, recipe.k) == (2, 2)
        assert recipe.eta == Fraction(1, 2)
        assert recipe.in_q == SchattenMembership.IN_SP
        assert recipe.in_p == SchattenMembership.NOT_IN_SP
        assert recipe.construction is None

    def test_separator_needs_flatter_contact(self):
        recipe = schatten_separator(Fraction(1, 2), 1)

        assert recipe.eta * 1 > 1 >= recipe.eta * Fraction(1, 2)

    def test_invalid_exponents(self):
        with pytest.raises(PreconditionError):
            schatten_separator(4, 1)


class TestHyperbolicGeometry:
    """Test cases for region lengths and Blaschke products."""

    def test_linear_contact_length(self):
        """For omega = 1 the curved sides have constant speed sqrt(1 + C^2) in log Re s."""
        result = hyperbolic_length(1.0, 1e-3, 2.0)

        assert result.gamma1 == pytest.approx(4.0)
        assert result.gamma3 == pytest.approx(2 * math.sqrt(5) * math.log(2e3))
        assert result.quadrature_change < 1e-12

    def test_quadrature_converges(self):
        """Doubling the Gauss-Legendre nodes shrinks the change geometrically."""
        changes = [hyperbolic_length(2.0, 1e-6, 2.0, nodes=n).quadrature_change for n in (8, 16, 32)]

        assert changes[0] > changes[1] > changes[2]
        assert hyperbolic_length(2.0, 1e-6, 2.0, nodes=128).quadrature_change < 1e-10

    def test_length_growth(self):
        fit = hyperbolic_length_fit(2.0)

        assert fit.slope == pytest.approx(fit.predicted, abs=0.03)
        assert fit.r2 > 0.99

    def test_logarithmic_growth(self):
        fit = hyperbolic_length_fit(1.0)

        assert fit.slope == pytest.approx(2 * math.sqrt(5))

    def test_invalid_region(self):
        with pytest.raises(PreconditionError):
            hyperbolic_length(0.5, 1e-3, 2.0)

    def test_pseudo_hyperbolic(self):
        assert pseudo_hyperbolic(1 + 0j, 1 + 0j) == 0
        assert pseudo_hyperbolic(1 + 0j, 3 + 0j) == pytest.approx(0.5)
        with pytest.raises(PreconditionError):
            pseudo_hyperbolic(-1 + 0j, 1 + 0j)

    def test_blaschke_product_on_axis(self):
        zeros = [1 + 1j, 2 - 0.5j]
        values = blaschke_product(zeros, np.array([0.0 + 3j, 1 + 1j]))

        assert abs(values[0]) == pytest.approx(1.0)
        assert abs(values[1]) == pytest.approx(0.0)

    def test_blaschke_bound(self):
        """The Riemann form equals -n c(L) / L and sits below the sum of log tanh."""
        bound = blaschke_bound(20, 3.0)

        assert bound.riemann_log == pytest.approx(-20 * bound.lemma_constant / 3.0, rel=1e-6)
        assert bound.log_product >= bound.riemann_log
        assert bound.log_product < 0

    @pytest.mark.parametrize("n, L", [(0, 2.0), (5, 0.5)])
    def test_blaschke_bound_invalid(self, n, L):
        with pytest.raises(PreconditionError):
            blaschke_bound(n, L)

    def test_blaschke_empirical(self):
        bound = blaschke_empirical(8, 2.0, 1e-2, 2.0, samples=500, interior=32)

        assert bound.curve_length > 0
        assert 0 < bound.empirical_max < 1


class TestZeta:
    """Test cases for the accelerated zeta series."""

    def test_even_values(self):
        assert zeta(2) == pytest.approx(math.pi**2 / 6, rel=1e-12)
        assert zeta(4) == pytest.approx(math.pi**4 / 90, rel=1e-12)

    def test_near_one(self):
        """zeta(1 + x) ~ 1/x + Euler's constant."""
        assert zeta(1.001) == pytest.approx(1000 + 0.5772156649, rel=1e-6)

    def test_first_zero(self):
        assert abs(zeta(0.5 + 14.134725141734693j)) < 1e-8

    def test_matches_mpmath(self):
        s = 2.5 + 3j
        assert zeta(s) == pytest.approx(complex(mpmath.zeta(s)), rel=1e-10)

    @pytest.mark.parametrize("s", [1, 0, -2])
    def test_outside_domain(self, s):
        with pytest.raises(PreconditionError):
            zeta(s)


class TestLatticeWitness:
    """Test cases for the lower-bound witness."""

    def test_nu_below_floor(self):
        phi, profile = regularity_at_origin(PHI_2)

        with pytest.raises(PreconditionError):
            lower_bound_witness(phi, profile, 0.01, nu=1.0)

    def test_delta_too_large(self):
        phi, profile = regularity_at_origin(PHI_2)

        with pytest.raises(PreconditionError):
            lower_bound_witness(phi, profile, 0.2)

    def test_degenerate_example_witness(self):
        """delta = 1e-3 gives 177 heights with 31 preimages each."""
        phi, profile = regularity_at_origin(PHI_2)
        witness = lower_bound_witness(phi, profile, 1e-3)

        assert witness.s_count == 177
        assert witness.preimages_required == 31
        assert witness.passed(1e-10)
        assert len(witness_frame(witness)) == 177 * 31


class TestMatrixProbe:
    """Test cases for the truncated composition matrix."""

    def test_small_probe(self):
        result = truncated_matrix_probe(parse_symbol(PHI_1), M=16, D=8)

        assert result.rows == 81
        assert len(result.singular_values) == 16
        assert result.singular_values == sorted(result.singular_values, reverse=True)
        assert result.column_mass[0] == pytest.approx(1.0)
        assert result.decay_exponent is not None

    def test_singular_values_grow_with_columns(self):
        """Adding columns never lowers the k-th singular value."""
        small = truncated_matrix_probe(parse_symbol(PHI_1), M=8, D=8)
        large = truncated_matrix_probe(parse_symbol(PHI_1), M=16, D=8)

        assert small.rows == large.rows
        for k in range(8):
            assert large.singular_values[k] >= small.singular_values[k] - 1e-12

    def test_positive_characteristic_rejected(self):
        with pytest.raises(PreconditionError):
            truncated_matrix_probe(parse_symbol("s + 2 + 2^-s"), M=8, D=4)

    def test_column_cap(self):
        with pytest.raises(PreconditionError):
            truncated_matrix_probe(parse_symbol(PHI_1), M=600, D=4)
