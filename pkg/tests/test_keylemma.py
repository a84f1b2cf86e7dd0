"""
Tests for the two-variable Taylor factorization laboratory.
"""

from fractions import Fraction

import numpy as np
import pytest

from app.core.bohr_lift import evaluate
from app.core.errors import PreconditionError
from app.core.keylemma import (
    attempt_factorization,
    conditioned_params,
    expand_phi_uv,
    keylemma_equations,
    keylemma_lift,
    keylemma_step2_geometry,
    keylemma_step3_roots,
    keylemma_sweep,
    re_phi_at_minus_one,
    series_arith,
    triangle_grid,
)
from app.core.series import TruncatedSeries
from app.models.keylemma import KeylemmaParams

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


@pytest.fixture
def real_params():
    """a1 = 1/2, a2 = 1/4 with every imaginary part zero."""
    return conditioned_params(HALF, QUARTER, 0)


class TestSeriesExpansion:
    """Test cases for the (u, v) expansion of phi."""

    def test_leading_terms(self, real_params):
        """Re phi starts with (2 a1 a2)^2 u^2 and Im phi with -2 a1 a2 u."""
        re, im = expand_phi_uv(real_params)

        assert re.coeff((2, 0)) == Fraction(1, 16)
        assert re.coeff((1, 1)) == 0
        assert re.coeff((0, 2)) == 0
        assert im.coeff((1, 0)) == Fraction(-1, 4)
        assert im.coeff((0, 1)) == 0

    def test_real_parameters_give_even_real_part(self, real_params):
        re, im = expand_phi_uv(real_params)

        assert re.coeff((0, 3)) == 0
        assert im.coeff((0, 2)) == 0

    def test_outside_triangle(self):
        with pytest.raises(PreconditionError):
            expand_phi_uv(KeylemmaParams(a1=Fraction(3, 4), a2=Fraction(1, 2)))

    def test_series_arith_dispatch(self):
        x = TruncatedSeries.variable(2, 3, 0)

        assert series_arith("mul", x, x).coeff((2, 0)) == 1
        assert series_arith("coeff", x, (1, 0)) == 1
        with pytest.raises(PreconditionError):
            series_arith("pow", x, 2)


class TestFactorization:
    """Test cases for the order-by-order solve."""

    def test_real_parameters_blocked_at_fourth_order(self, real_params):
        """The v^4 coefficient of Re phi is the first unmet condition."""
        attempt = attempt_factorization(real_params)

        assert not attempt.factorizes()
        assert attempt.obstruction.part == "Re"
        assert attempt.obstruction.index == [0, 4]
        assert attempt.obstruction.residual == Fraction(9, 4096)

    def test_conditions_are_visited_in_order(self, real_params):
        attempt = attempt_factorization(real_params)

        assert [(c.part, c.index[1]) for c in attempt.conditions] == [
            ("Re", 3),
            ("Im", 2),
            ("Re", 4),
            ("Im", 3),
            ("Re", 5),
            ("Im", 4),
        ]

    def test_square_factorizes(self):
        """a1 = a2 = 1/2 with zero imaginary parts gives Phi = (1 - z1 z2) / 2."""
        attempt = attempt_factorization(conditioned_params(HALF, HALF, 0))

        assert attempt.factorizes()
        assert attempt.obstruction is None
        assert all(c.residual == 0 for c in attempt.conditions)

    def test_conditioned_params_clear_lowest_conditions(self):
        """Closed-form Im b1, Im b2 satisfy the Re v^3 and Im v^2 conditions exactly."""
        params = conditioned_params(HALF, QUARTER, Fraction(1, 3))
        attempt = attempt_factorization(params)

        assert attempt.conditions[0].residual == 0
        assert attempt.conditions[1].residual == 0


class TestCoefficientIdentities:
    """Test cases for the residual report."""

    def test_exact_real_parameters(self, real_params):
        report = keylemma_equations(real_params)

        for name in ("re_v3", "im_v2", "gamma02", "re_v4_coefficient", "im_b_closed_forms", "imc2_from_re_v4"):
            assert report.entry(name).residual == 0
        assert report.tolerance == 0.0

    def test_cubic_identity_with_imaginary_parts(self):
        """The Re v^3 coefficient is linear in Im b1, Im b2 and Im c."""
        params = KeylemmaParams(
            a1=HALF, a2=QUARTER, im_b1=Fraction(1, 5), im_b2=Fraction(1, 7), im_c=Fraction(1, 3)
        )
        report = keylemma_equations(params)

        assert report.entry("re_v3").residual == 0
        assert report.entry("re_v3_printed_sign").residual != 0
        assert not report.entry("re_v3_printed_sign").counted

    def test_binary64_parameters(self):
        """200 random admissible points with Im b1, Im b2 from their closed forms."""
        rng = np.random.default_rng(5)
        for _ in range(200):
            a1 = float(rng.uniform(0.05, 0.95))
            a2 = float(rng.uniform(0.01, min(a1, 1 - a1)))
            params = conditioned_params(a1, a2, float(rng.uniform(-1, 1)))
            report = keylemma_equations(params)

            assert report.entry("re_v3").residual <= 1e-10
            assert report.entry("im_b_closed_forms").residual <= 1e-10

    def test_diagonal_skips_off_diagonal_identity(self):
        report = keylemma_equations(conditioned_params(Fraction(1, 3), Fraction(1, 3), 0))

        assert not report.entry("imc2_from_im_v3").applicable
        assert report.entry("imc2_diagonal").note != "needs a1 = a2"


class TestMinusOne:
    """Test cases for Phi(-1, -1)."""

    def test_closed_form(self):
        params = conditioned_params(HALF, QUARTER, Fraction(1, 3))

        assert re_phi_at_minus_one(params) == Fraction(3, 4)
        value = evaluate(keylemma_lift(params), np.array([-1.0, -1.0]))
        assert value.real == pytest.approx(0.75)

    def test_lift_vanishes_at_one(self, real_params):
        value = evaluate(keylemma_lift(real_params), np.array([1.0, 1.0]))

        assert abs(value) < 1e-15


class TestTriangleGeometry:
    """Test cases for the sign analysis of P on the admissible triangle."""

    def test_negative_on_edges(self):
        report = keylemma_step2_geometry(samples=201, interior_grid=50)

        assert report.negative_on_boundary
        assert all(c.closed_form_residual < 1e-12 for c in report.curves)
        assert report.interior_max < 0

    def test_critical_points(self):
        """Real critical points of P are (0, 0) and (1/3, 1/3); the pair on a1 + a2 = 9/5 is complex."""
        report = keylemma_step2_geometry(samples=21, interior_grid=10)

        assert len(report.critical_points) == 2
        assert np.allclose(report.critical_points, [[0.0, 0.0], [1 / 3, 1 / 3]], atol=1e-9)
        assert report.complex_critical_points == 2

    def test_step_three_roots(self):
        """Only a = 0 and a = 3/4 solve the diagonal equation; neither lies in (0, 1/2]."""
        report = keylemma_step3_roots()

        assert report.roots == ["0", "3/4"]
        assert report.admissible_roots == []


class TestSweep:
    """Test cases for the triangle sweep."""

    def test_grid_points(self):
        points = triangle_grid(3)

        assert len(points) == 6
        assert all(0 < a2 <= min(a1, 1 - a1) for a1, a2 in points)

    def test_sweep_finds_obstructions(self):
        report = keylemma_sweep(3)

        assert len(report.cells) == 6
        assert report.factorizing == []
        assert all(c.obstruction_part in ("Re", "Im") for c in report.cells)

    def test_twenty_grid_factorizes_only_at_square(self):
        """Every node of the 20 x 20 grid except (1/2, 1/2) meets an obstruction."""
        report = keylemma_sweep(20)

        assert len(report.cells) == 380
        assert report.factorizing == [[0.5, 0.5]]
        for c in report.cells:
            if c.obstruction_part == "Re":
                assert c.obstruction_index[1] <= 5
            elif c.obstruction_part == "Im":
                assert c.obstruction_index[1] <= 4

    def test_empty_grid_rejected(self):
        with pytest.raises(PreconditionError):
            triangle_grid(0)
