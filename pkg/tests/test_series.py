"""
Tests for truncated multivariate power series.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from app.core.errors import DimensionMismatchError, PreconditionError, SeriesCapMismatchError
from app.core.series import TruncatedSeries


class TestConstruction:
    """Test cases for building series."""

    def test_monomials_above_cap_are_dropped(self):
        """Coefficients of total degree above the cap never enter the series."""
        series = TruncatedSeries(2, 2, {(0, 0): 1, (1, 1): 3, (2, 1): 5})

        assert series.coeff((2, 1)) == 0
        assert series.degree == 2

    def test_zero_coefficients_are_dropped(self):
        series = TruncatedSeries(1, 3, {(0,): 0, (1,): Fraction(1, 2)})

        assert list(series.items()) == [((1,), Fraction(1, 2))]

    def test_index_length_mismatch(self):
        """A multi-index with the wrong length is rejected."""
        with pytest.raises(DimensionMismatchError):
            TruncatedSeries(2, 3, {(1,): 1})

    def test_dense_round_trip_keeps_values(self):
        series = TruncatedSeries(2, 3, {(0, 0): 1.5, (2, 1): -2.0})
        rebuilt = TruncatedSeries.from_dense(series.to_dense(float), 3)

        assert rebuilt.coeff((2, 1)) == -2.0
        assert rebuilt.constant_term == 1.5


class TestArithmetic:
    """Test cases for ring operations."""

    def test_exact_product_stays_rational(self):
        """(1 + x/2)^2 has exact coefficients 1, 1, 1/4."""
        x = TruncatedSeries.variable(1, 4, 0, Fraction(1, 2))
        square = (1 + x) ** 2

        assert square.is_exact
        assert square.coeff((0,)) == 1
        assert square.coeff((1,)) == 1
        assert square.coeff((2,)) == Fraction(1, 4)

    def test_product_is_truncated(self):
        x = TruncatedSeries.variable(1, 3, 0)

        assert (x**2 * x**2).is_zero()

    def test_cap_mismatch(self):
        """Series with different caps cannot be combined."""
        with pytest.raises(SeriesCapMismatchError):
            TruncatedSeries.variable(1, 3, 0) + TruncatedSeries.variable(1, 4, 0)

    def test_negative_power_rejected(self):
        with pytest.raises(PreconditionError):
            TruncatedSeries.variable(1, 3, 0) ** -1

    def test_dense_product_matches_sparse(self):
        """The FFT path agrees with the pairwise product for large float series."""
        rng = np.random.default_rng(7)
        cap = 20
        coeffs = {
            (i, j): float(rng.normal())
            for i in range(cap + 1)
            for j in range(cap + 1 - i)
        }
        left = TruncatedSeries(2, cap, coeffs)
        right = TruncatedSeries(2, cap, {k: v * 0.5 for k, v in coeffs.items()})

        dense = left * right
        sparse = left._mul_sparse(right)

        assert dense.is_close(sparse, tol=1e-9)

    def test_ring_axioms(self):
        """Exact random series satisfy the commutative ring laws modulo the cap."""
        rng = np.random.default_rng(23)

        def random_series() -> TruncatedSeries:
            coeffs = {
                (i, j): Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 5)))
                for i in range(5)
                for j in range(5 - i)
            }
            return TruncatedSeries(2, 4, coeffs)

        one = TruncatedSeries.constant(2, 4, 1)
        zero = TruncatedSeries.zero(2, 4)
        for _ in range(10):
            a, b, c = random_series(), random_series(), random_series()

            assert a + b == b + a
            assert (a + b) + c == a + (b + c)
            assert a * b == b * a
            assert (a * b) * c == a * (b * c)
            assert a * (b + c) == a * b + a * c
            assert a * one == a
            assert a + zero == a
            assert (a - a).is_zero()

    def test_division_by_exact_scalar(self):
        series = TruncatedSeries.constant(1, 2, 3) / 4

        assert series.constant_term == Fraction(3, 4)


class TestElementaryFunctions:
    """Test cases for exp, cos and sin of series."""

    def test_exp_of_variable(self):
        """exp(x) has coefficients 1/k!."""
        x = TruncatedSeries.variable(1, 6, 0)
        series = x.exp()

        for k in range(7):
            assert series.coeff((k,)) == Fraction(1, math.factorial(k))

    def test_cos_squared_plus_sin_squared(self):
        """cos^2 + sin^2 = 1 holds exactly through the cap."""
        x = TruncatedSeries(2, 6, {(1, 0): Fraction(1, 3), (0, 1): Fraction(-2, 5)})
        identity = x.cos() ** 2 + x.sin() ** 2

        assert identity == TruncatedSeries.constant(2, 6, 1)

    def test_cos_with_constant_term(self):
        """cos(a + x) evaluated at a small point matches math.cos."""
        x = TruncatedSeries.variable(1, 10, 0) + 0.3
        value = x.cos().evaluate([0.05])

        assert value == pytest.approx(math.cos(0.35), abs=1e-12)

    def test_compose_needs_zero_constant(self):
        with pytest.raises(PreconditionError):
            TruncatedSeries.constant(1, 3, 1).compose_univariate([1, 1])


class TestStructure:
    """Test cases for substitution and projection."""

    def test_linear_substitute(self):
        """x0 x1 with x0 = y0 + y1 and x1 = y0 - y1 gives y0^2 - y1^2."""
        series = TruncatedSeries(2, 2, {(1, 1): 1})
        result = series.linear_substitute([[1, 1], [1, -1]])

        assert result.coeff((2, 0)) == 1
        assert result.coeff((0, 2)) == -1
        assert result.coeff((1, 1)) == 0

    def test_homogeneous_part(self):
        series = TruncatedSeries(2, 3, {(0, 0): 1, (1, 0): 2, (2, 0): 3, (1, 1): 4})

        part = series.homogeneous(2)

        assert dict(part.items()) == {(2, 0): 3, (1, 1): 4}

    def test_real_and_imaginary_parts(self):
        series = TruncatedSeries(1, 2, {(1,): 1 + 2j, (2,): Fraction(1, 2)})

        assert series.real_part().coeff((1,)) == 1.0
        assert series.imag_part().coeff((1,)) == 2.0
        assert series.imag_part().coeff((2,)) == 0

    def test_to_json(self):
        series = TruncatedSeries(1, 2, {(2,): Fraction(1, 2)})

        assert series.to_json() == [{"index": [2], "c": [0.5, 0.0]}]
