"""
Tests for the theorem-based compactness classifier.
"""

import math

import pytest

from app.core.bohr_lift import make_boundary_point
from app.core.classifier import analyze_symbol, classify_compactness, local_kappa
from app.core.errors import ClassMembershipError, InconsistentInputError
from app.core.flat import build_separated_example, counterexample_factory
from app.core.symbols import parse_symbol, profile_with_range, symbol_from_lift
from app.models.lift import Verdict


class TestClassifyCompactness:
    """Test cases for the decision tree."""

    def test_mixed_example_is_compact(self):
        """Degree two in two variables."""
        _, _, _, verdict = analyze_symbol(parse_symbol("9/2 - 2^-s - 3^-s - 2*6^-s"))

        assert verdict.verdict == Verdict.COMPACT
        assert verdict.rule == "Thm4-deg≤2"
        assert verdict.boundary_index == [2]

    def test_second_example_is_compact(self):
        _, _, _, verdict = analyze_symbol(parse_symbol("13/2 - 4*2^-s - 4*3^-s + 2*6^-s"))

        assert verdict.verdict == Verdict.COMPACT
        assert verdict.rule == "Thm4-deg≤2"
        assert verdict.boundary_index == [1]

    def test_one_dimensional_symbol_is_not_compact(self):
        _, _, _, verdict = analyze_symbol(parse_symbol("3/4 - 1/4*6^-s"))

        assert verdict.verdict == Verdict.NON_COMPACT
        assert verdict.rule == "dim1"

    def test_restricted_range(self):
        _, _, _, verdict = analyze_symbol(parse_symbol("2 - 2^-s"))

        assert verdict.verdict == Verdict.COMPACT
        assert verdict.rule == "RestrictedRange"

    def test_constant_symbol(self):
        _, _, _, verdict = analyze_symbol(parse_symbol("1"))

        assert verdict.verdict == Verdict.COMPACT

    def test_separated_variables(self):
        """(1 - z1)/2 + (1 - z2)/2 is a sum of one-variable polynomials."""
        profile, _, _, verdict = analyze_symbol(parse_symbol("3/2 - 1/2*2^-s - 1/2*3^-s"))

        assert profile.separated
        assert verdict.verdict == Verdict.COMPACT
        assert verdict.rule == "Thm2"

    def test_positive_characteristic(self):
        _, _, _, verdict = analyze_symbol(parse_symbol("s + 2 + 2^-s"))

        assert verdict.verdict == Verdict.COMPACT
        assert verdict.rule == "Thm1"

    @pytest.mark.parametrize("text", ["1/2 - 2^-s", "1/2", "1/4"])
    def test_outside_the_class(self, text):
        with pytest.raises(ClassMembershipError):
            analyze_symbol(parse_symbol(text))

    def test_boundary_from_another_lift(self):
        """A boundary point where Re Phi does not vanish is rejected."""
        profile, phi, analysis = profile_with_range(parse_symbol("9/2 - 2^-s - 3^-s - 2*6^-s"))
        foreign = make_boundary_point(phi, [math.pi, math.pi])

        with pytest.raises(InconsistentInputError):
            classify_compactness(profile, phi, analysis.boundary_points + [foreign])

    def test_degenerate_counterexample_is_undetermined(self):
        """A circle of zeros with index one and degree three is outside every rule."""
        result = counterexample_factory("cex3", 0.1, poly="z2", grid=256)
        _, _, _, verdict = analyze_symbol(symbol_from_lift(result.lift))

        assert verdict.verdict == Verdict.UNDETERMINED
        assert verdict.rule == "OutsideTheory"
        assert all(j == 1 for j in verdict.boundary_index)


class TestLocalKappa:
    """Test cases for the local exponent table."""

    def test_nondegenerate_point(self):
        """Two positive eigenvalues give (1 + J) / 2."""
        profile, phi, analysis = profile_with_range(parse_symbol("9/2 - 2^-s - 3^-s - 2*6^-s"))
        kappa, case = local_kappa(phi, analysis.boundary_points[0], profile.degree, profile.separated)

        assert case == "case2"
        assert kappa == pytest.approx(1.5)

    def test_separated_orders(self):
        """Orders (4, 4) give 1 + 1/4 + 1/4 - 1/4."""
        phi = build_separated_example([4, 4], grid=512).lift
        point = make_boundary_point(phi, [0.0, 0.0])
        kappa, case = local_kappa(phi, point, degree=phi.total_degree(), separated=True)

        assert point.index_J == 0
        assert case == "separated"
        assert kappa == pytest.approx(1.25)
