"""
Model tests: problem fractions and their validation.
"""

import math

import pytest

from src.models.schemas import ProblemInstance, TargetFraction


class TestTargetFraction:

    def test_from_counts(self):
        frac = TargetFraction.from_counts(3, 12)
        assert frac.p == 0.25
        assert frac.theta == pytest.approx(math.pi / 6)

    def test_all_marked(self):
        assert TargetFraction.from_counts(5, 5).theta == pytest.approx(math.pi / 2)

    @pytest.mark.parametrize("m,n_items", [(0, 4), (5, 4), (1, 0), (-1, 4)])
    def test_from_counts_bounds(self, m, n_items):
        with pytest.raises(ValueError):
            TargetFraction.from_counts(m, n_items)


class TestProblemInstance:

    def test_fraction_follows_counts(self):
        problem = ProblemInstance.from_counts(m=2, n_items=64)
        assert problem.fraction == TargetFraction.from_counts(2, 64)

    def test_from_fraction_finds_smallest_denominator(self):
        problem = ProblemInstance.from_fraction(0.1)
        assert (problem.m, problem.n_items) == (1, 10)

    def test_tiny_fraction_rejected(self):
        with pytest.raises(ValueError):
            ProblemInstance.from_fraction(1e-13)

    def test_smallest_power_of_two_accepted(self):
        problem = ProblemInstance.from_fraction(2.0 ** -40)
        assert (problem.m, problem.n_items) == (1, 2 ** 40)

    def test_out_of_range_fraction(self):
        with pytest.raises(ValueError):
            ProblemInstance.from_fraction(0.0)
        with pytest.raises(ValueError):
            ProblemInstance.from_fraction(1.5)
