"""
Harness tests: Wilson intervals, the exact stop-time oracle, sampler vs.
oracle agreement, reproducibility and the grid experiments.
"""

import math

import numpy as np
import pytest

from src.models.schemas import AlgorithmConfig, ProblemInstance, SearchMode
from src.services.analytic import SUCCESS_FLOOR_GRID
from src.services.harness import (
    HarnessError,
    HorizonOverflow,
    binomial_sigma,
    chi_square_agreement,
    compare_modes,
    exact_stop_distribution,
    monte_carlo,
    scaling_fit,
    sweep,
    wilson_interval,
)


# =============================================================================
# STATISTICS
# =============================================================================

class TestWilsonInterval:

    def test_contains_estimate(self):
        for k, n in ((0, 10), (3, 10), (10, 10), (500, 1000)):
            low, high = wilson_interval(k, n)
            assert 0.0 <= low <= k / n <= high <= 1.0

    def test_zero_successes_start_at_zero(self):
        assert wilson_interval(0, 50)[0] == 0.0

    def test_invalid_counts(self):
        with pytest.raises(HarnessError):
            wilson_interval(1, 0)
        with pytest.raises(HarnessError):
            wilson_interval(5, 3)

    def test_coverage_on_synthetic_streams(self):
        rng = np.random.default_rng(99)
        truth = 0.3
        covered = 0
        streams = 2000
        for successes in rng.binomial(100, truth, size=streams):
            low, high = wilson_interval(int(successes), 100)
            covered += low <= truth <= high
        assert covered / streams >= 0.93


# =============================================================================
# EXACT ORACLE
# =============================================================================

class TestExactStopDistribution:

    def test_first_sample_at_half(self):
        dist = exact_stop_distribution(0.5, AlgorithmConfig(burn_in=0), horizon=1)
        assert dist.stop_probabilities[0] == pytest.approx(0.5)
        assert dist.truncated_mass == pytest.approx(0.5)

    @pytest.mark.parametrize("p, burn_in", [(1 / 256, 0), (1 / 256, 25), (1 / 16, 25), (0.25, 0)])
    def test_mass_conservation(self, p, burn_in):
        dist = exact_stop_distribution(p, AlgorithmConfig(burn_in=burn_in))
        assert all(prob >= 0.0 for prob in dist.stop_probabilities)
        assert dist.stopped_mass + dist.truncated_mass == pytest.approx(1.0, abs=1e-12)

    def test_burn_in_delays_first_stop(self):
        dist = exact_stop_distribution(1 / 16, AlgorithmConfig(burn_in=25))
        assert sum(dist.stop_probabilities[:24]) == 0.0

    def test_measure_after_rotation_shifts_g(self):
        dist = exact_stop_distribution(0.25, AlgorithmConfig(burn_in=0, measure_after_rotation=True), horizon=4)
        assert dist.g_measured[0] == pytest.approx(1.0)

    def test_horizon_overflow(self):
        with pytest.raises(HorizonOverflow):
            exact_stop_distribution(0.25, AlgorithmConfig(), horizon=10_001)

    def test_dephased_trajectory(self):
        dist = exact_stop_distribution(0.25, AlgorithmConfig(mode=SearchMode.DEPHASED_DENSITY), horizon=3)
        assert dist.g_measured[1] == pytest.approx(0.625)


# =============================================================================
# SAMPLER VS ORACLE
# =============================================================================

def _assert_agreement(p: float, burn_in: int, trials: int, seed: int):
    problem = ProblemInstance.from_fraction(p)
    config = AlgorithmConfig(burn_in=burn_in)
    stats = monte_carlo(problem, config, trials, seed)
    dist = exact_stop_distribution(problem, config)

    sigma = binomial_sigma(dist.per_attempt_success, stats.attempts_total)
    assert abs(stats.per_attempt_success_rate - dist.per_attempt_success) <= 3 * sigma + 1e-12
    _, p_value = chi_square_agreement(stats.stop_histogram, dist)
    assert p_value > 0.001


class TestOracleAgreement:

    def test_quarter_without_burn_in(self):
        _assert_agreement(0.25, 0, trials=4000, seed=11)

    def test_sixteenth_with_burn_in(self):
        _assert_agreement(1 / 16, 25, trials=2000, seed=12)

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [1 / 256, 1 / 16, 0.25])
    @pytest.mark.parametrize("burn_in", [0, 25])
    def test_acceptance_scale(self, p, burn_in):
        _assert_agreement(p, burn_in, trials=100_000, seed=2024)


# =============================================================================
# MONTE CARLO
# =============================================================================

class TestMonteCarlo:

    def test_all_marked(self):
        stats = monte_carlo(ProblemInstance.from_fraction(1.0), AlgorithmConfig(), 50, seed=1)
        assert stats.success_rate == 1.0
        assert stats.ci_high == 1.0

    def test_canonical_quarter(self):
        stats = monte_carlo(ProblemInstance.from_fraction(0.25), AlgorithmConfig(), 500, seed=1,
                            algorithm="canonical")
        assert stats.success_rate == 1.0
        assert stats.mean_queries == 1.0

    def test_identical_seeds_identical_stats(self):
        problem = ProblemInstance.from_fraction(1 / 16)
        first = monte_carlo(problem, AlgorithmConfig(), 300, seed=5)
        second = monte_carlo(problem, AlgorithmConfig(), 300, seed=5)
        assert first.model_dump() == second.model_dump()

    def test_worker_count_does_not_change_results(self):
        problem = ProblemInstance.from_fraction(1 / 16)
        serial = monte_carlo(problem, AlgorithmConfig(), 1100, seed=8, workers=1)
        parallel = monte_carlo(problem, AlgorithmConfig(), 1100, seed=8, workers=2)
        assert serial.model_dump() == parallel.model_dump()

    def test_histogram_counts_every_attempt(self):
        stats = monte_carlo(ProblemInstance.from_fraction(1 / 64), AlgorithmConfig(), 200, seed=3)
        assert sum(stats.stop_histogram.values()) == stats.attempts_total

    def test_no_trials(self):
        with pytest.raises(HarnessError):
            monte_carlo(ProblemInstance.from_fraction(0.25), AlgorithmConfig(), 0, seed=1)


# =============================================================================
# GRIDS
# =============================================================================

class TestGrids:

    def test_empty_sweep(self):
        assert sweep([], AlgorithmConfig(), 10, seed=1) == []

    def test_sweep_rows_ordered_by_p(self):
        problems = [ProblemInstance.from_fraction(p) for p in (0.5, 1 / 16, 0.25)]
        rows = sweep(problems, AlgorithmConfig(), 100, seed=1)
        assert [row.p for row in rows] == [1 / 16, 0.25, 0.5]
        assert all(row.g_expected >= 0.5 for row in rows)
        assert all(row.ci_lo <= row.success_rate <= row.ci_hi for row in rows)

    def test_scaling_claims(self):
        fit = scaling_fit([2 ** e for e in range(10, 21)], AlgorithmConfig())
        assert len(fit.rows) == 11
        assert fit.slope == pytest.approx(0.5, abs=0.03)
        assert fit.limiting_ratio == pytest.approx(2.0, abs=0.1)
        assert fit.r_stop_over_sqrt_n == pytest.approx(math.pi / 4, rel=0.05)
        for row in fit.rows:
            if row.N >= 2 ** 14:
                assert row.ratio == pytest.approx(2.0, abs=0.1)

    def test_degenerate_grid(self):
        with pytest.raises(HarnessError) as exc:
            scaling_fit([2 ** 10, 2 ** 11, 2 ** 12], AlgorithmConfig())
        assert "Degenerate grid" in exc.value.message

    def test_success_floor_grid_expectation(self):
        rows = sweep([ProblemInstance.from_fraction(p) for p in SUCCESS_FLOOR_GRID[-3:]],
                     AlgorithmConfig(), 50, seed=4)
        assert all(row.g_expected >= 0.5 for row in rows)

    def test_compare_modes(self):
        comparison = compare_modes(ProblemInstance.from_qubits(6, m=1), AlgorithmConfig(), 100, seed=6)
        assert set(comparison.stats) == {"ideal", "dephased", "full"}
        assert comparison.success_rate_divergence == pytest.approx(
            comparison.stats["dephased"].success_rate - comparison.stats["ideal"].success_rate
        )
