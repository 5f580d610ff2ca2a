"""
State-evolution tests: statevector Grover against the closed form, the
2-D angle model, the cloning channel and the 2x2 density matrix.
"""

import math

import numpy as np
import pytest

from src.models.schemas import CloneChannel, TwoDimState
from src.services.analytic import success_probability
from src.services.engine import (
    NORM_TOLERANCE,
    DensityMatrix2,
    EngineError,
    Register,
    RegisterTooLarge,
    ancilla_distribution,
    ancilla_zero_probability,
    channel_output_density,
    dephase_2d,
    grover_step_2d,
    grover_step_density,
    grover_step_full,
    sample_ancilla,
    apply_diffusion_full,
    apply_oracle_full,
    success_prob_full,
    trial_rng,
)


@pytest.fixture
def channel():
    return CloneChannel()


class TestStatevector:

    def test_grover_matches_closed_form(self):
        """n = 2..10, m in {1, 2, N/4, N/2}, r = 0..30."""
        worst = 0.0
        for n in range(2, 11):
            size = 2 ** n
            for m in sorted({1, 2, size // 4, size // 2}):
                register = Register.uniform(n, range(m))
                for r in range(31):
                    exact = success_probability(m / size, r)
                    worst = max(worst, abs(success_prob_full(register) - exact))
                    grover_step_full(register)
        assert worst <= 1e-9

    def test_norm_preserved(self):
        register = Register.uniform(6, [3, 17, 40])
        for _ in range(20):
            grover_step_full(register)
        assert register.norm() == pytest.approx(1.0, abs=1e-12)

    def test_oracle_and_diffusion_are_involutions(self):
        rng = np.random.default_rng(5)
        raw = rng.normal(size=64) + 1j * rng.normal(size=64)
        register = Register(6, raw / np.linalg.norm(raw), [1, 9, 33])
        start = register.amplitudes.copy()
        apply_oracle_full(apply_oracle_full(register))
        assert np.max(np.abs(register.amplitudes - start)) <= 1e-12
        apply_diffusion_full(apply_diffusion_full(register))
        assert np.max(np.abs(register.amplitudes - start)) <= 1e-12

    def test_norm_conserved_over_random_applications(self):
        rng = np.random.default_rng(11)
        register = Register.uniform(5, [4, 21])
        for choice in rng.integers(0, 2, size=10_000):
            if choice:
                apply_oracle_full(register)
            else:
                apply_diffusion_full(register)
            assert abs(register.norm() - 1.0) <= 1e-10

    def test_unnormalized_amplitudes_rejected(self):
        with pytest.raises(EngineError):
            Register(2, np.ones(4), [0])
        Register(2, np.full(4, 0.5) * (1.0 + NORM_TOLERANCE / 10), [0])

    def test_qubit_cap(self, override_settings):
        override_settings(statevector_max_qubits=4)
        with pytest.raises(RegisterTooLarge):
            Register.uniform(5, [0])

    def test_target_out_of_range(self):
        with pytest.raises(EngineError):
            Register.uniform(3, [8])


class TestAngleModel:

    def test_step_adds_twice_theta0(self):
        theta0 = math.pi / 6
        state = grover_step_2d(TwoDimState(theta=theta0), theta0)
        assert state.theta == pytest.approx(3 * theta0)
        assert state.success_probability == pytest.approx(1.0)

    def test_invalid_theta0(self):
        with pytest.raises(EngineError):
            grover_step_2d(TwoDimState(theta=0.1), 0.0)

    def test_negative_angle_rejected(self):
        with pytest.raises(ValueError):
            TwoDimState(theta=-0.1)


class TestCloningChannel:

    def test_outcome_probabilities(self, channel):
        assert ancilla_distribution(0.0, channel) == pytest.approx(1.0 / 3.0)
        assert ancilla_distribution(1.0, channel) == pytest.approx(2.0 / 3.0)
        for g in (0.0, 0.2, 0.9):
            assert ancilla_distribution(g, channel) + ancilla_zero_probability(g, channel) == pytest.approx(1.0)

    def test_density_diagonal_matches_outcomes(self, channel):
        rho = channel_output_density(0.3, channel)
        assert rho.target_weight == pytest.approx(ancilla_distribution(0.3, channel))
        assert rho.non_target_weight == pytest.approx(ancilla_zero_probability(0.3, channel))

    def test_out_of_range_probability(self, channel):
        with pytest.raises(EngineError):
            ancilla_distribution(1.5, channel)

    def test_sample_frequency(self):
        rng = trial_rng(7, 0)
        draws = [sample_ancilla(0.4, rng) for _ in range(20000)]
        assert np.mean(draws) == pytest.approx(0.4, abs=0.02)

    def test_sample_mean_within_three_sigma(self):
        rng = trial_rng(2024, 0)
        n = 1_000_000
        draws = [sample_ancilla(1.0 / 3.0, rng) for _ in range(n)]
        sigma = math.sqrt((1.0 / 3.0) * (2.0 / 3.0) / n)
        assert abs(np.mean(draws) - 1.0 / 3.0) <= 3.0 * sigma

    def test_output_density_coherence(self, channel):
        rho = channel_output_density(math.sin(math.pi / 4) ** 2, channel)
        assert rho.matrix[0, 1].real == pytest.approx(1.0 / 6.0, abs=1e-15)
        assert rho.matrix[1, 0].real == pytest.approx(1.0 / 6.0, abs=1e-15)
        assert rho.trace == pytest.approx(1.0, abs=1e-12)


class TestDensityMatrix:

    def test_pure_state_weights(self):
        rho = DensityMatrix2.pure(math.pi / 6)
        assert rho.target_weight == pytest.approx(0.25)
        assert rho.trace == pytest.approx(1.0)

    def test_dephased_rotation(self):
        theta0 = math.pi / 6
        rho = grover_step_density(dephase_2d(DensityMatrix2.pure(theta0)), theta0)
        assert rho.target_weight == pytest.approx(0.625)
        rho.validate()

    def test_coherent_rotation_matches_angle_model(self):
        theta0 = math.asin(math.sqrt(1 / 64))
        rho = DensityMatrix2.pure(theta0)
        for r in range(1, 8):
            rho = grover_step_density(rho, theta0)
            assert rho.target_weight == pytest.approx(success_probability(1 / 64, r), abs=1e-12)

    def test_invalid_trace(self):
        with pytest.raises(EngineError):
            DensityMatrix2.diagonal(0.5, 0.6)

    def test_maximally_mixed(self):
        rho = DensityMatrix2.maximally_mixed()
        assert rho.target_weight == 0.5

    def test_rotation_fixes_maximally_mixed_state(self):
        rho = grover_step_density(DensityMatrix2.maximally_mixed(), math.pi / 7)
        assert np.allclose(rho.matrix, np.eye(2) / 2.0, atol=1e-15)

    def test_trace_conserved_over_random_applications(self):
        rng = np.random.default_rng(3)
        rho = DensityMatrix2.pure(0.2)
        for theta0, erase in zip(rng.uniform(1e-3, math.pi / 2, size=10_000), rng.integers(0, 2, size=10_000)):
            rho = grover_step_density(rho, float(theta0))
            if erase:
                rho = dephase_2d(rho)
            assert abs(rho.trace - 1.0) <= 1e-10


class TestRandomStreams:

    def test_stream_depends_only_on_seed_and_index(self):
        first = trial_rng(11, 5).random(4)
        second = trial_rng(11, 5).random(4)
        assert np.array_equal(first, second)

    def test_distinct_trials_differ(self):
        assert not np.array_equal(trial_rng(11, 5).random(4), trial_rng(11, 6).random(4))
