"""
Experiment harness.

- monte_carlo: seeded trials of either algorithm, aggregated in trial order
- exact_stop_distribution: dynamic program over (samples, c1) giving the
  exact stop-time law of one attempt
- chi_square_agreement: sampler vs. dynamic program
- sweep / scaling_fit / compare_modes: grids of the above

Trial i always draws from trial_rng(seed, i), and blocks of trials are
reassembled in index order, so results do not depend on the worker count.
"""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Literal, Optional, Sequence, Union

import numpy as np
from scipy import stats

from ..config import get_settings
from ..models.schemas import (
    AlgorithmConfig,
    CloneChannel,
    ModeComparison,
    ProblemInstance,
    ScalingFit,
    ScalingRow,
    SearchMode,
    SearchOutcome,
    StopTimeDistribution,
    SweepRow,
    TrialStats,
)
from .analytic import ThresholdUnreachable, canonical_rotations, success_probability
from .backends import get_backend
from .engine import ancilla_distribution, trial_rng
from .estimator import stop_mask
from .search import deterministic_expectation_run, resolve_set_val, run_canonical, run_proposed


logger = logging.getLogger(__name__)

Algorithm = Literal["proposed", "canonical"]

# Trials per worker task; also the serial threshold.
BLOCK_SIZE = 512

# Bins with fewer expected counts are merged before the chi-square test.
MIN_EXPECTED_COUNT = 5.0


# =============================================================================
# EXCEPTIONS
# =============================================================================

class HarnessError(Exception):
    """
    Raised when an experiment cannot be set up.

    Contains a user-safe message.
    """
    def __init__(self, message: str, internal_reason: str = ""):
        self.message = message
        self.internal_reason = internal_reason
        super().__init__(message)


class HorizonOverflow(HarnessError):
    """The dynamic-programming horizon exceeds the configured cap."""


# =============================================================================
# STATISTICS
# =============================================================================

def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clamped to contain the estimate."""
    if trials <= 0:
        raise HarnessError("Wilson interval needs at least one trial", internal_reason=f"n={trials}")
    if not 0 <= successes <= trials:
        raise HarnessError("Successes must lie in [0, trials]", internal_reason=f"k={successes}, n={trials}")
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denom
    low = max(0.0, min(center - half, phat))
    high = min(1.0, max(center + half, phat))
    return low, high


def binomial_sigma(probability: float, trials: int) -> float:
    return math.sqrt(max(probability * (1.0 - probability), 0.0) / trials)


# =============================================================================
# MONTE CARLO
# =============================================================================

def _run_one(
    problem: ProblemInstance,
    config: AlgorithmConfig,
    algorithm: Algorithm,
    seed: int,
    trial_index: int,
) -> SearchOutcome:
    rng = trial_rng(seed, trial_index)
    if algorithm == "canonical":
        return run_canonical(problem, rng, max_restarts=config.max_restarts, mode=config.mode)
    return run_proposed(problem, config, rng)


def _run_block(
    problem: ProblemInstance,
    config: AlgorithmConfig,
    algorithm: Algorithm,
    seed: int,
    start: int,
    stop: int,
) -> list[SearchOutcome]:
    return [_run_one(problem, config, algorithm, seed, i) for i in range(start, stop)]


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        workers = get_settings().workers
    return workers if workers > 0 else (os.cpu_count() or 1)


def run_trials(
    problem: ProblemInstance,
    config: AlgorithmConfig,
    trials: int,
    seed: int,
    algorithm: Algorithm = "proposed",
    workers: Optional[int] = None,
) -> list[SearchOutcome]:
    """Outcomes of trials 0..trials-1, in trial order."""
    if trials < 1:
        raise HarnessError("At least one trial is required", internal_reason=f"trials={trials}")
    workers = resolve_workers(workers)
    blocks = [(start, min(start + BLOCK_SIZE, trials)) for start in range(0, trials, BLOCK_SIZE)]

    if workers == 1 or len(blocks) == 1:
        return _run_block(problem, config, algorithm, seed, 0, trials)

    outcomes: list[SearchOutcome] = []
    with ProcessPoolExecutor(max_workers=min(workers, len(blocks))) as pool:
        futures = [
            pool.submit(_run_block, problem, config, algorithm, seed, start, stop)
            for start, stop in blocks
        ]
        for future in futures:
            outcomes.extend(future.result())
    return outcomes


def aggregate(
    outcomes: Sequence[SearchOutcome],
    problem: ProblemInstance,
    config: AlgorithmConfig,
    seed: int,
    algorithm: Algorithm = "proposed",
) -> TrialStats:
    trials = len(outcomes)
    if trials == 0:
        raise HarnessError("Nothing to aggregate")
    successes = sum(1 for o in outcomes if o.found)
    attempts = [a for o in outcomes for a in o.attempts]
    attempt_successes = sum(1 for a in attempts if a.success)

    histogram: dict[int, int] = {}
    for attempt in attempts:
        histogram[attempt.stop_iteration] = histogram.get(attempt.stop_iteration, 0) + 1

    queries = np.array([o.oracle_queries_total for o in outcomes], dtype=np.int64)
    restarts = np.array([o.restarts for o in outcomes], dtype=np.int64)
    ci_low, ci_high = wilson_interval(successes, trials)

    return TrialStats(
        algorithm=algorithm,
        mode=config.mode,
        p=problem.p,
        trials=trials,
        seed=seed,
        successes=successes,
        success_rate=successes / trials,
        ci_low=ci_low,
        ci_high=ci_high,
        attempts_total=len(attempts),
        attempt_successes=attempt_successes,
        per_attempt_success_rate=attempt_successes / len(attempts),
        mean_queries=float(queries.mean()),
        median_queries=float(np.median(queries)),
        mean_restarts=float(restarts.mean()),
        forced_measurements=sum(1 for a in attempts if a.forced),
        stop_histogram=dict(sorted(histogram.items())),
    )


def monte_carlo(
    problem: ProblemInstance,
    config: AlgorithmConfig,
    trials: int,
    seed: int,
    algorithm: Algorithm = "proposed",
    workers: Optional[int] = None,
) -> TrialStats:
    """
    Seeded independent trials, aggregated into TrialStats.

    Identical (problem, config, trials, seed) give identical stats for
    any worker count.
    """
    logger.info("monte carlo: %s, p=%.6g, mode=%s, trials=%d, seed=%d",
                algorithm, problem.p, config.mode.value, trials, seed)
    outcomes = run_trials(problem, config, trials, seed, algorithm, workers)
    return aggregate(outcomes, problem, config, seed, algorithm)


# =============================================================================
# EXACT STOP-TIME LAW
# =============================================================================

def _as_problem(p: Union[float, ProblemInstance]) -> ProblemInstance:
    return p if isinstance(p, ProblemInstance) else ProblemInstance.from_fraction(p)


def success_trajectory(problem: ProblemInstance, mode: SearchMode, length: int) -> list[float]:
    """
    Success probability before each ancilla sample, r = 0..length-1.

    The trajectory does not depend on ancilla outcomes in any mode: the
    channel leaves the register untouched and dephasing is unconditional.
    """
    if mode is SearchMode.IDEALIZED_2D:
        frac = problem.fraction
        return [success_probability(frac, r) for r in range(length)]
    backend = get_backend(mode, problem)
    backend.prepare()
    values = []
    for _ in range(length):
        values.append(min(1.0, backend.success_probability()))
        backend.after_ancilla_cycle()
        backend.rotate()
    return values


def exact_stop_distribution(
    p: Union[float, ProblemInstance],
    config: AlgorithmConfig,
    horizon: Optional[int] = None,
) -> StopTimeDistribution:
    """
    Exact law of the stop iteration of one attempt.

    Row r is the probability of stopping right after the (r+1)-th ancilla
    sample. Mass still running after `horizon` samples is reported as
    truncated and treated as a forced measurement at r = horizon - 1, the
    way the search loop handles its iteration cap.

    Args:
        p: Target fraction or problem.
        config: Stop rule parameters (set_val / target_g, eta, burn_in, mode,
            measure_after_rotation).
        horizon: Number of samples; defaults to the per-attempt iteration cap.

    Raises:
        HorizonOverflow: if horizon exceeds the configured DP cap.
    """
    problem = _as_problem(p)
    horizon = config.iteration_cap(problem) if horizon is None else horizon
    limit = get_settings().dp_max_horizon
    if horizon < 1:
        raise HarnessError("Horizon must be at least 1", internal_reason=f"horizon={horizon}")
    if horizon > limit:
        raise HorizonOverflow(
            f"Horizon {horizon} exceeds the dynamic-programming cap of {limit}",
            internal_reason=f"horizon={horizon}, cap={limit}",
        )

    set_val = resolve_set_val(problem, config)
    channel = CloneChannel(eta=config.eta)
    trajectory = success_trajectory(problem, config.mode, horizon + 1)
    offset = 1 if config.measure_after_rotation else 0
    g_measured = trajectory[offset:offset + horizon]

    running = np.zeros(1)
    running[0] = 1.0
    stop_probabilities: list[float] = []
    for r in range(horizon):
        p1 = ancilla_distribution(trajectory[r], channel)
        advanced = np.zeros(r + 2)
        advanced[:-1] += running * (1.0 - p1)
        advanced[1:] += running * p1
        mask = stop_mask(np.arange(r + 2), r + 1, channel.eta, set_val, config.burn_in)
        stop_probabilities.append(float(advanced[mask].sum()))
        advanced[mask] = 0.0
        running = advanced
        if r % 1000 == 999:
            logger.debug("dp progress: r=%d, running mass=%.6g", r, running.sum())

    truncated = float(running.sum())
    per_attempt = math.fsum(s * g for s, g in zip(stop_probabilities, g_measured))
    per_attempt += truncated * g_measured[-1]

    return StopTimeDistribution(
        p=problem.p,
        horizon=horizon,
        burn_in=config.burn_in,
        set_val=set_val,
        stop_probabilities=stop_probabilities,
        g_measured=g_measured,
        truncated_mass=max(truncated, 0.0),
        per_attempt_success=min(1.0, max(0.0, per_attempt)),
    )


def chi_square_agreement(
    histogram: dict[int, int],
    distribution: StopTimeDistribution,
) -> tuple[float, float]:
    """
    Chi-square test of sampled stop iterations against the exact law.

    The last bin collects r >= horizon - 1 (it absorbs forced measurements
    and truncated mass). Adjacent bins are merged until each expects at
    least MIN_EXPECTED_COUNT.

    Returns:
        (statistic, p_value); (0.0, 1.0) when fewer than two bins remain.
    """
    total = sum(histogram.values())
    if total == 0:
        raise HarnessError("Empty histogram")
    last = distribution.horizon - 1

    observed = np.zeros(distribution.horizon)
    for r, count in histogram.items():
        observed[min(r, last)] += count
    expected = np.array(distribution.stop_probabilities, dtype=float)
    expected[last] += distribution.truncated_mass
    expected *= total / expected.sum()

    merged_obs: list[float] = []
    merged_exp: list[float] = []
    acc_obs = 0.0
    acc_exp = 0.0
    for obs, exp in zip(observed, expected):
        acc_obs += obs
        acc_exp += exp
        if acc_exp >= MIN_EXPECTED_COUNT:
            merged_obs.append(acc_obs)
            merged_exp.append(acc_exp)
            acc_obs = 0.0
            acc_exp = 0.0
    if merged_exp:
        merged_obs[-1] += acc_obs
        merged_exp[-1] += acc_exp
    if len(merged_exp) < 2:
        return 0.0, 1.0

    result = stats.chisquare(np.array(merged_obs), np.array(merged_exp))
    return float(result.statistic), float(result.pvalue)


# =============================================================================
# GRIDS
# =============================================================================

def sweep(
    problems: Sequence[ProblemInstance],
    config: AlgorithmConfig,
    trials: int,
    seed: int,
    workers: Optional[int] = None,
) -> list[SweepRow]:
    """One monte_carlo row per problem, ordered by p."""
    rows = []
    for problem in sorted(problems, key=lambda pr: pr.p):
        trial_stats = monte_carlo(problem, config, trials, seed, workers=workers)
        try:
            g_expected: Optional[float] = deterministic_expectation_run(problem, config).g_at_stop
        except ThresholdUnreachable:
            g_expected = None
        rows.append(SweepRow(
            p=problem.p,
            trials=trials,
            success_rate=trial_stats.success_rate,
            ci_lo=trial_stats.ci_low,
            ci_hi=trial_stats.ci_high,
            mean_queries=trial_stats.mean_queries,
            mean_restarts=trial_stats.mean_restarts,
            g_expected=g_expected,
        ))
        logger.info("sweep row: p=%.6g, success_rate=%.6g", problem.p, trial_stats.success_rate)
    return rows


def scaling_fit(n_values: Sequence[int], config: AlgorithmConfig) -> ScalingFit:
    """
    Query scaling with m = 1 from deterministic-expectation runs.

    Requires at least four database sizes spanning three octaves.

    Returns:
        Rows per N, the log-log slope of proposed queries against N, and
        the proposed/canonical ratio and r_stop/sqrt(N) at the largest N.
    """
    sizes = sorted(set(int(n) for n in n_values))
    if len(sizes) < 4 or sizes[0] < 1 or math.log2(sizes[-1] / sizes[0]) < 3.0:
        raise HarnessError(
            "Degenerate grid: need at least 4 sizes spanning 3 octaves",
            internal_reason=f"sizes={sizes}",
        )

    rows = []
    for n in sizes:
        problem = ProblemInstance.from_counts(m=1, n_items=n)
        run = deterministic_expectation_run(problem, config)
        canonical = max(canonical_rotations(problem.fraction), 1)
        rows.append(ScalingRow(
            N=n,
            r_stop=run.stop_iteration,
            queries_proposed=run.oracle_queries,
            queries_canonical=canonical,
            ratio=run.oracle_queries / canonical,
        ))

    log_n = np.log([row.N for row in rows])
    log_q = np.log([row.queries_proposed for row in rows])
    slope = float(np.polyfit(log_n, log_q, 1)[0])
    largest = rows[-1]
    return ScalingFit(
        rows=rows,
        slope=slope,
        limiting_ratio=largest.ratio,
        r_stop_over_sqrt_n=largest.r_stop / math.sqrt(largest.N),
    )


def compare_modes(
    problem: ProblemInstance,
    config: AlgorithmConfig,
    trials: int,
    seed: int,
    workers: Optional[int] = None,
) -> ModeComparison:
    """
    Same seed in every engine mode that fits the problem.

    The statevector mode joins only for problems with explicit qubits under
    the statevector cap. Divergences are dephased minus idealized.
    """
    modes = [SearchMode.IDEALIZED_2D, SearchMode.DEPHASED_DENSITY]
    if problem.n_qubits is not None and problem.n_qubits <= get_settings().statevector_max_qubits:
        modes.append(SearchMode.FULL_STATEVECTOR)

    results = {
        mode.value: monte_carlo(problem, config.model_copy(update={"mode": mode}), trials, seed, workers=workers)
        for mode in modes
    }
    ideal = results[SearchMode.IDEALIZED_2D.value]
    dephased = results[SearchMode.DEPHASED_DENSITY.value]
    return ModeComparison(
        p=problem.p,
        seed=seed,
        stats=results,
        success_rate_divergence=dephased.success_rate - ideal.success_rate,
        mean_queries_divergence=dephased.mean_queries - ideal.mean_queries,
    )
