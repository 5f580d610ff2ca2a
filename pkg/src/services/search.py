"""
Search loops: the ratio-threshold fixed-point search and the canonical
Grover baseline.

Per iteration of the proposed search:
1. sample the cloned ancilla from the current register (Of1 + channel)
2. tally the outcome and compute the corrected ratio
3. stop if the ratio has reached set_val, otherwise apply G

Every iteration is charged two oracle queries (Of1 and the oracle inside G).
A wrong measurement restarts the attempt from fresh counters and a fresh
register.
"""

import logging
from functools import lru_cache
from typing import Optional

import numpy as np

from ..config import get_settings
from ..models.schemas import (
    AlgorithmConfig,
    AttemptRecord,
    CloneChannel,
    ExpectationRun,
    ProblemInstance,
    SearchMode,
    SearchOutcome,
)
from .analytic import (
    ThresholdUnreachable,
    canonical_rotations,
    default_expectation_cap,
    set_val_for_known_p,
    success_probability,
)
from .backends import IdealizedBackend, RegisterBackend, get_backend
from .engine import ancilla_distribution, ancilla_zero_probability, sample_ancilla
from .estimator import (
    CounterState,
    corrected_ratio,
    corrected_ratio_from_counts,
    record,
    should_stop,
    stop_mask,
)


logger = logging.getLogger(__name__)

# Samples evaluated per vectorized step of an idealized attempt; doubles every step.
FIRST_CHUNK = 64


# =============================================================================
# EXCEPTIONS
# =============================================================================

class SearchError(Exception):
    """
    Raised when a search run is inconsistent.

    Contains a user-safe message.
    """
    def __init__(self, message: str, internal_reason: str = ""):
        self.message = message
        self.internal_reason = internal_reason
        super().__init__(message)


class SimulationCapExceeded(SearchError):
    """A configured simulation limit was hit."""


# =============================================================================
# HELPERS
# =============================================================================

def resolve_set_val(problem: ProblemInstance, config: AlgorithmConfig) -> float:
    """set_val, or the known-P threshold for target_g when one is given."""
    if config.target_g is None:
        return config.set_val
    return set_val_for_known_p(problem.fraction, config.target_g)


def _check_caps(problem: ProblemInstance, mode: SearchMode) -> None:
    cap = get_settings().statevector_max_qubits
    if mode is SearchMode.FULL_STATEVECTOR and problem.n_qubits is not None and problem.n_qubits > cap:
        raise SimulationCapExceeded(
            f"Statevector of {problem.n_qubits} qubits exceeds the {cap}-qubit cap; "
            "use the 2-D mode for larger databases",
            internal_reason=f"n={problem.n_qubits}, cap={cap}",
        )


def _check_found(problem: ProblemInstance, success: bool, index: int) -> None:
    if success and not problem.is_target(index):
        raise SearchError(
            "Measured a non-marked item on a successful branch",
            internal_reason=f"index={index}",
        )


def _summarize(algorithm: str, attempts: list[AttemptRecord]) -> SearchOutcome:
    last = attempts[-1]
    return SearchOutcome(
        algorithm=algorithm,
        found=last.success,
        measured_index=last.measured_index,
        grover_iterations_total=sum(a.iterations for a in attempts),
        oracle_queries_total=sum(a.oracle_queries for a in attempts),
        restarts=len(attempts) - 1,
        attempts=attempts,
    )


# =============================================================================
# PROPOSED ALGORITHM
# =============================================================================

def _run_attempt(
    backend: RegisterBackend,
    channel: CloneChannel,
    set_val: float,
    config: AlgorithmConfig,
    cap: int,
    rng: np.random.Generator,
) -> AttemptRecord:
    counter = CounterState()
    backend.prepare()

    for r in range(cap):
        g = backend.success_probability()
        bit = sample_ancilla(ancilla_distribution(g, channel), rng)
        record(counter, bit)
        backend.after_ancilla_cycle()

        stop = should_stop(corrected_ratio(counter, channel.eta), set_val, counter.k, config.burn_in)
        forced = not stop and r == cap - 1
        if not (stop or forced):
            backend.rotate()
            continue

        if config.measure_after_rotation:
            backend.rotate()
            g_after = backend.success_probability()
            success, index = backend.measure(rng)
        else:
            success, index = backend.measure(rng)
            backend.rotate()
            g_after = backend.success_probability()

        if forced:
            logger.debug("forced measurement at r=%d (cap=%d)", r, cap)
        else:
            logger.debug("stop at r=%d, c0=%d, c1=%d, g=%.6g", r, counter.c0, counter.c1, g)
        return AttemptRecord(
            stop_iteration=r,
            iterations=r + 1,
            oracle_queries=2 * (r + 1),
            g_at_stop=min(1.0, g),
            g_after_rotation=min(1.0, g_after),
            measured_index=index,
            success=success,
            forced=forced,
        )

    raise SearchError("Iteration cap must be positive", internal_reason=f"cap={cap}")


@lru_cache(maxsize=32)
def _ideal_path(problem: ProblemInstance, cap: int, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """
    g_0..g_cap and the outcome-1 probability of each sample.

    Stepped through IdealizedBackend so every value is bit-identical to what
    the per-sample loop sees.
    """
    backend = IdealizedBackend(problem)
    channel = CloneChannel(eta=eta)
    g = np.empty(cap + 1)
    p1 = np.empty(cap + 1)
    backend.prepare()
    for r in range(cap + 1):
        g[r] = backend.success_probability()
        p1[r] = ancilla_distribution(float(g[r]), channel)
        if r < cap:
            backend.rotate()
    g.flags.writeable = False
    p1.flags.writeable = False
    return g, p1


def _run_attempt_ideal(
    backend: RegisterBackend,
    g: np.ndarray,
    p1: np.ndarray,
    set_val: float,
    config: AlgorithmConfig,
    cap: int,
    rng: np.random.Generator,
) -> AttemptRecord:
    """
    _run_attempt for the 2-D mode, evaluated a chunk of samples at a time.

    The trajectory does not depend on outcomes, so the stop rule runs over
    cumulative counts with numpy. Once a chunk contains the stop, the
    generator is rewound and only the draws up to it are consumed: the
    stream advances exactly as in the per-sample loop.
    """
    c1_before = 0
    start = 0
    chunk = FIRST_CHUNK
    while True:
        end = min(cap, start + chunk)
        saved = rng.bit_generator.state
        bits = rng.random(end - start) < p1[start:end]
        c1 = c1_before + np.cumsum(bits)
        k = np.arange(start + 1, end + 1)
        hits = np.flatnonzero(stop_mask(c1, k, config.eta, set_val, config.burn_in))
        if hits.size:
            rng.bit_generator.state = saved
            rng.random(int(hits[0]) + 1)
            r = start + int(hits[0])
            forced = False
            break
        if end == cap:
            r = cap - 1
            forced = True
            break
        c1_before = int(c1[-1])
        start = end
        chunk *= 2

    g_measured = g[r + 1] if config.measure_after_rotation else g[r]
    success, index = backend.measure_with(float(g_measured), rng)
    if forced:
        logger.debug("forced measurement at r=%d (cap=%d)", r, cap)
    else:
        logger.debug("stop at r=%d, c1=%d, g=%.6g", r, int(c1[r - start]), g[r])
    return AttemptRecord(
        stop_iteration=r,
        iterations=r + 1,
        oracle_queries=2 * (r + 1),
        g_at_stop=min(1.0, float(g[r])),
        g_after_rotation=min(1.0, float(g[r + 1])),
        measured_index=index,
        success=success,
        forced=forced,
    )


def run_proposed(
    problem: ProblemInstance,
    config: AlgorithmConfig,
    rng: np.random.Generator,
) -> SearchOutcome:
    """
    Ratio-threshold search with restarts.

    Attempts repeat until a marked item is measured or max_restarts
    restarts have been spent; the outcome then has found=False.
    """
    channel = CloneChannel(eta=config.eta)
    set_val = resolve_set_val(problem, config)
    _check_caps(problem, config.mode)
    cap = config.iteration_cap(problem)
    backend = get_backend(config.mode, problem)

    ideal = config.mode is SearchMode.IDEALIZED_2D
    if ideal:
        g, p1 = _ideal_path(problem, cap, channel.eta)

    attempts: list[AttemptRecord] = []
    for _ in range(config.max_restarts + 1):
        if ideal:
            attempt = _run_attempt_ideal(backend, g, p1, set_val, config, cap, rng)
        else:
            attempt = _run_attempt(backend, channel, set_val, config, cap, rng)
        _check_found(problem, attempt.success, attempt.measured_index)
        attempts.append(attempt)
        if attempt.success:
            break

    return _summarize("proposed", attempts)


# =============================================================================
# CANONICAL BASELINE
# =============================================================================

def run_canonical(
    problem: ProblemInstance,
    rng: np.random.Generator,
    r_override: Optional[int] = None,
    max_restarts: Optional[int] = None,
    mode: SearchMode = SearchMode.IDEALIZED_2D,
) -> SearchOutcome:
    """
    Grover search with m known: apply G floor(pi/(4 theta)) times, measure.

    One oracle query per rotation.
    """
    rotations = canonical_rotations(problem.fraction) if r_override is None else r_override
    if rotations < 0:
        raise SearchError("Rotation count must be non-negative", internal_reason=f"r={rotations}")
    if max_restarts is None:
        max_restarts = get_settings().default_max_restarts
    _check_caps(problem, mode)
    backend = get_backend(mode, problem)

    attempts: list[AttemptRecord] = []
    for _ in range(max_restarts + 1):
        backend.prepare()
        for _ in range(rotations):
            backend.rotate()
        g = min(1.0, backend.success_probability())
        success, index = backend.measure(rng)
        _check_found(problem, success, index)
        attempts.append(AttemptRecord(
            stop_iteration=rotations,
            iterations=rotations,
            oracle_queries=rotations,
            g_at_stop=g,
            g_after_rotation=g,
            measured_index=index,
            success=success,
        ))
        if success:
            break

    return _summarize("canonical", attempts)


# =============================================================================
# NOISE-FREE VARIANT
# =============================================================================

def deterministic_expectation_run(
    problem: ProblemInstance,
    config: AlgorithmConfig,
) -> ExpectationRun:
    """
    The proposed loop driven by expected ancilla increments instead of draws.

    Counts grow by (P(0), P(1)) each iteration; burn-in is ignored, so the
    stop iteration equals stop_iteration_expected.

    Raises:
        ThresholdUnreachable: if no stop occurs within 10*sqrt(1/P) + 100.
    """
    frac = problem.fraction
    channel = CloneChannel(eta=config.eta)
    set_val = resolve_set_val(problem, config)
    cap = default_expectation_cap(frac)

    c0 = 0.0
    c1 = 0.0
    for r in range(cap + 1):
        g = success_probability(frac, r)
        c1 += ancilla_distribution(g, channel)
        c0 += ancilla_zero_probability(g, channel)
        ratio = corrected_ratio_from_counts(c0, c1, channel.eta)
        if should_stop(ratio, set_val, r + 1, burn_in=0):
            return ExpectationRun(
                p=frac.p,
                stop_iteration=r,
                g_at_stop=g,
                g_after_rotation=success_probability(frac, r + 1),
                corrected_ratio=ratio.as_float(),
                iterations=r + 1,
                oracle_queries=2 * (r + 1),
            )

    raise ThresholdUnreachable(
        "Threshold unreachable in expectation",
        internal_reason=f"p={frac.p}, set_val={set_val}, cap={cap}",
    )

