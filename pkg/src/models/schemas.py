"""
Pydantic models for the values that cross module boundaries.

Mutable numeric state (statevectors, 2x2 density matrices, counters) lives
in the services next to the code that mutates it; everything here is a
validated record.
"""

import math
from enum import Enum
from fractions import Fraction
from typing import Literal, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    computed_field,
    model_validator,
)


# ============================================================================
# Target fraction and stopping geometry
# ============================================================================

class TargetFraction(BaseModel):
    """
    P = m/N, the share of marked items, with theta = arcsin(sqrt(P)).

    theta is the angle of the uniform superposition away from the
    non-target direction.
    """
    model_config = ConfigDict(frozen=True)

    p: float = Field(..., gt=0.0, le=1.0)

    @computed_field
    @property
    def theta(self) -> float:
        return math.asin(math.sqrt(self.p))

    @classmethod
    def from_counts(cls, m: int, n_items: int) -> "TargetFraction":
        if n_items < 1 or not 1 <= m <= n_items:
            raise ValueError(f"need 1 <= m <= N, got m={m}, N={n_items}")
        return cls(p=m / n_items)


class StopAngle(BaseModel):
    """X = arcsin(sqrt(g)) for a stop probability g."""
    model_config = ConfigDict(frozen=True)

    x: float = Field(..., ge=0.0, le=math.pi / 2)

    @classmethod
    def from_probability(cls, g: float) -> "StopAngle":
        if not 0.0 <= g <= 1.0:
            raise ValueError(f"stop probability must lie in [0, 1], got {g}")
        return cls(x=math.asin(math.sqrt(g)))

    @property
    def probability(self) -> float:
        return math.sin(self.x) ** 2


class RatioPoint(BaseModel):
    """One horizon of the cumulative expected-ratio curve."""
    r: int = Field(..., ge=0)
    g: float = Field(..., ge=0.0, le=1.0)
    cumulative_ratio: float = Field(..., ge=0.0)


class Table1Row(BaseModel):
    """A cell of the Set_Val calibration table."""
    case: Literal["I", "II", "III"]
    p: float
    g_target: float
    ratio_closed: float
    ratio_quadrature: float
    ratio_published: float

    @computed_field
    @property
    def deviation(self) -> float:
        return self.ratio_closed - self.ratio_published


class SetValBand(BaseModel):
    """Range of expected corrected ratios that stop between g_low and g_high."""
    p: float
    g_low: float
    g_high: float
    ratio_low: float
    ratio_high: float
    set_val: Optional[float] = None
    # None when no set_val was given; edges compare with the stop-rule slack
    contains_set_val: Optional[bool] = None


# ============================================================================
# Engine state
# ============================================================================

class TwoDimState(BaseModel):
    """Search register reduced to its angle in the {|t_perp>, |t>} plane."""
    model_config = ConfigDict(frozen=True)

    theta: float = Field(..., ge=0.0)

    @property
    def success_probability(self) -> float:
        return min(1.0, max(0.0, math.sin(self.theta) ** 2))


class CloneChannel(BaseModel):
    """Effective single-qubit cloning channel; eta shrinks the Bloch vector."""
    model_config = ConfigDict(frozen=True)

    eta: float = Field(1.0 / 3.0, gt=0.0, le=1.0 / 3.0)

    @property
    def bias(self) -> float:
        """Isotropic weight (1 - eta)/2 added to each outcome."""
        return (1.0 - self.eta) / 2.0


# ============================================================================
# Problem and algorithm configuration
# ============================================================================

class SearchMode(str, Enum):
    IDEALIZED_2D = "ideal"
    FULL_STATEVECTOR = "full"
    DEPHASED_DENSITY = "dephased"


class ProblemInstance(BaseModel):
    """
    A search problem: N items of which m are marked.

    With n_qubits set, N = 2^n and the statevector engine may be used.
    Explicit targets are a sorted tuple of marked indices; without them the
    marked items are taken to be 0..m-1.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_items: int = Field(..., ge=1)
    m: int = Field(..., ge=1)
    n_qubits: Optional[int] = Field(None, ge=1)
    targets: Optional[tuple[int, ...]] = None

    @model_validator(mode="after")
    def _check_consistency(self) -> "ProblemInstance":
        if self.m > self.n_items:
            raise ValueError(f"m={self.m} exceeds N={self.n_items}")
        if self.n_qubits is not None and self.n_items != 2 ** self.n_qubits:
            raise ValueError("n_items must equal 2**n_qubits")
        if self.targets is not None:
            if len(self.targets) != self.m:
                raise ValueError("len(targets) must equal m")
            if list(self.targets) != sorted(set(self.targets)):
                raise ValueError("targets must be sorted and unique")
            if self.targets[0] < 0 or self.targets[-1] >= self.n_items:
                raise ValueError("targets must lie in [0, N)")
        return self

    @classmethod
    def from_qubits(
        cls,
        n_qubits: int,
        m: Optional[int] = None,
        targets: Optional[list[int]] = None,
    ) -> "ProblemInstance":
        if targets is not None:
            marked = tuple(sorted(set(targets)))
            return cls(n_items=2 ** n_qubits, m=len(marked), n_qubits=n_qubits, targets=marked)
        m = 1 if m is None else m
        return cls(
            n_items=2 ** n_qubits,
            m=m,
            n_qubits=n_qubits,
            targets=tuple(range(m)),
        )

    @classmethod
    def from_counts(cls, m: int, n_items: int) -> "ProblemInstance":
        return cls(n_items=n_items, m=m)

    @classmethod
    def from_fraction(cls, p: float, max_denominator: int = 2 ** 40) -> "ProblemInstance":
        """Smallest-denominator m/N matching p (to max_denominator)."""
        if not 0.0 < p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {p}")
        frac = Fraction(p).limit_denominator(max_denominator)
        if frac.numerator == 0 or abs(float(frac) - p) > 1e-9 * p:
            raise ValueError(f"p={p} has no m/N with N <= {max_denominator}")
        return cls(n_items=frac.denominator, m=frac.numerator)

    @computed_field
    @property
    def p(self) -> float:
        return self.m / self.n_items

    @property
    def fraction(self) -> TargetFraction:
        return TargetFraction.from_counts(self.m, self.n_items)

    def is_target(self, index: int) -> bool:
        if self.targets is None:
            return 0 <= index < self.m
        return index in self.targets


class AlgorithmConfig(BaseModel):
    """
    Settings of one proposed-algorithm run.

    max_iterations_per_attempt defaults to 20*sqrt(N/m) + 200 when unset.
    target_g switches to known-P tuning: set_val becomes the expected ratio
    at which the success probability reaches target_g.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: SearchMode = SearchMode.IDEALIZED_2D
    set_val: float = Field(1.0, gt=0.0)
    eta: float = Field(1.0 / 3.0, gt=0.0, le=1.0 / 3.0)
    burn_in: int = Field(25, ge=0)
    max_iterations_per_attempt: Optional[int] = Field(None, ge=1)
    max_restarts: int = Field(100, ge=0)
    seed: int = Field(0, ge=0)
    measure_after_rotation: bool = False
    target_g: Optional[float] = Field(None, gt=0.0, le=1.0)

    def iteration_cap(self, problem: ProblemInstance) -> int:
        if self.max_iterations_per_attempt is not None:
            return self.max_iterations_per_attempt
        return int(20.0 * math.sqrt(problem.n_items / problem.m)) + 200


# ============================================================================
# Outcomes
# ============================================================================

class AttemptRecord(BaseModel):
    """
    One measurement attempt.

    stop_iteration is the horizon r whose ancilla sample triggered the stop;
    g_at_stop = g_r and g_after_rotation = g_{r+1} (the register after the
    rotation of the stopping iteration).
    """
    stop_iteration: int = Field(..., ge=0)
    iterations: int = Field(..., ge=0)
    oracle_queries: int = Field(..., ge=0)
    g_at_stop: float = Field(..., ge=0.0, le=1.0)
    g_after_rotation: float = Field(..., ge=0.0, le=1.0)
    measured_index: int = Field(..., ge=0)
    success: bool
    forced: bool = False


class SearchOutcome(BaseModel):
    """Result of a full search, restarts included."""
    algorithm: Literal["proposed", "canonical"]
    found: bool
    measured_index: int
    grover_iterations_total: int
    oracle_queries_total: int
    restarts: int
    attempts: list[AttemptRecord] = []


class ExpectationRun(BaseModel):
    """Noise-free run fed with expected counter increments."""
    p: float
    stop_iteration: int
    g_at_stop: float
    g_after_rotation: float
    corrected_ratio: float
    iterations: int
    oracle_queries: int


class TrialStats(BaseModel):
    """Aggregate of independent seeded trials."""
    algorithm: Literal["proposed", "canonical"]
    mode: SearchMode
    p: float
    trials: int = Field(..., ge=1)
    seed: int
    successes: int
    success_rate: float = Field(..., ge=0.0, le=1.0)
    ci_low: float = Field(..., ge=0.0, le=1.0)
    ci_high: float = Field(..., ge=0.0, le=1.0)
    attempts_total: int
    attempt_successes: int
    per_attempt_success_rate: float = Field(..., ge=0.0, le=1.0)
    mean_queries: float
    median_queries: float
    mean_restarts: float
    forced_measurements: int = 0
    stop_histogram: dict[int, int] = {}


class StopTimeDistribution(BaseModel):
    """
    Exact law of the stop horizon of one attempt.

    stop_probabilities[r] is the probability of stopping right after the
    (r+1)-th ancilla sample; g_measured[r] is the success probability of the
    register measured at that stop.
    """
    p: float
    horizon: int
    burn_in: int
    set_val: float
    stop_probabilities: list[float]
    g_measured: list[float]
    truncated_mass: float = Field(..., ge=0.0)
    per_attempt_success: float = Field(..., ge=0.0, le=1.0)

    @property
    def stopped_mass(self) -> float:
        return math.fsum(self.stop_probabilities)


class SweepRow(BaseModel):
    p: float
    trials: int
    success_rate: float
    ci_lo: float
    ci_hi: float
    mean_queries: float
    mean_restarts: float
    g_expected: Optional[float] = None


class ScalingRow(BaseModel):
    N: int
    r_stop: int
    queries_proposed: int
    queries_canonical: int
    ratio: float


class ScalingFit(BaseModel):
    rows: list[ScalingRow]
    slope: float
    limiting_ratio: float
    r_stop_over_sqrt_n: float


class ModeComparison(BaseModel):
    """Same seeds, different engine fidelity."""
    p: float
    seed: int
    stats: dict[str, TrialStats]
    success_rate_divergence: float
    mean_queries_divergence: float


# ============================================================================
# Run manifest
# ============================================================================

class RunManifest(BaseModel):
    """Written next to every result file; replaying it reproduces the results."""
    tool_version: str
    command: str
    parameters: dict
    settings: dict
    seed: Optional[int] = None
    timestamp: str
    parameters_hash: str
    outputs: list[str] = []
    schema_version: int = 1
