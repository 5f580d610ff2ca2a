"""
Counter-based distance estimator.

Tallies ancilla outcomes, removes the cloner's isotropic bias and decides
when the corrected ratio C'1/C'0 has reached Set_Val.

DEGENERATE DENOMINATORS:
- denominator > 0            -> finite value (may be negative for small k)
- denominator <= 0, num > 0  -> POSITIVE_INFINITE (stops)
- both <= 0                  -> INDETERMINATE (never stops)

Corrected quantities within ZERO_SLACK * k of zero count as zero; this
absorbs the rounding of k(1 - eta)/2 when eta = 1/3.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np


ZERO_SLACK = 1e-12
THRESHOLD_SLACK = 1e-12


# =============================================================================
# EXCEPTIONS
# =============================================================================

class EstimatorError(Exception):
    """Raised when the corrected ratio is requested without usable input."""

    def __init__(self, message: str, internal_reason: str = ""):
        self.message = message
        self.internal_reason = internal_reason
        super().__init__(message)


# =============================================================================
# TYPES
# =============================================================================

class RatioFlag(str, Enum):
    FINITE = "finite"
    POSITIVE_INFINITE = "positive_infinite"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class CorrectedRatio:
    """C'1/C'0; value is present iff the flag is FINITE."""
    flag: RatioFlag
    value: Optional[float] = None

    def as_float(self) -> float:
        if self.flag is RatioFlag.FINITE:
            return self.value
        if self.flag is RatioFlag.POSITIVE_INFINITE:
            return float("inf")
        return float("nan")


@dataclass
class CounterState:
    """Outcome tallies of one attempt. Reset by creating a new instance."""
    c0: int = 0
    c1: int = 0

    @property
    def k(self) -> int:
        return self.c0 + self.c1


# =============================================================================
# OPERATIONS
# =============================================================================

def record(counter: CounterState, bit: int) -> CounterState:
    """Increment the counter matching the measured ancilla bit."""
    if bit == 1:
        counter.c1 += 1
    elif bit == 0:
        counter.c0 += 1
    else:
        raise EstimatorError("Ancilla outcome must be 0 or 1", internal_reason=f"bit={bit}")
    return counter


def _check_eta(eta: float) -> None:
    if not 0.0 < eta <= 1.0 / 3.0:
        raise EstimatorError("eta must lie in (0, 1/3]", internal_reason=f"eta={eta}")


def corrected_ratio_from_counts(c0: float, c1: float, eta: float) -> CorrectedRatio:
    """
    Corrected ratio for real-valued counts (expected increments allowed).

    With k = c0 + c1 and b = k(1 - eta)/2 the ratio is (c1 - b)/(c0 - b).
    """
    _check_eta(eta)
    k = c0 + c1
    if k <= 0:
        raise EstimatorError("No samples: corrected ratio needs at least one outcome",
                             internal_reason=f"c0={c0}, c1={c1}")
    bias = k * (1.0 - eta) / 2.0
    slack = ZERO_SLACK * k
    numerator = c1 - bias
    denominator = c0 - bias
    if abs(numerator) <= slack:
        numerator = 0.0
    if abs(denominator) <= slack:
        denominator = 0.0

    if denominator > 0.0:
        return CorrectedRatio(flag=RatioFlag.FINITE, value=numerator / denominator)
    if numerator > 0.0:
        return CorrectedRatio(flag=RatioFlag.POSITIVE_INFINITE)
    return CorrectedRatio(flag=RatioFlag.INDETERMINATE)


def corrected_ratio(counter: CounterState, eta: float) -> CorrectedRatio:
    return corrected_ratio_from_counts(counter.c0, counter.c1, eta)


def corrected_counts(counter: CounterState, eta: float) -> tuple[float, float]:
    """(C'0, C'1) = ((C0 - b)/eta, (C1 - b)/eta); they sum to k."""
    _check_eta(eta)
    k = counter.k
    if k == 0:
        raise EstimatorError("No samples: corrected counts need at least one outcome")
    bias = k * (1.0 - eta) / 2.0
    return (counter.c0 - bias) / eta, (counter.c1 - bias) / eta


def meets_threshold(value: float, set_val: float) -> bool:
    """value >= set_val, up to a relative rounding slack."""
    return value >= set_val * (1.0 - THRESHOLD_SLACK)


def should_stop(ratio: CorrectedRatio, set_val: float, k: int, burn_in: int) -> bool:
    """
    Stop rule: measure once k >= burn_in and the ratio reaches set_val.

    POSITIVE_INFINITE stops, INDETERMINATE never does.
    """
    if set_val <= 0.0:
        raise EstimatorError("set_val must be positive", internal_reason=f"set_val={set_val}")
    if k < burn_in:
        return False
    if ratio.flag is RatioFlag.POSITIVE_INFINITE:
        return True
    if ratio.flag is RatioFlag.INDETERMINATE:
        return False
    return meets_threshold(ratio.value, set_val)


def stop_mask(
    c1: np.ndarray,
    k: Union[int, np.ndarray],
    eta: float,
    set_val: float,
    burn_in: int,
) -> np.ndarray:
    """
    Vectorized should_stop(corrected_ratio(...)).

    k is either one sample count shared by every c1 (the oracle DP) or an
    array of counts aligned with c1 (a run of consecutive samples). Uses the
    same floating-point steps as the scalar path, element by element.
    """
    _check_eta(eta)
    if set_val <= 0.0:
        raise EstimatorError("set_val must be positive", internal_reason=f"set_val={set_val}")
    c1 = np.asarray(c1, dtype=float)
    k = np.asarray(k, dtype=float)
    bias = k * (1.0 - eta) / 2.0
    slack = ZERO_SLACK * k
    numerator = c1 - bias
    denominator = (k - c1) - bias
    numerator = np.where(np.abs(numerator) <= slack, 0.0, numerator)
    denominator = np.where(np.abs(denominator) <= slack, 0.0, denominator)

    finite = denominator > 0.0
    safe_den = np.where(finite, denominator, 1.0)
    finite_stop = finite & (numerator / safe_den >= set_val * (1.0 - THRESHOLD_SLACK))
    infinite_stop = ~finite & (numerator > 0.0)
    return (finite_stop | infinite_stop) & (k >= burn_in)
