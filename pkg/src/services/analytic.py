"""
Closed-form analysis of the ratio-threshold search.

Covers the success probability after r rotations, the expected counter
values, the expected corrected ratio in three forms (discrete sum,
quadrature, closed form), its inverse, the Set_Val calibration table and the
horizon at which the expected ratio first reaches a threshold.

All functions are pure; p may be passed as a TargetFraction or a float.
"""

import logging
import math
from collections.abc import Callable
from typing import Optional, Union

from ..config import get_settings
from ..models.schemas import (
    RatioPoint,
    SetValBand,
    StopAngle,
    Table1Row,
    TargetFraction,
)
from .estimator import meets_threshold
from .quadrature import integrate_adaptive_simpson


logger = logging.getLogger(__name__)

FractionLike = Union[TargetFraction, float]

HALF_PI = math.pi / 2.0

# Case I of the calibration table stands for "theta ~ 0"; modeled as N = 2^20.
CASE_I_P = 2.0 ** -20

# Values printed in the published calibration table, by case and g in
# (0.5, 0.75, 1.0).
PUBLISHED_TABLE = {
    "I": (CASE_I_P, (0.23, 0.42, 1.00)),
    "II": (0.25, (0.60, 1.00, 2.41)),
    "III": (0.50, (1.00, 1.69, 4.50)),
}
TABLE_G_VALUES = (0.5, 0.75, 1.0)

SUCCESS_FLOOR_GRID = (
    2.0 ** -20, 2.0 ** -16, 2.0 ** -12, 2.0 ** -8, 2.0 ** -4, 0.1, 0.25, 0.4, 0.5,
)


# =============================================================================
# EXCEPTIONS
# =============================================================================

class AnalyticError(Exception):
    """
    Raised when an analytic quantity is undefined or cannot be reached.

    Contains a user-safe message.
    """
    def __init__(self, message: str, internal_reason: str = ""):
        self.message = message
        self.internal_reason = internal_reason
        super().__init__(message)


class ThresholdUnreachable(AnalyticError):
    """The expected ratio never reaches the threshold within the cap."""


# =============================================================================
# SUCCESS PROBABILITY AND EXPECTED COUNTS
# =============================================================================

def as_fraction(p: FractionLike) -> TargetFraction:
    if isinstance(p, TargetFraction):
        return p
    return TargetFraction(p=p)


def success_probability(p: FractionLike, r: int) -> float:
    """g_r(P) = sin^2((2r+1) arcsin(sqrt(P))), clamped to [0, 1]."""
    if r < 0:
        raise AnalyticError("Rotation count must be non-negative", internal_reason=f"r={r}")
    frac = as_fraction(p)
    if r == 0:
        return frac.p
    g = math.sin((2 * r + 1) * frac.theta) ** 2
    return min(1.0, max(0.0, g))


def success_series(p: FractionLike, horizon: int) -> list[float]:
    """g_0 .. g_horizon."""
    frac = as_fraction(p)
    return [success_probability(frac, r) for r in range(horizon + 1)]


def expected_counts(p: FractionLike, horizon: int, eta: float = 1.0 / 3.0) -> tuple[float, float]:
    """
    Expected raw counters after samples at rotations 0..horizon.

    Each sample lands on 1 with probability eta*g_r + (1-eta)/2 and on 0
    with eta*(1-g_r) + (1-eta)/2.
    """
    if horizon < 0:
        raise AnalyticError("Horizon must be non-negative", internal_reason=f"horizon={horizon}")
    if not 0.0 < eta <= 1.0 / 3.0:
        raise AnalyticError("eta must lie in (0, 1/3]", internal_reason=f"eta={eta}")
    bias = (1.0 - eta) / 2.0
    series = success_series(p, horizon)
    c1 = math.fsum(eta * g + bias for g in series)
    c0 = (horizon + 1) - c1
    return c0, c1


def expected_ratio_discrete(p: FractionLike, horizon: int) -> float:
    """sum g_r / sum (1 - g_r) over r = 0..horizon; +inf when P = 1."""
    if horizon < 0:
        raise AnalyticError("Horizon must be non-negative", internal_reason=f"horizon={horizon}")
    series = success_series(p, horizon)
    denominator = math.fsum(1.0 - g for g in series)
    if denominator <= 0.0:
        return math.inf
    return math.fsum(series) / denominator


def ratio_curve(p: FractionLike, horizon: int) -> list[RatioPoint]:
    """The cumulative expected ratio at every horizon up to `horizon`."""
    frac = as_fraction(p)
    points = []
    s1 = 0.0
    s0 = 0.0
    for r in range(horizon + 1):
        g = success_probability(frac, r)
        s1 += g
        s0 += 1.0 - g
        ratio = s1 / s0 if s0 > 0.0 else math.inf
        points.append(RatioPoint(r=r, g=g, cumulative_ratio=ratio))
    return points


# =============================================================================
# CONTINUOUS RATIO: QUADRATURE, CLOSED FORM, INVERSE
# =============================================================================

def _start_ratio(frac: TargetFraction) -> float:
    """Limit of the continuous ratio at X = theta: tan^2(theta) = P/(1 - P)."""
    if frac.p >= 1.0:
        return math.inf
    return frac.p / (1.0 - frac.p)


def expected_ratio_quadrature(p: FractionLike, g_target: float) -> float:
    """
    Integral form of the expected ratio, by adaptive Simpson in r.

    Integrates g_r and 1 - g_r from r = 0 to the real-valued horizon
    R_n = (X/theta - 1)/2 at which the first rising branch reaches g_target.
    """
    frac = as_fraction(p)
    if not frac.p - 1e-15 <= g_target <= 1.0:
        raise AnalyticError(
            "Target probability must lie in [P, 1]",
            internal_reason=f"p={frac.p}, g_target={g_target}",
        )
    theta = frac.theta
    if theta >= HALF_PI:
        return math.inf

    x = max(theta, math.asin(math.sqrt(g_target)))
    r_n = (x / theta - 1.0) / 2.0
    if (x - theta) < get_settings().closed_form_tolerance:
        return _start_ratio(frac)

    tolerance = get_settings().quadrature_tolerance

    def target_weight(r: float) -> float:
        return math.sin((2.0 * r + 1.0) * theta) ** 2

    def other_weight(r: float) -> float:
        return math.cos((2.0 * r + 1.0) * theta) ** 2

    def integrate(f: Callable[[float], float]) -> float:
        rough, _ = integrate_adaptive_simpson(f, 0.0, r_n, tol=tolerance * max(1.0, r_n))
        # relative to the integral itself; 1 - g stays tiny on the whole range when theta is near pi/2
        value, _ = integrate_adaptive_simpson(f, 0.0, r_n, tol=tolerance * max(abs(rough), 1e-300))
        return value

    numerator = integrate(target_weight)
    denominator = integrate(other_weight)
    if denominator <= 0.0:
        return math.inf
    return numerator / denominator


def _closed_form(frac: TargetFraction, x: float) -> float:
    theta = frac.theta
    if abs(x - theta) < get_settings().closed_form_tolerance:
        return _start_ratio(frac)
    numerator = (2.0 * x - math.sin(2.0 * x)) - (2.0 * theta - math.sin(2.0 * theta))
    denominator = (2.0 * x + math.sin(2.0 * x)) - (2.0 * theta + math.sin(2.0 * theta))
    if denominator <= 0.0:
        return math.inf
    return numerator / denominator


def expected_ratio_closed(p: FractionLike, stop: Union[StopAngle, float]) -> float:
    """
    Closed form (2X - sin2X - (2t - sin2t)) / (2X + sin2X - (2t + sin2t)).

    At X = theta the 0/0 is replaced by its limit P/(1 - P), the r = 0 ratio.
    """
    frac = as_fraction(p)
    x = stop.x if isinstance(stop, StopAngle) else float(stop)
    theta = frac.theta
    if x < theta - get_settings().closed_form_tolerance:
        raise AnalyticError(
            "Stop angle must not precede the starting angle",
            internal_reason=f"X={x}, theta={theta}",
        )
    if x > HALF_PI + 1e-15:
        raise AnalyticError("Stop angle must not exceed pi/2", internal_reason=f"X={x}")
    return _closed_form(frac, max(x, theta))


def expected_ratio_arcsin(p: FractionLike, g_target: float) -> float:
    """The closed form written directly in P and the stop probability."""
    frac = as_fraction(p)
    if not frac.p - 1e-15 <= g_target <= 1.0:
        raise AnalyticError(
            "Target probability must lie in [P, 1]",
            internal_reason=f"p={frac.p}, g_target={g_target}",
        )
    a = math.asin(math.sqrt(g_target))
    b = math.asin(math.sqrt(frac.p))
    if abs(a - b) < get_settings().closed_form_tolerance:
        return _start_ratio(frac)
    spread = 2.0 * (a - b)
    wobble = math.sin(2.0 * a) - math.sin(2.0 * b)
    denominator = spread + wobble
    if denominator <= 0.0:
        return math.inf
    return (spread - wobble) / denominator


def solve_stop_probability(p: FractionLike, ratio: float) -> float:
    """
    Invert the closed form: the g whose expected ratio equals `ratio`.

    Bisection over X in [theta, pi/2]; the closed form increases in X there.

    Raises:
        AnalyticError: if the ratio lies outside [tan^2 theta, ratio at pi/2]
            or bisection fails to reach the tolerance.
    """
    frac = as_fraction(p)
    theta = frac.theta
    tol = get_settings().bisection_tolerance

    if theta >= HALF_PI:
        if math.isinf(ratio):
            return 1.0
        raise AnalyticError(
            "Ratio unsatisfiable: every state is marked",
            internal_reason=f"p=1, ratio={ratio}",
        )

    low_ratio = _closed_form(frac, theta)
    high_ratio = _closed_form(frac, HALF_PI)
    if abs(ratio - low_ratio) <= tol:
        return frac.p
    if abs(ratio - high_ratio) <= tol:
        return 1.0
    if not low_ratio < ratio < high_ratio:
        raise AnalyticError(
            f"Ratio {ratio:.12g} unsatisfiable for P={frac.p:.12g}; "
            f"reachable range is [{low_ratio:.12g}, {high_ratio:.12g}]",
            internal_reason="ratio outside closed-form range",
        )

    lo, hi = theta, HALF_PI
    mid = (lo + hi) / 2.0
    value = _closed_form(frac, mid)
    for _ in range(200):
        mid = (lo + hi) / 2.0
        value = _closed_form(frac, mid)
        if abs(value - ratio) <= tol:
            return math.sin(mid) ** 2
        if value < ratio:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16:
            break

    if abs(value - ratio) <= max(tol, 1e-12 * abs(ratio)):
        return math.sin(mid) ** 2
    raise AnalyticError(
        "Inversion did not converge",
        internal_reason=f"p={frac.p}, ratio={ratio}, residual={value - ratio}",
    )


# =============================================================================
# CALIBRATION TABLE AND SET_VAL RULES
# =============================================================================

def table1() -> list[Table1Row]:
    """Expected corrected ratio for the three cases at g = 0.5, 0.75, 1.0."""
    rows = []
    for case, (p, printed) in PUBLISHED_TABLE.items():
        for g, published_value in zip(TABLE_G_VALUES, printed):
            stop = StopAngle.from_probability(max(g, p))
            rows.append(Table1Row(
                case=case,
                p=p,
                g_target=g,
                ratio_closed=expected_ratio_closed(p, stop),
                ratio_quadrature=expected_ratio_quadrature(p, max(g, p)),
                ratio_published=published_value,
            ))
    return rows


def set_val_band(
    p: FractionLike,
    g_low: float = 0.5,
    g_high: float = 1.0,
    set_val: Optional[float] = None,
) -> SetValBand:
    """Expected ratios at which the stop lands between g_low and g_high."""
    frac = as_fraction(p)
    if g_low > g_high:
        raise AnalyticError("g_low must not exceed g_high", internal_reason=f"{g_low} > {g_high}")
    low = expected_ratio_closed(frac, StopAngle.from_probability(max(g_low, frac.p)))
    high = expected_ratio_closed(frac, StopAngle.from_probability(max(g_high, frac.p)))
    contains = None
    if set_val is not None:
        contains = meets_threshold(set_val, low) and meets_threshold(high, set_val)
    return SetValBand(
        p=frac.p, g_low=g_low, g_high=g_high,
        ratio_low=low, ratio_high=high, set_val=set_val,
        contains_set_val=contains,
    )


def universal_set_val_check(
    set_val: float = 1.0,
    grid: Optional[list[float]] = None,
) -> list[SetValBand]:
    """set_val_band for every P <= 1/2 on the grid, flagged against set_val."""
    grid = list(SUCCESS_FLOOR_GRID if grid is None else grid)
    return [set_val_band(p, set_val=set_val) for p in grid if p <= 0.5]


def set_val_for_known_p(p: FractionLike, g_target: float) -> float:
    """Threshold that stops near success probability g_target when P is known."""
    frac = as_fraction(p)
    return expected_ratio_closed(frac, StopAngle.from_probability(max(g_target, frac.p)))


def canonical_rotations(p: FractionLike) -> int:
    """floor(pi / (4 theta)), the rotation count of the known-m baseline."""
    return int(math.floor(math.pi / (4.0 * as_fraction(p).theta)))


def default_expectation_cap(p: FractionLike) -> int:
    return int(10.0 * math.sqrt(1.0 / as_fraction(p).p)) + 100


def stop_iteration_expected(
    p: FractionLike,
    set_val: float,
    cap: Optional[int] = None,
) -> tuple[int, float]:
    """
    First horizon whose expected discrete ratio reaches set_val.

    Returns:
        (r_stop, g_r_stop)

    Raises:
        ThresholdUnreachable: if the cap (default 10*sqrt(1/P) + 100) is hit.
    """
    if set_val <= 0.0:
        raise AnalyticError("set_val must be positive", internal_reason=f"set_val={set_val}")
    frac = as_fraction(p)
    cap = default_expectation_cap(frac) if cap is None else cap

    s1 = 0.0
    s0 = 0.0
    for r in range(cap + 1):
        g = success_probability(frac, r)
        s1 += g
        s0 += 1.0 - g
        ratio = s1 / s0 if s0 > 0.0 else math.inf
        if meets_threshold(ratio, set_val):
            logger.debug("expected ratio %.6g reached set_val at r=%d (p=%.6g)", ratio, r, frac.p)
            return r, g

    raise ThresholdUnreachable(
        "Threshold unreachable in expectation",
        internal_reason=f"p={frac.p}, set_val={set_val}, cap={cap}",
    )
