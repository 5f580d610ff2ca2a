"""
Adaptive Simpson quadrature.

Kept free of the closed forms it is used to check, so it can act as an
independent oracle for them.
"""

from collections.abc import Callable


class QuadratureError(Exception):
    """Raised when the integrand or bounds cannot be integrated."""

    def __init__(self, message: str, internal_reason: str = ""):
        self.message = message
        self.internal_reason = internal_reason
        super().__init__(message)


def integrate_adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-9,
    max_depth: int = 40,
    min_depth: int = 4,
) -> tuple[float, float]:
    """
    Adaptive Simpson's rule with Richardson correction.

    Args:
        f: Integrand.
        a: Lower bound.
        b: Upper bound.
        tol: Absolute error tolerance for the whole interval.
        max_depth: Maximum bisection depth of any branch.
        min_depth: Depth every branch reaches before the error test applies.

    Returns:
        Tuple of (integral_value, error_estimate).
    """
    if tol <= 0.0:
        raise QuadratureError("Tolerance must be positive", internal_reason=f"tol={tol}")

    if a == b:
        return 0.0, 0.0

    if a > b:
        result, error = integrate_adaptive_simpson(f, b, a, tol, max_depth, min_depth)
        return -result, error

    def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 3.0 * (fa + 4.0 * fm + fb)

    def _adaptive(
        lo: float,
        hi: float,
        flo: float,
        fmid: float,
        fhi: float,
        whole: float,
        depth: int,
        eps: float,
    ) -> tuple[float, float]:
        mid = (lo + hi) / 2.0
        h = (hi - lo) / 2.0
        flm = f((lo + mid) / 2.0)
        frm = f((mid + hi) / 2.0)

        left = _simpson(flo, flm, fmid, h / 2.0)
        right = _simpson(fmid, frm, fhi, h / 2.0)
        delta = (left + right - whole) / 15.0

        if depth >= max_depth or (depth >= min_depth and abs(delta) < eps):
            return left + right + delta, abs(delta)

        lval, lerr = _adaptive(lo, mid, flo, flm, fmid, left, depth + 1, eps / 2.0)
        rval, rerr = _adaptive(mid, hi, fmid, frm, fhi, right, depth + 1, eps / 2.0)
        return lval + rval, lerr + rerr

    fa = f(a)
    fb = f(b)
    fm = f((a + b) / 2.0)
    whole = _simpson(fa, fm, fb, (b - a) / 2.0)
    return _adaptive(a, b, fa, fm, fb, whole, 0, tol)
