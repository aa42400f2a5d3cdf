"""Chi-square distribution functions from the regularized incomplete gamma function.

Series expansion for ``x < a + 1`` and a modified-Lentz continued fraction
otherwise, following the classic Numerical Recipes split.
"""
import math

__all__ = ["gammainc_lower", "gammainc_upper", "chi_square_sf", "chi_square_cdf", "chi_square_pdf"]

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10000


def _series(a, x):
    # P(a, x)
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _continued_fraction(a, x):
    # Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _series(a, x)
    return 1.0 - _continued_fraction(a, x)


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _series(a, x)
    return _continued_fraction(a, x)


def chi_square_sf(x: float, df: int) -> float:
    """Survival function ``1 - F(x)`` of the chi-square distribution with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if x < 0:
        raise ValueError("x must be nonnegative")
    return min(1.0, max(0.0, gammainc_upper(df / 2.0, x / 2.0)))


def chi_square_cdf(x: float, df: int) -> float:
    if x <= 0:
        return 0.0
    return min(1.0, max(0.0, gammainc_lower(df / 2.0, x / 2.0)))


def chi_square_pdf(x: float, df: int) -> float:
    if x < 0:
        return 0.0
    k = df / 2.0
    if x == 0:
        return 0.5 if df == 2 else (math.inf if df == 1 else 0.0)
    return math.exp((k - 1.0) * math.log(x) - x / 2.0 - k * math.log(2.0) - math.lgamma(k))
