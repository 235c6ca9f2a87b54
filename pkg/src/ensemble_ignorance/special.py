"""Log-gamma and digamma for positive real arguments.

Both functions shift small arguments upward with the functional recurrence
and then evaluate the Stirling / asymptotic series, whose coefficients come
from the Bernoulli numbers B_2 .. B_16.
"""
import math

from .exceptions import DomainError

__all__ = ["log_gamma", "digamma", "EULER_GAMMA"]

EULER_GAMMA = 0.57721566490153286061

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_2k / (2k (2k - 1)), k = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)

# B_2k / (2k), k = 1..7
_PSI_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

_LGAMMA_SHIFT = 10.0
_PSI_SHIFT = 6.0


def _check(x, name):
    try:
        x = float(x)
    except (TypeError, ValueError):
        raise DomainError(f"{name} requires a real argument, got {x!r}") from None
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} is defined here only for finite x > 0, got {x!r}")
    return x


def _series(coeffs, inv, inv_step):
    # Horner in inv_step, highest-order term first
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * inv_step + c
    return acc * inv


def log_gamma(x):
    """Natural log of the gamma function for real ``x > 0``."""
    x = _check(x, "log_gamma")
    if x == 1.0 or x == 2.0:
        return 0.0
    shift = 1.0
    while x < _LGAMMA_SHIFT:
        shift *= x
        x += 1.0
    inv = 1.0 / x
    value = (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI
    value += _series(_STIRLING, inv, inv * inv)
    return value - math.log(shift)


def digamma(x):
    """Digamma function psi(x) = d/dx ln Gamma(x) for real ``x > 0``.

    Arguments below 6 are pushed up with psi(x) = psi(x + 1) - 1/x before the
    asymptotic expansion is applied.
    """
    x = _check(x, "digamma")
    correction = 0.0
    while x < _PSI_SHIFT:
        correction += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    value = math.log(x) - 0.5 / x - _series(_PSI_ASYMPTOTIC, inv2, inv2)
    return value - correction
