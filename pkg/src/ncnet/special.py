"""Small special-function helpers used by the bounds and identity checks."""

from __future__ import annotations

import math

EULER_GAMMA = 0.57721566490153286061

# B_2k / (2k) for k = 1..7
_ASYMPTOTIC_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x: float) -> float:
    """Digamma function for real x > 0.

    Shifts the argument up to x >= 8 with psi(x) = psi(x + 1) - 1/x and then
    uses the asymptotic expansion. Absolute error is below 1e-12 on (0, inf).
    """
    if not x > 0.0:
        raise ValueError(f"digamma requires x > 0, got {x!r}")
    shift = 0.0
    while x < 8.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for c in _ASYMPTOTIC_COEFFS:
        series += c * power
        power *= inv2
    return shift + math.log(x) - 0.5 / x - series


def log_gamma(x: float) -> float:
    return math.lgamma(x)


def binary_entropy(p: float) -> float:
    """Binary entropy in nats."""
    if p < 0.0 or p > 1.0:
        raise ValueError(f"probability out of range: {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)
