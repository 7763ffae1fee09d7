"""Special functions: complete elliptic integrals via the arithmetic-geometric
mean, and incomplete gamma functions including negative parameters."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

__all__ = [
    "SpecialFnResult",
    "elliptic_K",
    "elliptic_E",
    "upper_incomplete_gamma",
    "lower_incomplete_gamma",
]

_AGM_TOL = 1e-15


@dataclass(frozen=True)
class SpecialFnResult:
    """A computed value together with an absolute error estimate."""
    value: float
    abs_error_estimate: float

    def __float__(self):
        return self.value


def elliptic_K(m):
    """Complete elliptic integral of the first kind, parameter convention
    K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt, computed by the AGM."""
    if not (0.0 <= m < 1.0):
        raise ValueError("elliptic_K requires m in [0, 1)")
    a, b = 1.0, math.sqrt(1.0 - m)
    while abs(a - b) > _AGM_TOL:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    value = math.pi / (2.0 * a)
    err = max(abs(a - b) / a * value, 1e-15 * value)
    return SpecialFnResult(value, err)


def elliptic_E(m):
    """Complete elliptic integral of the second kind,
    E(m) = int_0^{pi/2} (1 - m sin^2 t)^{1/2} dt, computed by the AGM with the
    running-sum correction E = K (1 - sum_n 2^{n-1} c_n^2)."""
    if not (0.0 <= m <= 1.0):
        raise ValueError("elliptic_E requires m in [0, 1]")
    if m == 1.0:
        return SpecialFnResult(1.0, 1e-15)
    a, b = 1.0, math.sqrt(1.0 - m)
    c = math.sqrt(m)
    total = 0.5 * c * c  # 2^{-1} c_0^2
    power = 0.5
    while abs(a - b) > _AGM_TOL:
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        power *= 2.0
        total += power * c * c
    k = math.pi / (2.0 * a)
    value = k * (1.0 - total)
    err = max(abs(a - b) / a * abs(value), 1e-15 * abs(value) + 1e-16)
    return SpecialFnResult(value, err)


def lower_incomplete_gamma(s, x):
    """gamma(s, x) = int_0^x t^{s-1} e^{-t} dt for s > 0, x >= 0."""
    if np.any(np.asarray(s) <= 0):
        raise ValueError("lower_incomplete_gamma requires s > 0")
    if np.any(np.asarray(x) < 0):
        raise ValueError("lower_incomplete_gamma requires x >= 0")
    return sp.gammainc(s, x) * sp.gamma(s)


def upper_incomplete_gamma(s, x):
    """Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt.

    For s <= 0 the value is computed (with x strictly positive) by the downward
    recurrence Gamma(s, x) = (Gamma(s+1, x) - x^s e^{-x}) / s applied until the
    parameter is positive, with Gamma(0, x) = E_1(x) handled directly.
    """
    x = np.asarray(x, dtype=float)
    s = float(s)
    if s > 0:
        if np.any(x < 0):
            raise ValueError("upper_incomplete_gamma requires x >= 0 for s > 0")
        out = sp.gammaincc(s, x) * sp.gamma(s)
        return out if out.shape else float(out)
    if np.any(x <= 0):
        raise ValueError("upper_incomplete_gamma requires x > 0 when s <= 0")
    if s == 0.0:
        out = sp.exp1(x)
        return out if out.shape else float(out)
    # shift s up to positive territory, then walk back down
    n = int(math.ceil(-s))
    if s + n == 0.0:
        n += 1
    top = sp.gammaincc(s + n, x) * sp.gamma(s + n)
    for k in range(n):
        sk = s + n - 1 - k
        top = (top - x**sk * np.exp(-x)) / sk
    return top if np.asarray(top).shape else float(top)
