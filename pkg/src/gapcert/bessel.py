"""Series evaluation of J0/J1 and their zeros.

Self-contained reference values for the disk eigenproblem: the Dirichlet
Laplacian eigenvalues on the unit disk are squared Bessel zeros, and the
series below (plus bracketed root finding) reproduces those zeros to
near machine precision for the small arguments needed here.
"""

from __future__ import annotations

from scipy.optimize import brentq

from .errors import InvalidProblem


def bessel_j0(x: float) -> float:
    """Power series for J0; accurate for |x| up to ~20."""
    z = -0.25 * x * x
    term = 1.0
    total = 1.0
    for k in range(1, 80):
        term *= z / (k * k)
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def bessel_j1(x: float) -> float:
    """Power series for J1; accurate for |x| up to ~20."""
    z = -0.25 * x * x
    term = 0.5 * x
    total = term
    for k in range(1, 80):
        term *= z / (k * (k + 1))
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def bessel_zero(order: int, k: int) -> float:
    """k-th positive zero (k >= 1) of J0 or J1 by scan + bracket refinement."""
    if order not in (0, 1):
        raise InvalidProblem("only J0 and J1 zeros are provided")
    if k < 1 or k > 5:
        raise InvalidProblem("zeros are provided for k in 1..5")
    f = bessel_j0 if order == 0 else bessel_j1
    lo = 1e-9 if order == 0 else 0.5  # skip J1's zero at the origin
    found = 0
    x = lo
    step = 0.05
    prev_x, prev_f = x, f(x)
    while x < 20.0:
        x += step
        cur = f(x)
        if prev_f == 0.0:
            found += 1
            if found == k:
                return prev_x
        elif prev_f * cur < 0.0:
            found += 1
            if found == k:
                return brentq(f, prev_x, x, xtol=1e-14, rtol=8.9e-16)
        prev_x, prev_f = x, cur
    raise InvalidProblem(f"zero {k} of J{order} not found below 20")
