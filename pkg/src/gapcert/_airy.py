"""Overflow-safe evaluation of the Airy fundamental system.

The linear-potential equation w'' + (sigma*s + mu) w = 0 has the exact
fundamental system Ai(z), Bi(z) with z = -(mu + sigma*s) / sigma^(2/3).
For z >> 0 the pair spans e^{-xi}, e^{+xi} with xi = (2/3) z^(3/2), which
overflows double precision long before the quantities of interest do.  All
evaluations here therefore work with the exponent-split representation

    Ai(z)  = ai_s  * exp(-xi),      Bi(z)  = bi_s  * exp(+xi),
    Ai'(z) = aip_s * exp(-xi),      Bi'(z) = bip_s * exp(+xi),

where xi = (2/3) max(z, 0)^(3/2) and the starred factors stay O(|z|^(1/4)).
scipy supplies the split values for z >= 0 (`airye`) and plain values for
z < 0, where xi = 0.  Plain scipy Airy evaluation degrades for z < -2e6;
callers must keep arguments inside that range (enforced upstream by the
solver's backend selection).
"""

from __future__ import annotations

import numpy as np
from scipy import special

# scipy's negative-argument asymptotics lose the phase around here.
MAX_NEG_ARG = 2.0e6


def airy_scaled(z):
    """Split-exponent Airy values at `z` (scalar or array).

    Returns (ai_s, aip_s, bi_s, bip_s, xi) with the convention documented in
    the module docstring.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if np.any(z < -MAX_NEG_ARG):
        raise ValueError(f"Airy argument below supported range: min={z.min():g}")
    pos = z > 0.0
    ai_s = np.empty_like(z)
    aip_s = np.empty_like(z)
    bi_s = np.empty_like(z)
    bip_s = np.empty_like(z)
    xi = np.zeros_like(z)
    if np.any(pos):
        zp = z[pos]
        a, ap, b, bp = special.airye(zp)
        ai_s[pos], aip_s[pos], bi_s[pos], bip_s[pos] = a, ap, b, bp
        xi[pos] = (2.0 / 3.0) * zp ** 1.5
    if np.any(~pos):
        zn = z[~pos]
        a, ap, b, bp = special.airy(zn)
        ai_s[~pos], aip_s[~pos], bi_s[~pos], bip_s[~pos] = a, ap, b, bp
    if scalar:
        return ai_s[0], aip_s[0], bi_s[0], bip_s[0], xi[0]
    return ai_s, aip_s, bi_s, bip_s, xi
