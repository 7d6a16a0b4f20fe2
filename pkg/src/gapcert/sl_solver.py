"""Eigenvalue solver for the tent-potential problem on a symmetric interval.

Solves  w'' + sigma*|s|*w = -mu*w  on [-D/2, D/2] with Dirichlet ends.
Because the potential is even, every eigenfunction has definite parity and
the problem reduces to the half interval [0, D/2] where the potential is the
smooth linear ramp sigma*s:

    even modes:  w'(0) = 0,  w(D/2) = 0
    odd  modes:  w(0)  = 0,  w(D/2) = 0

On the half interval the ODE has the exact Airy fundamental system, so the
shooting solution, its derivative and the matching (characteristic) function
are evaluated in closed form with split-exponent scaling; eigenvalues are
bracketed by oscillation counting and refined by Brent's method.  For
sigma = 0 the fundamental system is trigonometric and the same machinery
applies.  For slopes so small that Airy arguments leave the reliable range,
the trigonometric system plus a first-order Rayleigh shift is used instead
(the neglected second-order term is far below the solver tolerance there).

Eigenvalue differences between the almost-degenerate even/odd pairs that
appear at large slope collapse below double precision; `sl_gap` escalates
those to arbitrary-precision Airy evaluation so the gap itself is always
resolved.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Literal

import mpmath as mp
import numpy as np
from scipy.optimize import brentq

from ._airy import airy_scaled
from .errors import InvalidProblem, InvariantViolation, NonConvergence

Parity = Literal["even", "odd"]

# Airy backend is used whenever its arguments stay inside this range;
# below that (tiny slopes only) the perturbative trig backend takes over.
_ZETA_SAFE = 1.5e6

# Small slopes put both interval ends deep in the oscillatory Airy regime,
# where the eigencondition cancels two large, independently rounded phases:
# the root error grows like phase * eps / (D / 4 sqrt(mu)).  Roots whose
# phase exceeds this are re-polished in arbitrary precision.
_PHASE_POLISH = 1.0e4

_COUNT_BUDGET = 240

# mpmath precision is process-global state; concurrent sweeps must not race it.
_MP_LOCK = threading.Lock()


@dataclass(frozen=True)
class SLProblem:
    """Tent-potential eigenproblem parameters.

    sigma:     potential slope (>= 0, units 1/length^3)
    diameter:  interval length D (> 0)
    grid_size: number of sample points on [0, D/2] (>= 64)
    """

    sigma: float
    diameter: float
    grid_size: int = 2048

    def __post_init__(self):
        if not (self.sigma >= 0.0) or not np.isfinite(self.sigma):
            raise InvalidProblem(f"sigma must be >= 0, got {self.sigma!r}")
        if not (self.diameter > 0.0) or not np.isfinite(self.diameter):
            raise InvalidProblem(f"diameter must be > 0, got {self.diameter!r}")
        if int(self.grid_size) != self.grid_size or self.grid_size < 64:
            raise InvalidProblem(f"grid_size must be an integer >= 64, got {self.grid_size!r}")

    @property
    def half(self) -> float:
        return 0.5 * self.diameter


@dataclass(frozen=True, eq=False)
class SLEigenpair:
    """One eigenvalue with its half-interval eigenfunction samples.

    `samples` and `derivative_samples` are (M, 2) arrays of (s, value) pairs
    on the uniform grid over [0, D/2], scaled so max |w| = 1 with w0 > 0 on
    [0, D/2) and w1 > 0 on (0, D/2).  `value_at`/`derivative_at` evaluate the
    same scaled eigenfunction at arbitrary points of [0, D/2].
    """

    index: int
    mu: float
    parity: Parity
    samples: np.ndarray
    derivative_samples: np.ndarray
    value_at: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    derivative_at: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def log_derivative_at(self, s):
        """w'(s)/w(s), stable wherever w is bounded away from zero."""
        return self.derivative_at(s) / self.value_at(s)

    def extension_sign_changes(self) -> int:
        """Sign changes of the parity extension over the open full interval."""
        s, w = self.samples[:, 0], self.samples[:, 1]
        if self.parity == "even":
            full = np.concatenate([w[:0:-1], w])
        else:
            full = np.concatenate([-w[:0:-1], w])
        interior = full[1:-1]
        return _sign_changes(interior)


@dataclass(frozen=True, eq=False)
class SLSpectrum:
    """Ordered eigenpairs n = 0..K-1 of one tent-potential problem."""

    problem: SLProblem
    pairs: tuple[SLEigenpair, ...]

    def mu(self, n: int) -> float:
        return self.pairs[n].mu

    def pair(self, n: int) -> SLEigenpair:
        return self.pairs[n]

    def validate(self) -> None:
        """Re-check ordering and the -mu0 < sigma*D/2 bound."""
        mus = [p.mu for p in self.pairs]
        scale = max(1.0, max(abs(m) for m in mus))
        for a, b in zip(mus, mus[1:]):
            if not (b > a - 8.0 * np.finfo(float).eps * scale):
                raise InvariantViolation("eigenvalue_ordering", b - a)
        if not (-mus[0] < self.problem.sigma * self.problem.half + 1e-9 * scale):
            raise InvariantViolation("mu0_slope_bound", -mus[0])


def _sign_changes(values: np.ndarray) -> int:
    signs = np.sign(values)
    signs = signs[signs != 0]
    if signs.size < 2:
        return 0
    return int(np.count_nonzero(signs[:-1] != signs[1:]))


# ---------------------------------------------------------------------------
# Fundamental-system backends on the half interval
# ---------------------------------------------------------------------------


class _AirySystem:
    """Exact Airy fundamental system for slope sigma > 0."""

    def __init__(self, sigma: float, diameter: float):
        self.sigma = sigma
        self.half = 0.5 * diameter
        self.cbrt = np.cbrt(sigma)
        self.scale = self.cbrt ** 2  # sigma^(2/3)

    def _zeta(self, mu: float, s):
        return -(mu + self.sigma * np.asarray(s, dtype=float)) / self.scale

    def _coeffs(self, mu: float, parity: Parity):
        a0, ap0, b0, bp0, xi0 = airy_scaled(self._zeta(mu, 0.0))
        if parity == "even":
            return bp0, ap0, xi0
        return b0, a0, xi0

    def signed_values(self, mu: float, parity: Parity, s):
        """w(s) times a positive per-point factor; safe for sign counting."""
        A, B, xi0 = self._coeffs(mu, parity)
        ai, _, bi, _, xi = airy_scaled(self._zeta(mu, s))
        return A * ai - B * bi * np.exp(2.0 * (xi - xi0))

    def characteristic(self, mu: float, parity: Parity) -> float:
        return float(self.signed_values(mu, parity, self.half))

    def wave(self, mu: float, parity: Parity, s):
        """(w, w') at `s`, both carrying one common positive scale factor."""
        A, B, xi0 = self._coeffs(mu, parity)
        ai, aip, bi, bip, xi = airy_scaled(self._zeta(mu, s))
        down = np.exp(-xi)
        up = np.exp(xi - 2.0 * xi0)
        w = A * ai * down - B * bi * up
        wp = -self.cbrt * (A * aip * down - B * bip * up)
        return w, wp

    def q_max(self, mu: float) -> float:
        return mu + self.sigma * self.half

    def mu_shift(self, mu: float) -> float:
        return mu

    def mp_characteristic(self, parity: Parity):
        """Arbitrary-precision characteristic for near-degenerate refinement."""
        sigma = mp.mpf(self.sigma)
        half = mp.mpf(self.half)
        scale = sigma ** mp.mpf("2/3")

        def char(mu):
            z0 = -mu / scale
            z1 = -(mu + sigma * half) / scale
            d = 1 if parity == "even" else 0
            return (mp.airybi(z0, derivative=d) * mp.airyai(z1)
                    - mp.airyai(z0, derivative=d) * mp.airybi(z1))

        return char


class _TrigSystem:
    """Constant-potential fundamental system (slope exactly or effectively 0).

    For a tiny positive slope the eigenvalues carry the first-order Rayleigh
    shift -<w, sigma*s*w>/<w, w>, evaluated in closed form; the returned
    eigenfunctions are the unperturbed ones.
    """

    def __init__(self, sigma: float, diameter: float):
        self.sigma = sigma
        self.half = 0.5 * diameter

    def _k_or_q(self, mu: float):
        if mu >= 0.0:
            return math.sqrt(mu), True
        return math.sqrt(-mu), False

    def signed_values(self, mu: float, parity: Parity, s):
        s = np.asarray(s, dtype=float)
        k, oscillatory = self._k_or_q(mu)
        if parity == "even":
            return np.cos(k * s) if oscillatory else np.cosh(np.minimum(k * s, 700.0))
        if oscillatory:
            return np.sin(k * s) / k if k > 0 else s
        return np.sinh(np.minimum(k * s, 700.0)) / k

    def characteristic(self, mu: float, parity: Parity) -> float:
        return float(self.signed_values(mu, parity, self.half))

    def wave(self, mu: float, parity: Parity, s):
        s = np.asarray(s, dtype=float)
        k, oscillatory = self._k_or_q(mu)
        if parity == "even":
            if oscillatory:
                return np.cos(k * s), -k * np.sin(k * s)
            return np.cosh(k * s), k * np.sinh(k * s)
        if oscillatory:
            if k == 0.0:
                return s, np.ones_like(s)
            return np.sin(k * s) / k, np.cos(k * s)
        return np.sinh(k * s) / k, np.cosh(k * s)

    def q_max(self, mu: float) -> float:
        return mu

    def mu_shift(self, mu: float) -> float:
        # Closed-form first-order shift for w = cos(ks) / sin(ks), kL = j*pi/2.
        if self.sigma == 0.0 or mu <= 0.0:
            return mu
        L = self.half
        k = math.sqrt(mu)
        j = round(2.0 * k * L / math.pi)  # n+1 for the n-th full-interval mode
        if j % 2 == 1:  # even eigenfunction (cosine)
            shift = L / 2.0 - 1.0 / (2.0 * k * k * L)
        else:  # odd eigenfunction (sine)
            shift = L / 2.0
        return mu - self.sigma * shift


def _make_system(problem: SLProblem, n_modes: int):
    sigma, D = problem.sigma, problem.diameter
    if sigma == 0.0:
        return _TrigSystem(sigma, D)
    hi = ((n_modes + 2) * math.pi / D) ** 2 + sigma * D / 2.0
    zeta_max = (abs(hi) + sigma * D / 2.0) / np.cbrt(sigma) ** 2
    if zeta_max <= _ZETA_SAFE:
        return _AirySystem(sigma, D)
    sigma_hat = sigma * (D / 2.0) ** 3
    if sigma_hat < 1e-4:
        return _TrigSystem(sigma, D)
    raise InvalidProblem(
        f"slope sigma={sigma:g} outside the supported range for D={D:g}")


# ---------------------------------------------------------------------------
# Eigenvalue location
# ---------------------------------------------------------------------------


def _count_zeros(system, mu: float, parity: Parity) -> int:
    """Interior zeros of the shooting solution on (0, D/2).

    The grid keeps at least 4 points per half-wavelength of the fastest
    oscillation (Sturm comparison bound), so no pair of zeros can share a
    cell and the count is exact.
    """
    q = max(system.q_max(mu), 1.0)
    n = int(max(64, math.ceil(system.half * math.sqrt(q) * 4.0 / math.pi))) + 1
    s = np.linspace(0.0, system.half, n + 1)
    vals = system.signed_values(mu, parity, s[1:-1])
    return _sign_changes(vals)


def _bracket_eigenvalue(system, parity: Parity, m: int,
                        lo: float, hi: float) -> tuple[float, float]:
    """Narrow [lo, hi] to an adjacent count-m / count-(m+1) pair."""
    c_lo = _count_zeros(system, lo, parity)
    c_hi = _count_zeros(system, hi, parity)
    budget = _COUNT_BUDGET
    while c_lo > m:
        lo -= max(1.0, hi - lo)
        c_lo = _count_zeros(system, lo, parity)
        budget -= 1
        if budget <= 0:
            raise NonConvergence(f"no lower bracket for mode {m} ({parity})")
    while c_hi < m + 1:
        hi += max(1.0, hi - lo)
        c_hi = _count_zeros(system, hi, parity)
        budget -= 1
        if budget <= 0:
            raise NonConvergence(f"no upper bracket for mode {m} ({parity})")
    while not (c_lo == m and c_hi == m + 1):
        mid = 0.5 * (lo + hi)
        c_mid = _count_zeros(system, mid, parity)
        if c_mid <= m:
            lo, c_lo = mid, c_mid
        else:
            hi, c_hi = mid, c_mid
        budget -= 1
        if budget <= 0:
            raise NonConvergence(f"count bisection stalled for mode {m} ({parity})")
    return lo, hi


def _refine_root(system, parity: Parity, lo: float, hi: float) -> float:
    """Brent refinement of the characteristic root inside/near [lo, hi].

    The count transition can sit up to O(1) in mu away from the true root
    (a zero within one counting cell of the endpoint), so if the endpoints
    do not straddle a sign change the bracket is inflated and scanned.
    """
    f = lambda mu: system.characteristic(mu, parity)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi < 0.0:
        return brentq(f, lo, hi, xtol=1e-13, rtol=4e-15)
    pad = max(4.0, 0.5 * (hi - lo))
    for attempt in range(4):
        a, b = lo - pad, hi + pad
        xs = np.linspace(a, b, 257)
        vals = np.array([f(x) for x in xs])
        signs = np.sign(vals)
        idx = np.nonzero((signs[:-1] != 0) & (signs[1:] != 0)
                         & (signs[:-1] != signs[1:]))[0]
        if idx.size:
            mid = 0.5 * (lo + hi)
            best = idx[np.argmin(np.abs(0.5 * (xs[idx] + xs[idx + 1]) - mid))]
            return brentq(f, xs[best], xs[best + 1], xtol=1e-13, rtol=4e-15)
        pad *= 4.0
    raise NonConvergence(f"no sign change of the characteristic near mode bracket "
                         f"[{lo:g}, {hi:g}] ({parity})")


def _solve_mode(system, parity: Parity, m: int, window: tuple[float, float]) -> float:
    lo, hi = _bracket_eigenvalue(system, parity, m, *window)
    mu = _refine_root(system, parity, lo, hi)
    if isinstance(system, _AirySystem) and _airy_phase(system, mu) > _PHASE_POLISH:
        dps = 30 + int(math.log10(_airy_phase(system, mu)))
        with _MP_LOCK, mp.workdps(dps):
            char = system.mp_characteristic(parity)
            mu = float(mp.findroot(char, mp.mpf(mu), solver="secant",
                                   tol=mp.mpf(10) ** (-dps + 6)))
    return system.mu_shift(mu)


def _airy_phase(system, mu: float) -> float:
    return (2.0 / 3.0) * max(-float(system._zeta(mu, 0.0)), 0.0) ** 1.5


def _ivp_wave(problem: SLProblem, mu: float, parity: Parity):
    """Dense eigenfunction by direct high-order integration.

    Used when both fundamental-system arguments are deep in the oscillatory
    Airy range: there scipy's Airy values carry phase noise ~phase*eps that
    the sample-residual differencing would amplify, while the ODE itself is
    oscillatory and non-stiff, so integration is both accurate and cheap.
    """
    from scipy.integrate import solve_ivp

    y0 = [1.0, 0.0] if parity == "even" else [0.0, 1.0]
    # max_step of one sample cell keeps the dense interpolant's within-step
    # error far below what residual differencing of the samples can amplify
    sol = solve_ivp(
        lambda s, y: [y[1], -(problem.sigma * s + mu) * y[0]],
        (0.0, problem.half), y0, method="DOP853",
        rtol=1e-13, atol=1e-14, dense_output=True,
        max_step=4.0 * problem.half / problem.grid_size)
    if not sol.success:
        raise NonConvergence("eigenfunction integration failed")
    return sol.sol


def _sample_phase_limit(problem: SLProblem, mu: float) -> float:
    """Largest Airy phase whose value noise (~phase*eps) stays a factor 5
    below the sample-residual tolerance after five-point differencing
    (which amplifies pointwise noise by ~5.33/h^2)."""
    h = problem.half / (problem.grid_size - 1)
    tol = 1e-6 * (1.0 + mu + problem.sigma * problem.half)
    return 0.2 * tol * h * h / (5.33 * float(np.finfo(float).eps))


def _build_pair(system, problem: SLProblem, n: int, mu: float) -> SLEigenpair:
    parity: Parity = "even" if n % 2 == 0 else "odd"
    s = np.linspace(0.0, problem.half, problem.grid_size)
    if isinstance(system, _AirySystem) and \
            _airy_phase(system, mu) > _sample_phase_limit(problem, mu):
        dense = _ivp_wave(problem, mu, parity)

        def wave_fn(x, _d=dense):
            out = _d(np.atleast_1d(np.asarray(x, dtype=float)))
            return out[0], out[1]
    else:
        raw_mu = mu if not isinstance(system, _TrigSystem) \
            else _unshifted(system, mu, parity)

        def wave_fn(x, _sys=system, _mu=raw_mu, _p=parity):
            return _sys.wave(_mu, _p, x)

    w, wp = wave_fn(s)
    mx = float(np.max(np.abs(w)))
    if mx == 0.0:
        raise NonConvergence(f"degenerate eigenfunction samples for mode {n}")
    flip = -math.copysign(1.0, wp[-1])  # positive final lobe: w > 0 near D/2
    scale = flip / mx
    w = w * scale
    wp = wp * scale

    def value_at(x, _f=wave_fn, _c=scale):
        return _f(x)[0] * _c

    def derivative_at(x, _f=wave_fn, _c=scale):
        return _f(x)[1] * _c

    return SLEigenpair(
        index=n, mu=mu, parity=parity,
        samples=np.column_stack([s, w]),
        derivative_samples=np.column_stack([s, wp]),
        value_at=value_at, derivative_at=derivative_at,
    )


def _unshifted(system: _TrigSystem, mu: float, parity: Parity) -> float:
    # Invert the first-order shift so trig evaluators use the unperturbed mode.
    if system.sigma == 0.0:
        return mu
    # The shift is constant in mu for each mode; recover by fixed point.
    guess = mu
    for _ in range(4):
        guess = mu + (guess - system.mu_shift(guess))
    return guess


def solve_sl(problem: SLProblem, n_modes: int) -> SLSpectrum:
    """First `n_modes` eigenpairs (n = 0..n_modes-1), ordered by eigenvalue.

    Eigenvalues are bracketed to relative width 1e-10 (absolute 1e-12 below
    magnitude one); eigenfunctions are sampled on the uniform grid and scaled
    to max-norm one with the positivity conventions of the class docstring.
    """
    if not isinstance(problem, SLProblem):
        raise InvalidProblem("problem must be an SLProblem")
    if int(n_modes) != n_modes or not (1 <= n_modes <= 8):
        raise InvalidProblem(f"n_modes must be an integer in 1..8, got {n_modes!r}")
    system = _make_system(problem, n_modes)
    window = (-problem.sigma * problem.half - 1.0,
              ((n_modes + 2) * math.pi / problem.diameter) ** 2
              + problem.sigma * problem.half)
    pairs = []
    for n in range(n_modes):
        parity: Parity = "even" if n % 2 == 0 else "odd"
        mu = _solve_mode(system, parity, n // 2, window)
        pairs.append(_build_pair(system, problem, n, mu))
    spectrum = SLSpectrum(problem=problem, pairs=tuple(pairs))
    spectrum.validate()
    return spectrum


def ode_residual_inf(pair: SLEigenpair, problem: SLProblem) -> float:
    """Max-norm residual of w'' + (sigma*s + mu) w on the sample grid.

    w'' comes from the 4th-order five-point stencil applied to the samples,
    i.e. the check differentiates the stored data rather than reusing the
    equation, so it genuinely ties samples, eigenvalue and potential together.
    """
    s = pair.samples[:, 0]
    w = pair.samples[:, 1]
    h = s[1] - s[0]
    wxx = (-w[:-4] + 16 * w[1:-3] - 30 * w[2:-2] + 16 * w[3:-1] - w[4:]) / (12 * h * h)
    interior = slice(2, -2)
    resid = wxx + (problem.sigma * s[interior] + pair.mu) * w[interior]
    return float(np.max(np.abs(resid)))


# ---------------------------------------------------------------------------
# Derived operations
# ---------------------------------------------------------------------------


def critical_sigma(diameter: float) -> float:
    """Slope at which the lowest eigenvalue crosses zero.

    Bisection on sigma -> mu0(sigma) (strictly decreasing) over
    [0, 1e6/D^3], tightened well below 1e-8 relative and polished with a
    secant step so |mu0(sigma0)| lands near machine precision.
    """
    if not (diameter > 0.0):
        raise InvalidProblem(f"diameter must be > 0, got {diameter!r}")
    D = diameter

    def mu0(sigma: float) -> float:
        prob = SLProblem(sigma=sigma, diameter=D, grid_size=64)
        system = _make_system(prob, 1)
        window = (-sigma * D / 2.0 - 1.0, (3 * math.pi / D) ** 2 + sigma * D / 2.0)
        return _solve_mode(system, "even", 0, window)

    lo, f_lo = 0.0, (math.pi / D) ** 2
    hi = 1e6 / D ** 3
    f_hi = mu0(hi)
    if f_hi >= 0.0:
        raise NonConvergence("mu0 does not change sign on [0, 1e6/D^3]")
    while hi - lo > 2.5e-9 * hi:
        mid = 0.5 * (lo + hi)
        f_mid = mu0(mid)
        if f_mid > 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    # secant polish inside the final bracket
    a, fa, b, fb = lo, f_lo, hi, f_hi
    for _ in range(8):
        if fb == fa:
            break
        c = b - fb * (b - a) / (fb - fa)
        if not (lo <= c <= hi):
            break
        fc = mu0(c)
        a, fa, b, fb = b, fb, c, fc
        if abs(fc) < 1e-13 * max(1.0, (math.pi / D) ** 2):
            break
    return b


def sl_gap(problem: SLProblem) -> tuple[float, float, float]:
    """(mu0, mu1, mu1 - mu0); the difference is always resolved.

    When the even/odd pair is degenerate to double precision (large-slope
    collapse), both roots are re-refined with arbitrary-precision Airy
    evaluation at a precision set by the tunnelling exponent, and the gap is
    the difference of those refined values.  A gap below the double-precision
    floor (possible: it shrinks exponentially in the slope) is reported as
    the smallest positive subnormal so the result stays strictly positive.
    """
    spectrum = solve_sl(problem, 2)
    mu0, mu1 = spectrum.mu(0), spectrum.mu(1)
    gap = mu1 - mu0
    scale = max(1.0, abs(mu0))
    if gap >= 1e-6 * scale:
        return mu0, mu1, gap
    if problem.sigma <= 0.0:
        return mu0, mu1, gap
    action = (4.0 / 3.0) * max(-mu0, 0.0) ** 1.5 / problem.sigma
    dps = min(1200, 50 + int(0.5 * action))
    system = _AirySystem(problem.sigma, problem.diameter)
    with _MP_LOCK, mp.workdps(dps):
        refined = []
        for parity, seed in (("even", mu0), ("odd", mu1)):
            char = system.mp_characteristic(parity)
            root = mp.findroot(char, mp.mpf(seed), solver="secant",
                               tol=mp.mpf(10) ** (-dps + 8))
            refined.append(root)
        gap_mp = refined[1] - refined[0]
        if gap_mp <= 0:
            raise InvariantViolation("sl_gap_positive", float(gap_mp))
        gap_f = float(gap_mp)
        if gap_f == 0.0:
            gap_f = math.ulp(0.0)
        return float(refined[0]), float(refined[1]), gap_f


def check_lagrange_monotonicity(spectrum: SLSpectrum) -> float:
    """Minimum of w0*w1' - w1*w0' over the grid short of the endpoint.

    Positivity of this combination is what makes the eigenfunction ratio
    strictly increasing; the endpoint itself is excluded because both
    eigenfunctions vanish there and the combination tends to zero.
    """
    if len(spectrum.pairs) < 2:
        raise InvalidProblem("spectrum must contain modes 0 and 1")
    w0 = spectrum.pair(0)
    w1 = spectrum.pair(1)
    comb = (w0.samples[:, 1] * w1.derivative_samples[:, 1]
            - w1.samples[:, 1] * w0.derivative_samples[:, 1])
    return float(np.min(comb[:-1]))
