"""Log-derivative (Riccati) machinery and the moduli built from it.

From the ground state w0 of the tent-potential problem with slope above
critical (mu0 < 0) the log-derivative v = w0'/w0 rises from v(0) = 0 to a
unique interior maximum at s0 and falls afterwards.  Shifting by s0 and
scaling by eta in (1/2, (D/2 - s0)/(D/2)) produces

    omega(s) = -eta * v(eta*s + s0),        psi = -omega,

which is finite on all of [0, D/2], satisfies the shifted Riccati identity
omega' - omega^2 - eta^2*F(eta*s + s0) = eta^2*mu0 exactly, and - once the
slope dominates the drift bound (sigma >= 8*Lambda) - the expansion-modulus
inequality 2*psi'' + 4*psi'*psi + 2*Lambda <= 0.  The eigenfunction ratio
w1/w0 evaluated along the same shift gives the separable time-dependent
continuity modulus.

All derivative checks below differentiate the constructed profiles
numerically (five-point stencils on the exact evaluators); none of them
reuse the defining ODE, so a wrong eigenvalue, shift or scale makes the
checks fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DegenerateProfile,
    InvalidProblem,
    InvariantViolation,
    MultipleTurningPoints,
    NonConvergence,
)
from .sl_solver import SLProblem, SLSpectrum, critical_sigma, solve_sl

# Retention threshold for log-derivative samples: w0 below this fraction of
# its max gives a 0/0 ratio in floating point.
_RETAIN = 1e-10

# Stencil arms for first/second derivative checks (fractions of D/2); the
# second-derivative arm is larger to keep roundoff amplification ~eps/h^2 low.
_H1_FRAC = 2e-5
_H2_FRAC = 3e-4


@dataclass(frozen=True, eq=False)
class RiccatiProfile:
    """Sampled log-derivative v = w0'/w0 with its turning point."""

    sigma: float
    diameter: float
    mu0: float
    samples: np.ndarray  # (m, 2) pairs (s, v(s)) on the retained range
    s0: float
    v_at_s0: float
    v_at: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    ivp_residual: float = 0.0

    @property
    def half(self) -> float:
        return 0.5 * self.diameter


@dataclass(frozen=True, eq=False)
class ModulusProfile:
    """Shifted/scaled expansion modulus omega and its negative psi."""

    eta: float
    s0: float
    eta_sigma: float
    sigma: float
    diameter: float
    mu0: float
    Lambda: float
    omega_samples: np.ndarray  # (M, 2)
    psi_samples: np.ndarray  # (M, 2)
    omega_at: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    psi_at: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    checks: dict = field(repr=False, default_factory=dict)

    @property
    def half(self) -> float:
        return 0.5 * self.diameter


@dataclass(frozen=True, eq=False)
class ContinuityModulus:
    """Separable continuity modulus phi(s, t) = C e^{-gap*eta^2 t} r(s)."""

    C: float
    eta: float
    s0: float
    gap: float
    ratio_samples: np.ndarray  # (M, 2) pairs (s, phi(s, 0))
    phi0_at: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    checks: dict = field(repr=False, default_factory=dict)

    def phi(self, s, t: float):
        return np.exp(-self.gap * self.eta ** 2 * t) * self.phi0_at(s)


@dataclass(frozen=True)
class Sigma2Search:
    """Slope threshold above which the turning point stays left of D/4."""

    value: float
    sigma0: float
    diameter: float
    ladder: tuple  # ((sigma, s0), ...) verification points, value first


def _fd1(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def _fd2(f, x, h):
    return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x)
            + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h)


def build_riccati(spectrum: SLSpectrum) -> RiccatiProfile:
    """Log-derivative profile of the ground state; requires mu0 < 0.

    v is formed as the ratio of the stored eigenfunction samples (the
    initial-value route blows down near D/2, the ratio does not), restricted
    to s with w0 >= 1e-10 * max w0.  The profile residual
    v' + v^2 + sigma*s + mu0 is evaluated with an independent five-point
    derivative of the ratio and must stay below 1e-6 of the local term size
    1 + v^2 + sigma*D/2 + |mu0| (v and its derivative grow without bound as
    s approaches D/2, so only the locally-scaled residual is meaningful).
    """
    problem = spectrum.problem
    mu0 = spectrum.mu(0)
    if mu0 >= 0.0:
        raise DegenerateProfile(
            f"mu0 = {mu0:g} >= 0: slope at or below critical, the "
            "log-derivative has no interior maximum")
    pair = spectrum.pair(0)
    s = pair.samples[:, 0]
    w = pair.samples[:, 1]
    wp = pair.derivative_samples[:, 1]
    keep = w >= _RETAIN * np.max(np.abs(w))
    if np.count_nonzero(keep) < 16:
        raise DegenerateProfile("fewer than 16 retained log-derivative samples")
    s_r, v_r = s[keep], wp[keep] / w[keep]
    v_at = pair.log_derivative_at
    s0, v_max, n_turns = _locate_turning_point(s_r, v_r, v_at, problem.half)
    if n_turns == 0:
        raise DegenerateProfile("no interior maximum of the log-derivative "
                                "inside the retained sample range")
    if n_turns > 1:
        raise MultipleTurningPoints(f"{n_turns} derivative sign changes")
    # Stencil arm shrinks toward the pole of v at D/2 to keep the relative
    # truncation error ~(h/dist)^4 uniformly small.
    h = np.minimum(_H1_FRAC * problem.half, 0.007 * (problem.half - s_r))
    inner = s_r > 2 * _H1_FRAC * problem.half
    local = 1.0 + v_r[inner] ** 2 + problem.sigma * problem.half + abs(mu0)
    resid = np.abs(_fd1(v_at, s_r[inner], h[inner])
                   + v_r[inner] ** 2 + problem.sigma * s_r[inner] + mu0)
    worst = float(np.max(resid / local))
    if worst > 1e-6:
        raise InvariantViolation("riccati_ivp_residual", worst)
    turn_resid = abs(v_max ** 2 + problem.sigma * s0 + mu0)
    if turn_resid > 1e-6 * max(1.0, abs(problem.sigma * s0 + mu0)):
        raise InvariantViolation("turning_point_identity", turn_resid)
    return RiccatiProfile(
        sigma=problem.sigma, diameter=problem.diameter, mu0=mu0,
        samples=np.column_stack([s_r, v_r]), s0=s0, v_at_s0=v_max,
        v_at=v_at, ivp_residual=worst,
    )


def _locate_turning_point(s, v, v_at, half):
    """(s0, v(s0), #sign changes of v') from samples, Brent-refined."""
    dv = np.diff(v) / np.diff(s)
    signs = np.sign(dv)
    signs = signs[signs != 0]
    n_changes = int(np.count_nonzero(signs[:-1] != signs[1:])) if signs.size > 1 else 0
    i = int(np.argmax(v))
    if i == 0 or i == len(s) - 1:
        return s[i], v[i], 0 if n_changes == 0 else n_changes
    res = minimize_scalar(lambda x: -v_at(x), bounds=(s[i - 1], s[i + 1]),
                          method="bounded", options={"xatol": 1e-13 * half})
    s0 = float(res.x)
    return s0, float(v_at(s0)), max(n_changes, 1)


def find_turning_point(profile: RiccatiProfile) -> tuple[float, float]:
    """(s0, eta_sigma) with uniqueness of the interior maximum re-verified."""
    s, v = profile.samples[:, 0], profile.samples[:, 1]
    s0, _, n_changes = _locate_turning_point(s, v, profile.v_at, profile.half)
    if n_changes > 1:
        raise MultipleTurningPoints(f"{n_changes} derivative sign changes")
    if n_changes == 0:
        raise DegenerateProfile("no interior maximum in retained range")
    eta_sigma = (profile.half - s0) / profile.half
    return s0, eta_sigma


def _turning_point_of(sigma: float, diameter: float) -> float:
    spectrum = solve_sl(SLProblem(sigma, diameter, grid_size=512), 1)
    profile = build_riccati(spectrum)
    return profile.s0


def find_sigma2(diameter: float) -> Sigma2Search:
    """Smallest grid slope from which the turning point stays below D/4.

    Scans the geometric grid sigma0 * 1.25^j (j >= 1) and returns the first
    point where the candidate and eight further ladder points all have
    s0 < D/4 (with a 2% safety margin: an s0 essentially at D/4 leaves the
    scaled modulus so close to its singular endpoint that its derivative
    checks drown in roundoff).  The nine verified (sigma, s0) pairs are
    recorded.
    """
    if not (diameter > 0.0):
        raise InvalidProblem(f"diameter must be > 0, got {diameter!r}")
    D = diameter
    sigma0 = critical_sigma(D)
    threshold = 0.245 * D
    cache: dict[int, float] = {}

    def s0_at(j: int) -> float:
        if j not in cache:
            cache[j] = _turning_point_of(sigma0 * 1.25 ** j, D)
        return cache[j]

    j = 1
    while sigma0 * 1.25 ** j <= 1e9 / D ** 3:
        if all(s0_at(j + k) < threshold for k in range(9)):
            ladder = tuple((sigma0 * 1.25 ** (j + k), s0_at(j + k)) for k in range(9))
            return Sigma2Search(value=sigma0 * 1.25 ** j, sigma0=sigma0,
                                diameter=D, ladder=ladder)
        j += 1
    raise NonConvergence(f"no slope below 1e9/D^3 keeps s0 < D/4 for D={D:g}")


def build_modulus(spectrum: SLSpectrum, Lambda: float) -> ModulusProfile:
    """Expansion modulus omega (psi = -omega) for a drift bound Lambda >= 0.

    Requires the spectrum solved at a slope >= 8*Lambda with turning point
    left of D/4.  The scale is eta = 1/2 + 0.95*(eta_sigma - 1/2): strictly
    inside the admissible interval, so omega is finite on the closed [0, D/2]
    while giving away only 5% of the certifiable factor.

    Every profile contract is checked numerically and recorded in `checks`;
    the first failure raises InvariantViolation.
    """
    if Lambda < 0.0:
        raise InvalidProblem(f"Lambda must be >= 0, got {Lambda!r}")
    problem = spectrum.problem
    sigma, D = problem.sigma, problem.diameter
    if sigma < 8.0 * Lambda * (1.0 - 1e-12):
        raise InvalidProblem(
            f"slope {sigma:g} below 8*Lambda = {8 * Lambda:g}; the expansion "
            "inequality needs sigma >= 8*Lambda")
    riccati = build_riccati(spectrum)
    s0, eta_sigma = find_turning_point(riccati)
    if eta_sigma <= 0.5:
        raise InvariantViolation("eta_sigma_gt_half", eta_sigma,
                                 "turning point not left of D/4; slope below threshold")
    eta = 0.5 + 0.95 * (eta_sigma - 0.5)
    mu0 = riccati.mu0
    half = 0.5 * D
    v_at = riccati.v_at

    def omega_at(s, _eta=eta, _s0=s0):
        return -_eta * v_at(_eta * np.asarray(s, dtype=float) + _s0)

    def psi_at(s):
        return -omega_at(s)

    s_grid = np.linspace(0.0, half, problem.grid_size)
    omega = omega_at(s_grid)
    psi = -omega

    checks: dict = {"eta": eta, "eta_sigma": eta_sigma, "s0": s0}
    # Per-point stencil arms: omega's argument eta*s + s0 must stay inside
    # [0, D/2), clear of the log-derivative pole at D/2; shrinking the arm
    # with the remaining distance keeps the relative truncation error
    # uniform along the grid.
    pole_dist = (half - (eta * s_grid + s0)) / eta
    left_room = s_grid + s0 / eta
    h1 = np.minimum(_H1_FRAC * half, 0.007 * pole_dist)
    h1 = np.minimum(h1, 0.4 * left_room)
    h2 = np.minimum(np.minimum(_H2_FRAC * half, 0.05 * pole_dist), 0.4 * left_room)
    pot_scale = 1.0 + sigma * half + abs(mu0)

    checks["omega_at_0"] = float(omega[0])
    if not checks["omega_at_0"] < 0.0:
        raise InvariantViolation("omega_at_0_negative", checks["omega_at_0"])
    checks["psi_at_0"] = float(psi[0])

    d_omega = _fd1(omega_at, s_grid, h1)
    # omega'(0) vanishes by construction (the shift anchors a critical
    # point); strict growth is required from the first grid point on.
    checks["omega_prime_min"] = float(np.min(d_omega[1:]))
    if not checks["omega_prime_min"] > 0.0:
        raise InvariantViolation("omega_prime_positive", checks["omega_prime_min"])
    checks["omega_prime_at_0"] = float(d_omega[0])
    if abs(d_omega[0]) > 1e-5 * pot_scale:
        raise InvariantViolation("omega_prime_at_0_small", d_omega[0])

    tent = sigma * np.abs(eta * s_grid + s0)
    local = 1.0 + omega ** 2 + eta ** 2 * (tent + abs(mu0))
    resid = np.abs(d_omega - omega ** 2 - eta ** 2 * tent - eta ** 2 * mu0)
    checks["riccati_residual"] = float(np.max(resid / local))
    if checks["riccati_residual"] > 1e-6:
        raise InvariantViolation("riccati_residual", checks["riccati_residual"])

    expr = (2 * _fd2(psi_at, s_grid, h2)
            + 4 * _fd1(psi_at, s_grid, h2) * psi + 2 * Lambda)
    checks["expansion_inequality_max"] = float(np.max(expr))
    if checks["expansion_inequality_max"] > 1e-8:
        raise InvariantViolation("expansion_inequality",
                                 checks["expansion_inequality_max"])

    checks["psi_prime_max"] = float(np.max(-d_omega[1:]))
    if not checks["psi_prime_max"] < 0.0:
        raise InvariantViolation("psi_prime_negative", checks["psi_prime_max"])
    if not checks["psi_at_0"] >= 0.0:
        raise InvariantViolation("psi_at_0_nonnegative", checks["psi_at_0"])

    return ModulusProfile(
        eta=eta, s0=s0, eta_sigma=eta_sigma, sigma=sigma, diameter=D,
        mu0=mu0, Lambda=Lambda,
        omega_samples=np.column_stack([s_grid, omega]),
        psi_samples=np.column_stack([s_grid, psi]),
        omega_at=omega_at, psi_at=psi_at, checks=checks,
    )


def build_continuity_modulus(spectrum: SLSpectrum, profile: ModulusProfile,
                             amplitude: float = 1.0) -> ContinuityModulus:
    """Time-separable continuity modulus from the eigenfunction ratio.

    phi(s, 0) = C * (w1/w0)(eta*s + s0) must be strictly increasing and
    positive at s = 0, and satisfy the drift-heat balance
    phi'' - 2*omega*phi' = -(mu1 - mu0)*eta^2*phi pointwise to 1e-5.
    """
    if len(spectrum.pairs) < 2:
        raise InvalidProblem("spectrum must contain modes 0 and 1")
    if amplitude <= 0.0:
        raise InvalidProblem(f"amplitude must be > 0, got {amplitude!r}")
    if abs(profile.sigma - spectrum.problem.sigma) > 1e-12 * max(1.0, profile.sigma):
        raise InvalidProblem("profile was not built from this spectrum")
    w0, w1 = spectrum.pair(0), spectrum.pair(1)
    eta, s0 = profile.eta, profile.s0
    gap = spectrum.mu(1) - spectrum.mu(0)
    half = profile.half

    def phi0_at(s, _C=amplitude):
        arg = eta * np.asarray(s, dtype=float) + s0
        return _C * w1.value_at(arg) / w0.value_at(arg)

    s_grid = np.linspace(0.0, half, spectrum.problem.grid_size)
    phi0 = phi0_at(s_grid)
    checks: dict = {"phi_at_0": float(phi0[0]), "gap": gap}
    if not checks["phi_at_0"] > 0.0:
        raise InvariantViolation("phi_at_0_positive", checks["phi_at_0"])
    increments = np.diff(phi0)
    checks["min_increment"] = float(np.min(increments))
    if not checks["min_increment"] > 0.0:
        raise InvariantViolation("phi_strictly_increasing", checks["min_increment"])

    pole_dist = (half - (eta * s_grid + s0)) / eta
    left_room = s_grid + s0 / eta
    h2 = np.minimum(np.minimum(_H2_FRAC * half, 0.05 * pole_dist), 0.4 * left_room)
    resid = np.abs(_fd2(phi0_at, s_grid, h2)
                   - 2.0 * profile.omega_at(s_grid) * _fd1(phi0_at, s_grid, h2)
                   + gap * eta ** 2 * phi0)
    checks["drift_heat_residual"] = float(np.max(resid))
    if checks["drift_heat_residual"] > 1e-5 * max(1.0, amplitude):
        raise InvariantViolation("drift_heat_residual",
                                 checks["drift_heat_residual"])

    return ContinuityModulus(
        C=amplitude, eta=eta, s0=s0, gap=gap,
        ratio_samples=np.column_stack([s_grid, phi0]),
        phi0_at=phi0_at, checks=checks,
    )


@dataclass(frozen=True, eq=False)
class ConvexModulus:
    """Slope-zero expansion modulus used by the sharp (convex) branch.

    omega(s) = (pi/D) tan(pi s / D) on [0, D/2): no shift (s0 = 0), no
    rescaling (eta = 1).  Unlike the shifted profiles this one is singular
    at s = D/2 itself; callers evaluate strictly inside.
    """

    diameter: float
    eta: float = 1.0
    s0: float = 0.0

    def omega_at(self, s):
        s = np.asarray(s, dtype=float)
        return (math.pi / self.diameter) * np.tan(math.pi * s / self.diameter)

    def psi_at(self, s):
        return -self.omega_at(s)


def convex_modulus(diameter: float) -> ConvexModulus:
    if not (diameter > 0.0):
        raise InvalidProblem(f"diameter must be > 0, got {diameter!r}")
    return ConvexModulus(diameter=diameter)
