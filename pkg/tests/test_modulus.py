import math

import numpy as np
import pytest

from gapcert import SLProblem, solve_sl
from gapcert.errors import DegenerateProfile, InvalidProblem
from gapcert.modulus import (
    ConvexModulus,
    build_continuity_modulus,
    build_modulus,
    build_riccati,
    convex_modulus,
    find_sigma2,
    find_turning_point,
)


def test_degenerate_below_critical():
    with pytest.raises(DegenerateProfile):
        build_riccati(solve_sl(SLProblem(0.0, 1.0), 1))
    with pytest.raises(DegenerateProfile):
        build_riccati(solve_sl(SLProblem(30.0, 1.0), 1))  # below sigma0 ~ 62.7


def test_riccati_profile_basics(sigma2_d1):
    sigma = 4.0 * sigma2_d1.value
    spectrum = solve_sl(SLProblem(sigma, 1.0), 1)
    profile = build_riccati(spectrum)
    s, v = profile.samples[:, 0], profile.samples[:, 1]
    assert v[0] == pytest.approx(0.0, abs=1e-10)  # v(0) = 0
    # initial slope: the central difference sits at s[1], where the profile
    # equation gives v' = -mu0 - sigma*s - v^2 exactly
    v_prime_mid = (v[2] - v[0]) / (s[2] - s[0])
    expected = -profile.mu0 - sigma * s[1] - v[1] ** 2
    assert v_prime_mid == pytest.approx(expected, rel=1e-4)
    assert -profile.mu0 > 0.0  # hence v is initially increasing
    assert profile.ivp_residual <= 1e-6
    # turning identity and max bound
    assert (profile.v_at_s0 ** 2 + sigma * profile.s0 + profile.mu0
            == pytest.approx(0.0, abs=1e-6 * abs(profile.mu0)))
    assert profile.v_at_s0 == pytest.approx(np.max(v), rel=1e-6)
    assert profile.v_at_s0 < math.sqrt(-profile.mu0)


def test_turning_point_unique_and_eta(sigma2_d1):
    spectrum = solve_sl(SLProblem(2.0 * sigma2_d1.value, 1.0), 1)
    profile = build_riccati(spectrum)
    s0, eta_sigma = find_turning_point(profile)
    assert 0.0 < s0 < 0.25
    assert eta_sigma == pytest.approx((0.5 - s0) / 0.5, rel=1e-12)
    # derivative changes sign exactly once
    dv = np.diff(profile.samples[:, 1])
    signs = np.sign(dv[np.abs(dv) > 0])
    assert int(np.count_nonzero(signs[:-1] != signs[1:])) == 1


def test_sigma2_search(sigma2_d1, sigma2_d2):
    assert sigma2_d1.value > sigma2_d1.sigma0
    assert len(sigma2_d1.ladder) == 9
    for sigma, s0 in sigma2_d1.ladder:
        assert 0.0 < s0 < 0.25
    # exact scaling of the problem makes the search commute with D -> 2D
    assert sigma2_d2.value <= sigma2_d1.value / 8.0 * 1.25 + 1e-12
    assert sigma2_d2.value == pytest.approx(sigma2_d1.value / 8.0, rel=1e-9)


def test_turning_point_decay_regime(sigma2_d1):
    s2 = sigma2_d1.value
    s0s = []
    for mult in (16.0, 32.0, 64.0):
        profile = build_riccati(solve_sl(SLProblem(s2 * mult, 1.0, grid_size=1024), 1))
        s0s.append(profile.s0)
    assert s0s[0] > s0s[1] > s0s[2]


def test_modulus_checks_and_eta(sigma2_d1):
    sigma = sigma2_d1.value
    spectrum = solve_sl(SLProblem(sigma, 1.0), 2)
    profile = build_modulus(spectrum, 0.0)
    assert 0.5 < profile.eta < profile.eta_sigma
    assert profile.eta == pytest.approx(0.5 + 0.95 * (profile.eta_sigma - 0.5))
    checks = profile.checks
    assert checks["omega_at_0"] < 0.0
    assert checks["psi_at_0"] >= 0.0
    assert checks["omega_prime_min"] > 0.0
    assert checks["riccati_residual"] <= 1e-6
    assert checks["expansion_inequality_max"] <= 1e-8
    # omega(0) = -eta * v(s0)
    riccati = build_riccati(spectrum)
    assert checks["omega_at_0"] == pytest.approx(-profile.eta * riccati.v_at_s0,
                                                 rel=1e-9)
    # slope of the scaled tent potential dominates the drift bound:
    # eta^3 sigma > sigma / 8 >= Lambda whenever sigma >= 8 Lambda
    assert profile.eta ** 3 * sigma > sigma / 8.0


@pytest.mark.parametrize("Lam", [0.1, 1.0, 10.0])
def test_expansion_inequality_on_drift_ladder(sigma2_d1, Lam):
    sigma = max(sigma2_d1.value, 8.0 * Lam)
    spectrum = solve_sl(SLProblem(sigma, 1.0), 2)
    profile = build_modulus(spectrum, Lam)
    assert profile.checks["psi_at_0"] >= 0.0
    assert profile.checks["psi_prime_max"] < 0.0
    assert profile.checks["expansion_inequality_max"] <= 1e-8


def test_modulus_requires_dominating_slope(sigma2_d1):
    spectrum = solve_sl(SLProblem(sigma2_d1.value, 1.0), 2)
    with pytest.raises(InvalidProblem):
        build_modulus(spectrum, Lambda=sigma2_d1.value)  # sigma < 8*Lambda


def test_continuity_modulus(sigma2_d1):
    sigma = 4.0 * sigma2_d1.value
    spectrum = solve_sl(SLProblem(sigma, 1.0), 2)
    profile = build_modulus(spectrum, 0.0)
    cm1 = build_continuity_modulus(spectrum, profile, amplitude=1.0)
    assert cm1.checks["phi_at_0"] > 0.0
    assert cm1.checks["min_increment"] > 0.0
    assert cm1.checks["drift_heat_residual"] <= 1e-5
    assert cm1.gap == pytest.approx(spectrum.mu(1) - spectrum.mu(0))
    # doubling the amplitude doubles phi pointwise, residual bound unaffected
    cm2 = build_continuity_modulus(spectrum, profile, amplitude=2.0)
    assert np.allclose(cm2.ratio_samples[:, 1], 2.0 * cm1.ratio_samples[:, 1],
                       rtol=1e-13)
    assert cm2.checks["drift_heat_residual"] <= 2e-5
    # time decay factor
    s_probe = np.array([0.1, 0.3])
    t = 0.7
    expected = math.exp(-cm1.gap * cm1.eta ** 2 * t) * cm1.phi0_at(s_probe)
    assert np.allclose(cm1.phi(s_probe, t), expected, rtol=1e-13)


def test_convex_modulus():
    mod = convex_modulus(1.0)
    assert isinstance(mod, ConvexModulus)
    assert mod.psi_at(0.0) == pytest.approx(0.0, abs=1e-15)
    s = np.linspace(0.0, 0.49, 200)
    psi = mod.psi_at(s)
    assert np.all(np.diff(psi) < 0.0)  # strictly decreasing
    # omega is the slope-zero ground-state log-derivative, -(log cos)'
    assert mod.omega_at(0.25) == pytest.approx(math.pi * math.tan(math.pi * 0.25))
