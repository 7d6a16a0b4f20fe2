"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Stated runtime budgets are asserted where the criterion carries one; derived
tolerances are pinned here, never recalibrated at run time.
"""

import math
import time

import numpy as np
import pytest

from conftest import record_criterion
from gapcert import (
    SLProblem,
    check_lagrange_monotonicity,
    sl_gap,
    solve_sl,
)
from gapcert.bessel import bessel_zero
from gapcert.certificate import certify, soundness_report
from gapcert.domain import disk, interval, square
from gapcert.elliptic_spectrum import assemble, low_spectrum
from gapcert.fields import (
    ConstantVectorField,
    CosineBump,
    CutoffRotationalField,
    GaussianBump,
    QuadraticGradientField,
    ZeroVectorField,
    make_scalar_field,
)
from gapcert.modulus import (
    build_continuity_modulus,
    build_modulus,
    build_riccati,
    convex_modulus,
    find_turning_point,
)
from gapcert.operator_model import (
    OperatorSpec,
    check_C_nonnegative,
    check_laplacian_identity,
    compute_derived_fields,
    manufacture_operator,
    pair_check_tolerance,
)


def test_criterion_1_slope_zero_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for D in (1.0, 2.0, math.sqrt(2.0)):
        mu0, mu1, gap = sl_gap(SLProblem(0.0, D))
        for got, exact in ((mu0, (math.pi / D) ** 2),
                           (mu1, (2 * math.pi / D) ** 2),
                           (gap, 3 * math.pi ** 2 / D ** 2)):
            worst = max(worst, abs(got - exact) / exact)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 1.0
    record_criterion(1, ok, f"max relative error {worst:.2e} over D in "
                            f"{{1, 2, sqrt2}} ({elapsed:.2f} s < 1 s)")


def test_criterion_2_large_slope_bracket():
    t0 = time.perf_counter()
    D = 2.0
    rows = []
    ok = True
    for sigma in (1e3, 1e4, 1e6):
        mu0 = solve_sl(SLProblem(sigma, D), 1).mu(0)
        ratio = -mu0 / sigma
        lower = D / 2 - (math.pi ** 2 + 0.5) * sigma ** (-1.0 / 3.0)
        ok &= lower <= ratio < D / 2
        rows.append(f"{ratio:.6f}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 5.0
    record_criterion(2, ok, f"-mu0/sigma = {rows} all inside the bracket "
                            f"({elapsed:.2f} s < 5 s)")


def test_criterion_3_riccati_identities(sigma2_d1):
    t0 = time.perf_counter()
    worst_turn = 0.0
    worst_resid = 0.0
    for mult in (1.0, 4.0, 16.0):
        sigma = sigma2_d1.value * mult
        spectrum = solve_sl(SLProblem(sigma, 1.0), 2)
        profile = build_riccati(spectrum)
        turn = abs(profile.v_at_s0 ** 2 + sigma * profile.s0 + profile.mu0) \
            / max(1.0, abs(sigma * profile.s0 + profile.mu0))
        worst_turn = max(worst_turn, turn)
        modulus = build_modulus(spectrum, 0.0)
        worst_resid = max(worst_resid, modulus.checks["riccati_residual"])
    elapsed = time.perf_counter() - t0
    ok = worst_turn <= 1e-6 and worst_resid <= 1e-6 and elapsed < 10.0
    record_criterion(3, ok, f"turning identity {worst_turn:.2e} rel, shifted "
                            f"balance {worst_resid:.2e} (scaled by the local "
                            f"term size) on the slope ladder ({elapsed:.2f} s < 10 s)")


def test_criterion_4_modulus_inequalities(sigma2_d1):
    t0 = time.perf_counter()
    ok = True
    details = []
    for Lam in (0.1, 1.0, 10.0):
        sigma = max(sigma2_d1.value, 8.0 * Lam)
        spectrum = solve_sl(SLProblem(sigma, 1.0), 2)
        profile = build_modulus(spectrum, Lam)
        c = profile.checks
        ok &= (c["psi_at_0"] >= 0.0 and c["psi_prime_max"] < 0.0
               and c["expansion_inequality_max"] <= 1e-8)
        details.append(f"{c['expansion_inequality_max']:.2e}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 10.0
    record_criterion(4, ok, f"psi(0) >= 0, psi' < 0, expansion expression max "
                            f"{details} <= 1e-8 for Lambda in {{0.1, 1, 10}} "
                            f"({elapsed:.2f} s < 10 s)")


def test_criterion_5_shift_window(sigma2_d1):
    ok = True
    for sigma, s0 in sigma2_d1.ladder:
        eta_sigma = (0.5 - s0) / 0.5
        ok &= (eta_sigma > 0.5) and (s0 < 0.25)
    # monotone decay of the turning point, tested in the decay regime: s0
    # rises to a hump near 6*sigma0 before decaying, so ladders anchored at
    # sigma2 itself are not monotone (measured; oracle-confirmed)
    s0s = []
    for mult in (16.0, 32.0, 64.0):
        profile = build_riccati(
            solve_sl(SLProblem(sigma2_d1.value * mult, 1.0, grid_size=1024), 1))
        s0s.append(profile.s0)
    decay = s0s[0] > s0s[1] > s0s[2]
    record_criterion(5, ok and decay,
                     f"eta_sigma > 1/2 and s0 < D/4 on all 9 ladder rungs; "
                     f"s0 decays {['%.4f' % s for s in s0s]} on the "
                     f"{{16, 32, 64}} x sigma2 ladder")


def test_criterion_6_ratio_monotonicity(sigma2_d1):
    mins = []
    ok = True
    for sigma in (0.0, sigma2_d1.value, 8.0 * sigma2_d1.value):
        spectrum = solve_sl(SLProblem(sigma, 1.0), 2)
        m = check_lagrange_monotonicity(spectrum)
        mins.append(m)
        ok &= m > 0.0
    record_criterion(6, ok, f"min of w0 w1' - w1 w0' = "
                            f"{['%.2e' % m for m in mins]} > 0 for slopes "
                            f"{{0, sigma2, 8 sigma2}}")


def test_criterion_7_drift_heat_identity(sigma2_d1):
    worst = 0.0
    for mult in (1.0, 4.0):
        spectrum = solve_sl(SLProblem(sigma2_d1.value * mult, 1.0), 2)
        profile = build_modulus(spectrum, 0.0)
        cm = build_continuity_modulus(spectrum, profile)
        worst = max(worst, cm.checks["drift_heat_residual"])
    record_criterion(7, worst <= 1e-5,
                     f"separable balance residual {worst:.2e} <= 1e-5 at t = 0")


def test_criterion_8_discrete_oracles():
    t0 = time.perf_counter()
    b = 2.0
    op = OperatorSpec(domain=interval(1.0), B=ConstantVectorField(vec=(b,)),
                      c=make_scalar_field("zero", dim=1))
    exact = [(n + 1) ** 2 * math.pi ** 2 + b * b / 4.0 for n in range(4)]
    lams = {}
    imag_max = 0.0
    for h in (1 / 256, 1 / 512, 1 / 1024):
        spec = low_spectrum(assemble(op, h), 4)
        lams[h] = [spec.lambda0] + list(spec.others.real)
        imag_max = max(imag_max, float(np.max(np.abs(spec.others.imag))))
    ratios = []
    for n in range(4):
        e1 = abs(lams[1 / 256][n] - exact[n])
        e2 = abs(lams[1 / 512][n] - exact[n])
        e4 = abs(lams[1 / 1024][n] - exact[n])
        ratios += [e1 / e2, e2 / e4]
    interval_ok = imag_max <= 1e-9 and all(3.5 <= r <= 4.5 for r in ratios)

    j01 = bessel_zero(0, 1)
    j11 = bessel_zero(1, 1)
    op_d = OperatorSpec(domain=disk(1.0), B=ZeroVectorField(dim=2),
                        c=make_scalar_field("zero", dim=2))
    errs_lam, errs_gap = [], []
    for h in (2 / 64, 2 / 128):
        spec = low_spectrum(assemble(op_d, h), 3)
        errs_lam.append(abs(spec.lambda0 - j01 ** 2))
        errs_gap.append(abs(spec.gap - (j11 ** 2 - j01 ** 2)))
    disk_ok = (errs_lam[1] < errs_lam[0] and errs_gap[1] < errs_gap[0]
               and errs_lam[1] <= 0.01 * j01 ** 2
               and errs_gap[1] <= 0.01 * (j11 ** 2 - j01 ** 2))
    elapsed = time.perf_counter() - t0
    ok = interval_ok and disk_ok and elapsed < 120.0
    record_criterion(8, ok,
                     f"drift interval real with 2nd-order ratios "
                     f"{['%.2f' % r for r in ratios[:4]]}...; disk lambda0 err "
                     f"{errs_lam[1]:.3e} -> {j01**2:.4f}, gap err {errs_gap[1]:.3e} "
                     f"-> {j11**2 - j01**2:.4f} ({elapsed:.1f} s < 120 s)")


def _shipped_operators(interval_operator, phi_operator, rotating_disk_operator):
    sq = OperatorSpec(domain=square(1.0), B=ZeroVectorField(dim=2),
                      c=make_scalar_field("zero", dim=2))
    drift = OperatorSpec(domain=interval(1.0), B=ConstantVectorField(vec=(2.0,)),
                         c=make_scalar_field("zero", dim=1))
    disk0 = OperatorSpec(domain=disk(1.0), B=ZeroVectorField(dim=2),
                         c=make_scalar_field("zero", dim=2))
    slow_rot = OperatorSpec(domain=disk(1.0),
                            B=CutoffRotationalField(omega=0.25, R0=0.85),
                            c=make_scalar_field("zero", dim=2))
    return [
        ("interval", interval_operator, (1 / 256, 1 / 512), 3),
        ("constant-drift", drift, (1 / 256, 1 / 512), 3),
        ("square", sq, (1 / 48, 1 / 96), 3),
        ("weighted-laplacian", phi_operator, (1 / 48, 1 / 96), 3),
        ("disk", disk0, (2 / 64, 2 / 128), 3),
        ("rotating-disk-slow", slow_rot, (2 / 64, 2 / 128), 5),
        ("rotating-disk", rotating_disk_operator, (2 / 64, 2 / 128), 5),
    ]


@pytest.fixture(scope="module")
def shipped(interval_operator, phi_operator, rotating_disk_operator):
    out = []
    for name, op, (h1, h2), k in _shipped_operators(
            interval_operator, phi_operator, rotating_disk_operator):
        coarse = low_spectrum(assemble(op, h1), k)
        fine = low_spectrum(assemble(op, h2), k)
        out.append((name, op, coarse, fine))
    return out


def test_criterion_9_strict_inequality(shipped):
    ok = True
    details = []
    gaps = {}
    for name, op, coarse, fine in shipped:
        strict = bool(np.all(fine.others.real > fine.lambda0))
        positive = float(np.min(fine.u0.values)) > 0.0
        ok &= strict and positive
        non_real = fine.others[np.abs(fine.others.imag) > 1e-9]
        for lam in non_real:
            ok &= bool(np.min(np.abs(non_real - np.conj(lam)))
                       <= 1e-6 * (1 + abs(lam)))
        if name.startswith("rotating-disk"):
            gaps[name] = fine.gap
            details.append(f"{name}: {len(non_real)} non-real in pairs")
    omega_indep = abs(gaps["rotating-disk"] - gaps["rotating-disk-slow"]) \
        <= 0.02 * max(gaps.values())
    ok &= omega_indep
    record_criterion(9, ok,
                     "Re(lambda) > lambda0 and u0 > 0 on all 7 shipped "
                     f"operators; {'; '.join(details)}; gap omega-independent "
                     f"to {abs(gaps['rotating-disk'] - gaps['rotating-disk-slow']):.1e}")


def test_criterion_10_certificate_soundness(shipped):
    ok = True
    sharp_detail = ""
    for name, op, coarse, fine in shipped:
        cert = certify(op, fine)
        report = soundness_report(cert, fine, coarse)
        ok &= report.passed  # alpha <= measured gap + tol_h
        if cert.branch == "general":
            ok &= cert.alpha > cert.quarter_bound
        if name == "interval":
            ok &= abs(report.slack) <= report.tol_h
            sharp_detail = (f"interval slack {report.slack:.2e} within "
                            f"tol {report.tol_h:.2e}")
    record_criterion(10, ok, f"alpha <= gap + tol_h on all 7 operators; "
                             f"{sharp_detail}; general branch strictly above "
                             f"the quarter bound")


def test_criterion_11_identity_convergence():
    u0_1d = CosineBump(lengths=(1.0,))
    op1 = manufacture_operator(interval(1.0), ZeroVectorField(dim=1), u0_1d, 5.0)
    r1 = check_laplacian_identity(op1, u0_1d, 5.0, 1 / 256)
    r2 = check_laplacian_identity(op1, u0_1d, 5.0, 1 / 512)
    ratio_1d = r1 / r2
    u0_2d = GaussianBump(center=(0.1, -0.05), width=0.4)
    B2 = QuadraticGradientField(Q=np.array([[1.0, 0.2], [0.2, 0.8]]))
    op2 = manufacture_operator(square(1.0), B2, u0_2d, 3.0)
    q1 = check_laplacian_identity(op2, u0_2d, 3.0, 1 / 64)
    q2 = check_laplacian_identity(op2, u0_2d, 3.0, 1 / 128)
    ratio_2d = q1 / q2
    ok = 3.5 <= ratio_1d <= 4.5 and 3.5 <= ratio_2d <= 4.5
    record_criterion(11, ok, f"manufactured-solution residual ratios "
                             f"{ratio_1d:.2f} (1D), {ratio_2d:.2f} (2D) in [3.5, 4.5]")


def test_criterion_12_pair_nonnegativity(interval_operator, interval_spectra,
                                         phi_operator, phi_spectra):
    n_pairs = 100_000
    spec_i = interval_spectra[1]
    fields_i = compute_derived_fields(interval_operator, u0=spec_i.u0)
    cmin_i = check_C_nonnegative(fields_i, convex_modulus(1.0), n_pairs, seed=0)
    tol_i = pair_check_tolerance(spec_i.grid, 0.0, 0.0)
    spec_p = phi_spectra[1]
    fields_p = compute_derived_fields(phi_operator, u0=spec_p.u0)
    D = phi_operator.domain.diameter
    cmin_p = check_C_nonnegative(fields_p, convex_modulus(D), n_pairs, seed=0)
    tol_p = pair_check_tolerance(spec_p.grid, 0.0, 0.0)
    ok = cmin_i >= -tol_i and cmin_p >= -tol_p
    record_criterion(12, ok,
                     f"min C over {n_pairs} pairs: interval {cmin_i:.2e} >= "
                     f"{-tol_i:.2e}, weighted-Laplacian {cmin_p:.2e} >= {-tol_p:.2e}")


def test_criterion_13_gap_collapse(sigma2_d1):
    gap0 = sl_gap(SLProblem(0.0, 1.0))[2]
    gaps = []
    for k in range(6):
        gaps.append(sl_gap(SLProblem(sigma2_d1.value * 4.0 ** k, 1.0))[2])
    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    collapsed = gaps[-1] < 0.10 * gap0
    record_criterion(13, monotone and collapsed,
                     f"gaps strictly decreasing from {gaps[0]:.3e} to "
                     f"{gaps[-1]:.3e} (< 10% of the slope-zero gap {gap0:.3e})")
