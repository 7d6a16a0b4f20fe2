"""Batch command-line front-end.

Subcommands: `sl` (solve / gap / critical-sigma), `modulus`, `spectrum`,
`certify` and `experiment <name...>`.  Experiments write CSV tables, SVG
plots (each with a CSV twin) and a PASS/FAIL summary; the process exits 0
only if every check passed.  All sampling is seeded, so reruns with the
same config and seed reproduce the artifacts bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import domain as dom
from .bessel import bessel_zero
from .certificate import certify, soundness_report
from .elliptic_spectrum import assemble, low_spectrum
from .errors import GapcertError, UnknownExperiment
from .fields import (
    CosineBump,
    GaussianBump,
    QuadraticGradientField,
    ZeroVectorField,
    make_scalar_field,
    make_vector_field,
)
from .modulus import (
    build_continuity_modulus,
    build_modulus,
    build_riccati,
    convex_modulus,
    find_sigma2,
    find_turning_point,
)
from .operator_model import (
    OperatorSpec,
    check_C_nonnegative,
    check_laplacian_identity,
    compute_derived_fields,
    manufacture_operator,
    pair_check_tolerance,
)
from .sl_solver import (
    SLProblem,
    check_lagrange_monotonicity,
    critical_sigma,
    ode_residual_inf,
    sl_gap,
    solve_sl,
)
from .svgplot import write_line_chart


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class ExperimentConfig:
    name: str
    output_dir: Path
    seed: int = 0
    params: dict = field(default_factory=dict)

    def get(self, key, default):
        return self.params.get(key, default)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    try:
        import tomllib  # py >= 3.11
    except ImportError:
        import tomli as tomllib
    return tomllib.loads(text.decode())


def domain_from_config(d: dict) -> dom.DomainSpec:
    return dom.DomainSpec(d["kind"], tuple(float(p) for p in d["params"]))


def operator_from_config(cfg: dict) -> OperatorSpec:
    domain = domain_from_config(cfg["domain"])
    drift_cfg = dict(cfg.get("drift", {"name": "zero"}))
    drift_name = drift_cfg.pop("name")
    B = make_vector_field(drift_name, dim=domain.dim, **drift_cfg)
    pot_cfg = dict(cfg.get("potential", {"name": "zero"}))
    c = make_scalar_field(pot_cfg.pop("name"), dim=domain.dim, **pot_cfg)
    phi = B if (cfg.get("phi") and isinstance(B, QuadraticGradientField)) else None
    K = cfg.get("K")
    return OperatorSpec(domain=domain, B=B, c=c, phi=phi,
                        K=float(K) if K is not None else None)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def exp_sl_spectrum(cfg: ExperimentConfig):
    sigma = float(cfg.get("sigma", 0.0))
    D = float(cfg.get("diameter", 1.0))
    modes = int(cfg.get("modes", 4))
    problem = SLProblem(sigma, D)
    spectrum = solve_sl(problem, modes)
    checks = []
    mus = [spectrum.mu(n) for n in range(modes)]
    checks.append(CheckResult(
        "eigenvalue ordering", all(b > a for a, b in zip(mus, mus[1:])),
        f"mu = {['%.6g' % m for m in mus]}"))
    osc_ok = all(p.extension_sign_changes() == p.index for p in spectrum.pairs)
    checks.append(CheckResult("oscillation counts", osc_ok,
                              "mode n has n interior zeros"))
    worst = max(ode_residual_inf(p, problem)
                / (1e-6 * (1.0 + p.mu + sigma * D / 2)) for p in spectrum.pairs)
    checks.append(CheckResult("sample residuals", worst <= 1.0,
                              f"worst residual at {worst:.3f} of tolerance"))
    checks.append(CheckResult("ground-state slope bound", -mus[0] < sigma * D / 2 + 1e-9,
                              f"-mu0 = {-mus[0]:.6g} vs sigma*D/2 = {sigma * D / 2:.6g}"))
    if sigma == 0.0:
        err = max(abs(mus[n] - ((n + 1) * math.pi / D) ** 2)
                  / ((n + 1) * math.pi / D) ** 2 for n in range(modes))
        checks.append(CheckResult("slope-zero closed form", err <= 1e-9,
                                  f"max relative error {err:.2e}"))
    s = spectrum.pair(0).samples[:, 0]
    rows = zip(s, spectrum.pair(0).samples[:, 1],
               spectrum.pair(0).derivative_samples[:, 1],
               spectrum.pair(1).samples[:, 1] if modes > 1 else np.zeros_like(s),
               spectrum.pair(1).derivative_samples[:, 1] if modes > 1 else np.zeros_like(s))
    _write_csv(cfg.output_dir / "eigenpairs.csv", ["s", "w0", "w0p", "w1", "w1p"], rows)
    write_line_chart(cfg.output_dir / "eigenfunctions.svg",
                     [("w0", s, spectrum.pair(0).samples[:, 1]),
                      ("w1", s, spectrum.pair(1).samples[:, 1])] if modes > 1 else
                     [("w0", s, spectrum.pair(0).samples[:, 1])],
                     title=f"eigenfunctions, slope {sigma:g}, D = {D:g}",
                     xlabel="s", ylabel="w")
    return checks


def exp_sl_asymptotics(cfg: ExperimentConfig):
    D = float(cfg.get("diameter", 2.0))
    sigmas = [float(s) for s in cfg.get("sigmas", (1e3, 1e4, 1e6))]
    rows = []
    checks = []
    for sigma in sigmas:
        mu0 = solve_sl(SLProblem(sigma, D), 1).mu(0)
        ratio = -mu0 / sigma
        lower = D / 2 - (math.pi ** 2 + 0.5) * sigma ** (-1.0 / 3.0)
        inside = lower <= ratio < D / 2
        rows.append((sigma, ratio, lower, D / 2))
        checks.append(CheckResult(
            f"large-slope bracket (sigma={sigma:g})", inside,
            f"-mu0/sigma = {ratio:.6f} in [{lower:.6f}, {D/2:g})"))
    _write_csv(cfg.output_dir / "asymptotics.csv",
               ["sigma", "minus_mu0_over_sigma", "lower_bound", "upper_bound"], rows)
    write_line_chart(cfg.output_dir / "asymptotics.svg",
                     [("-mu0/sigma", [r[0] for r in rows], [r[1] for r in rows]),
                      ("lower bound", [r[0] for r in rows], [r[2] for r in rows])],
                     title=f"ground-state slope ratio, D = {D:g}",
                     xlabel="sigma", ylabel="-mu0/sigma", logx=True)
    return checks


def exp_sigma_ladder(cfg: ExperimentConfig):
    D = float(cfg.get("diameter", 1.0))
    n_rungs = int(cfg.get("rungs", 6))
    sigma2 = find_sigma2(D).value
    gap0 = sl_gap(SLProblem(0.0, D))[2]
    rows = []
    for k in range(n_rungs):
        sigma = sigma2 * 4.0 ** k
        mu0, mu1, gap = sl_gap(SLProblem(sigma, D))
        rows.append((k, sigma, mu0, mu1, gap))
    gaps = [r[4] for r in rows]
    checks = [
        CheckResult("gap collapse is monotone",
                    all(a > b for a, b in zip(gaps, gaps[1:])),
                    f"gaps {['%.3e' % g for g in gaps]}"),
        CheckResult("top-of-ladder collapse", gaps[-1] < 0.10 * gap0,
                    f"final gap {gaps[-1]:.3e} vs 10% of slope-zero gap "
                    f"{0.1 * gap0:.3e}"),
    ]
    _write_csv(cfg.output_dir / "ladder.csv",
               ["k", "sigma", "mu0", "mu1", "gap"], rows)
    write_line_chart(cfg.output_dir / "ladder.svg",
                     [("gap", [r[1] for r in rows], gaps)],
                     title=f"gap collapse along the slope ladder, D = {D:g}",
                     xlabel="sigma", ylabel="mu1 - mu0", logx=True, logy=True)
    return checks


def exp_modulus_check(cfg: ExperimentConfig):
    D = float(cfg.get("diameter", 1.0))
    sigma2 = find_sigma2(D).value
    checks = []
    profile_rows = None
    for mult in (1.0, 4.0, 16.0):
        sigma = sigma2 * mult
        spectrum = solve_sl(SLProblem(sigma, D), 2)
        riccati = build_riccati(spectrum)
        s0, eta_sigma = find_turning_point(riccati)
        turn = abs(riccati.v_at_s0 ** 2 + sigma * s0 + riccati.mu0) \
            / max(1.0, abs(sigma * s0 + riccati.mu0))
        checks.append(CheckResult(
            f"turning-point identity (sigma={sigma:.4g})", turn <= 1e-6,
            f"relative defect {turn:.2e}"))
        modulus = build_modulus(spectrum, 0.0)
        checks.append(CheckResult(
            f"shifted log-derivative balance (sigma={sigma:.4g})",
            modulus.checks["riccati_residual"] <= 1e-6,
            f"residual {modulus.checks['riccati_residual']:.2e}"))
        lag = check_lagrange_monotonicity(spectrum)
        checks.append(CheckResult(
            f"ratio monotonicity (sigma={sigma:.4g})", lag > 0.0,
            f"min of w0 w1' - w1 w0' = {lag:.3e}"))
        cm = build_continuity_modulus(spectrum, modulus)
        checks.append(CheckResult(
            f"drift-heat balance (sigma={sigma:.4g})",
            cm.checks["drift_heat_residual"] <= 1e-5,
            f"residual {cm.checks['drift_heat_residual']:.2e}"))
        checks.append(CheckResult(
            f"shift window (sigma={sigma:.4g})",
            eta_sigma > 0.5 and s0 < D / 4,
            f"s0 = {s0:.5f}, eta_sigma = {eta_sigma:.5f}"))
        if profile_rows is None:
            s = modulus.omega_samples[:, 0]
            keep = riccati.samples[:, 0]
            v_interp = np.interp(s, keep, riccati.samples[:, 1])
            profile_rows = zip(s, v_interp, modulus.omega_samples[:, 1],
                               modulus.psi_samples[:, 1], cm.ratio_samples[:, 1])
            _write_csv(cfg.output_dir / "profile.csv",
                       ["s", "v", "omega", "psi", "ratio"], profile_rows)
            write_line_chart(cfg.output_dir / "modulus.svg",
                             [("omega", s, modulus.omega_samples[:, 1]),
                              ("psi", s, modulus.psi_samples[:, 1]),
                              ("ratio", s, cm.ratio_samples[:, 1])],
                             title=f"modulus profiles at sigma = {sigma:.4g}",
                             xlabel="s", ylabel="value")
    for Lam in (0.1, 1.0, 10.0):
        sigma = max(sigma2, 8.0 * Lam)
        spectrum = solve_sl(SLProblem(sigma, D), 2)
        modulus = build_modulus(spectrum, Lam)
        ok = (modulus.checks["psi_at_0"] >= 0.0
              and modulus.checks["psi_prime_max"] < 0.0
              and modulus.checks["expansion_inequality_max"] <= 1e-8)
        checks.append(CheckResult(
            f"expansion inequality (Lambda={Lam:g})", ok,
            f"psi(0) = {modulus.checks['psi_at_0']:.4f}, "
            f"max psi' = {modulus.checks['psi_prime_max']:.2e}, "
            f"max expr = {modulus.checks['expansion_inequality_max']:.3e}"))
    return checks


def _interval_operator():
    return OperatorSpec(domain=dom.interval(1.0),
                        B=ZeroVectorField(dim=1),
                        c=make_scalar_field("zero", dim=1))


def exp_ac_interval(cfg: ExperimentConfig):
    op = _interval_operator()
    grids = [float(g) for g in cfg.get("grids", (1 / 256, 1 / 512))]
    spec_coarse = low_spectrum(assemble(op, grids[0]), 3)
    spec = low_spectrum(assemble(op, grids[1]), 3)
    cert = certify(op, spec, seed=cfg.seed)
    report = soundness_report(cert, spec, spec_coarse)
    D = op.domain.diameter
    checks = [
        CheckResult("sharp convex certificate",
                    cert.branch == "convex"
                    and abs(cert.alpha - 3 * math.pi ** 2 / D ** 2) <= 1e-9,
                    f"alpha = {cert.alpha!r}"),
        CheckResult("soundness", report.passed, report.to_text()),
        CheckResult("sharpness", abs(report.slack) <= report.tol_h,
                    f"slack {report.slack:.2e} within tol {report.tol_h:.2e}"),
    ]
    fields = compute_derived_fields(op, u0=spec.u0)
    n_pairs = int(cfg.get("n_pairs", 100_000))
    cmin = check_C_nonnegative(fields, convex_modulus(D), n_pairs, seed=cfg.seed)
    tol = pair_check_tolerance(spec.grid, 0.0, 0.0)
    checks.append(CheckResult("pair expansion bound", cmin >= -tol,
                              f"min C = {cmin:.3e} vs -tol = {-tol:.3e} "
                              f"({n_pairs} pairs)"))
    (cfg.output_dir / "certificate.json").write_text(cert.to_json())
    (cfg.output_dir / "certificate.txt").write_text(cert.to_text() + "\n"
                                                    + report.to_text() + "\n")
    spec.export_csv(cfg.output_dir / "spectrum.csv")
    return checks


def exp_phi_laplacian(cfg: ExperimentConfig):
    phi = QuadraticGradientField(Q=0.8 * np.eye(2))
    op = OperatorSpec(domain=dom.square(1.0), B=phi,
                      c=make_scalar_field("quadratic", dim=2, A=np.eye(2).tolist()),
                      phi=phi)
    grids = [float(g) for g in cfg.get("grids", (1 / 48, 1 / 96))]
    spec_coarse = low_spectrum(assemble(op, grids[0]), 3)
    spec = low_spectrum(assemble(op, grids[1]), 3)
    cert = certify(op, spec, seed=cfg.seed)
    report = soundness_report(cert, spec, spec_coarse)
    D = op.domain.diameter
    checks = [
        CheckResult("weighted-Laplacian sharp branch",
                    cert.branch == "convex" and cert.phi_convex is True
                    and abs(cert.alpha - 3 * math.pi ** 2 / D ** 2) <= 1e-9,
                    f"alpha = {cert.alpha!r} (3 pi^2/D^2 = {3 * math.pi ** 2 / D ** 2!r})"),
        CheckResult("real spectrum",
                    float(np.max(np.abs(spec.others.imag))) <= 1e-8,
                    f"max |Im| = {np.max(np.abs(spec.others.imag)):.2e}"),
        CheckResult("soundness", report.passed, report.to_text()),
    ]
    fields = compute_derived_fields(op, u0=spec.u0)
    n_pairs = int(cfg.get("n_pairs", 100_000))
    cmin = check_C_nonnegative(fields, convex_modulus(D), n_pairs, seed=cfg.seed)
    tol = pair_check_tolerance(spec.grid, 0.0, 0.0)
    checks.append(CheckResult("pair expansion bound", cmin >= -tol,
                              f"min C = {cmin:.3e} vs -tol = {-tol:.3e}"))
    (cfg.output_dir / "certificate.json").write_text(cert.to_json())
    (cfg.output_dir / "certificate.txt").write_text(cert.to_text() + "\n"
                                                    + report.to_text() + "\n")
    spec.export_csv(cfg.output_dir / "spectrum.csv")
    return checks


def exp_constant_drift(cfg: ExperimentConfig):
    b = float(cfg.get("b", 2.0))
    op = OperatorSpec(domain=dom.interval(1.0),
                      B=make_vector_field("constant", dim=1, vec=(b,)),
                      c=make_scalar_field("zero", dim=1))
    grids = [float(g) for g in cfg.get("grids", (1 / 128, 1 / 256, 1 / 512))]
    specs = [low_spectrum(assemble(op, g), 4) for g in grids]
    exact = [(n + 1) ** 2 * math.pi ** 2 + b * b / 4.0 for n in range(4)]
    rows = []
    for g, sp in zip(grids, specs):
        lams = [sp.lambda0] + list(sp.others.real)
        rows.append((g, *lams))
    _write_csv(cfg.output_dir / "convergence.csv",
               ["h", "lam0", "lam1", "lam2", "lam3"], rows)
    checks = [CheckResult(
        "real spectrum",
        max(float(np.max(np.abs(sp.others.imag))) for sp in specs) <= 1e-9,
        "drift shifts all eigenvalues by b^2/4, keeping them real")]
    ratios = []
    for n in range(4):
        errs = [abs(r[1 + n] - exact[n]) for r in rows]
        ratios.append(errs[0] / errs[1])
        ratios.append(errs[1] / errs[2])
    checks.append(CheckResult(
        "second-order eigenvalue convergence",
        all(3.5 <= r <= 4.5 for r in ratios),
        f"error ratios {['%.2f' % r for r in ratios]}"))
    err_fine = max(abs(rows[-1][1 + n] - exact[n]) / exact[n] for n in range(4))
    checks.append(CheckResult(
        "shifted closed form", err_fine <= 5e-4,
        f"max relative deviation {err_fine:.2e} from (n+1)^2 pi^2 + b^2/4"))
    cert = certify(op, specs[-1], seed=cfg.seed)
    report = soundness_report(cert, specs[-1], specs[-2])
    checks.append(CheckResult(
        "sharp certificate under constant drift",
        cert.branch == "convex" and report.passed
        and abs(report.slack) <= report.tol_h,
        report.to_text()))
    write_line_chart(cfg.output_dir / "convergence.svg",
                     [(f"mode {n}", [r[0] for r in rows],
                       [abs(r[1 + n] - exact[n]) for r in rows]) for n in range(4)],
                     title="eigenvalue error vs spacing (constant drift)",
                     xlabel="h", ylabel="|error|", logx=True, logy=True)
    return checks


def exp_rotating_disk(cfg: ExperimentConfig):
    R0 = float(cfg.get("R0", 0.85))
    omegas = [float(w) for w in cfg.get("omegas", (0.25, 0.5))]
    grids = [float(g) for g in cfg.get("grids", (2 / 48, 2 / 96))]
    j01 = bessel_zero(0, 1)
    j11 = bessel_zero(1, 1)
    checks = []
    gaps = {}
    for omega in omegas:
        op = OperatorSpec(domain=dom.disk(1.0),
                          B=make_vector_field("cutoff-rotational", dim=2,
                                              omega=omega, R0=R0),
                          c=make_scalar_field("zero", dim=2))
        spec_coarse = low_spectrum(assemble(op, grids[0]), 5)
        spec = low_spectrum(assemble(op, grids[1]), 5)
        gaps[omega] = spec.gap
        checks.append(CheckResult(
            f"principal eigenvalue (omega={omega:g})",
            abs(spec.lambda0 - j01 ** 2) <= 0.02 * j01 ** 2
            and abs(spec.lambda0 - j01 ** 2) < abs(spec_coarse.lambda0 - j01 ** 2),
            f"lambda0 = {spec.lambda0:.5f} -> {j01 ** 2:.5f} under refinement"))
        checks.append(CheckResult(
            f"gap vs Bessel reference (omega={omega:g})",
            abs(spec.gap - (j11 ** 2 - j01 ** 2)) <= 0.02 * (j11 ** 2 - j01 ** 2),
            f"gap = {spec.gap:.5f} vs {j11 ** 2 - j01 ** 2:.5f}"))
        non_real = spec.others[np.abs(spec.others.imag) > 1e-9]
        paired = all(np.min(np.abs(non_real - np.conj(lam))) <= 1e-6 * (1 + abs(lam))
                     for lam in non_real)
        checks.append(CheckResult(
            f"conjugate pairs (omega={omega:g})", paired,
            f"{len(non_real)} non-real eigenvalues"))
        checks.append(CheckResult(
            f"strict spectral bound (omega={omega:g})",
            bool(np.all(spec.others.real > spec.lambda0)),
            "Re(lambda) > lambda0 for every non-principal eigenvalue"))
        checks.append(CheckResult(
            f"positive principal vector (omega={omega:g})",
            float(np.min(spec.u0.values)) > 0.0,
            f"min u0 = {np.min(spec.u0.values):.3e}"))
        cert = certify(op, spec, seed=cfg.seed)
        report = soundness_report(cert, spec, spec_coarse)
        checks.append(CheckResult(
            f"general-branch certificate (omega={omega:g})",
            cert.branch == "general" and report.passed
            and cert.alpha > cert.quarter_bound,
            f"alpha = {cert.alpha:.4f} > quarter {cert.quarter_bound:.4f}; "
            + report.to_text()))
        spec.export_csv(cfg.output_dir / f"spectrum_omega_{omega:g}.csv")
        (cfg.output_dir / f"certificate_omega_{omega:g}.json").write_text(cert.to_json())
    if len(omegas) >= 2:
        g1, g2 = gaps[omegas[0]], gaps[omegas[1]]
        checks.append(CheckResult(
            "gap independent of rotation rate",
            abs(g1 - g2) <= 0.02 * max(g1, g2),
            f"gap({omegas[0]:g}) = {g1:.5f} vs gap({omegas[1]:g}) = {g2:.5f}"))
    _write_csv(cfg.output_dir / "gaps.csv", ["omega", "gap"],
               [(w, gaps[w]) for w in omegas])
    return checks


def exp_identity_check(cfg: ExperimentConfig):
    checks = []
    cases = [
        ("interval, zero drift",
         dom.interval(1.0), ZeroVectorField(dim=1), CosineBump(lengths=(1.0,)),
         5.0, (1 / 256, 1 / 512)),
        ("square, gradient drift",
         dom.square(1.0),
         QuadraticGradientField(Q=np.array([[1.0, 0.2], [0.2, 0.8]])),
         GaussianBump(center=(0.1, -0.05), width=0.4), 3.0, (1 / 64, 1 / 128)),
        ("disk, rotational drift",
         dom.disk(1.0),
         make_vector_field("cutoff-rotational", dim=2, omega=0.8, R0=0.85),
         GaussianBump(center=(0.05, 0.0), width=0.5), 2.0, (2 / 96, 2 / 192)),
    ]
    rows = []
    for label, domain, B, u0, lam0, (h1, h2) in cases:
        op = manufacture_operator(domain, B, u0, lam0)
        r1 = check_laplacian_identity(op, u0, lam0, h1)
        r2 = check_laplacian_identity(op, u0, lam0, h2)
        ratio = r1 / r2
        rows.append((label, h1, r1, h2, r2, ratio))
        checks.append(CheckResult(
            f"drift-velocity identity ({label})", 3.5 <= ratio <= 4.5,
            f"residual {r1:.3e} -> {r2:.3e}, ratio {ratio:.2f}"))
    _write_csv(cfg.output_dir / "identity.csv",
               ["case", "h_coarse", "resid_coarse", "h_fine", "resid_fine", "ratio"],
               rows)
    write_line_chart(cfg.output_dir / "identity.svg",
                     [(r[0], [r[1], r[3]], [r[2], r[4]]) for r in rows],
                     title="identity residual vs spacing",
                     xlabel="h", ylabel="max residual", logx=True, logy=True)
    return checks


def exp_certify(cfg: ExperimentConfig):
    op_cfg = cfg.get("operator", None)
    if op_cfg is None:
        op_cfg = {
            "domain": {"kind": "disk", "params": [1.0]},
            "drift": {"name": "cutoff-rotational", "omega": 0.5, "R0": 0.85},
            "potential": {"name": "zero"},
        }
    op = operator_from_config(op_cfg)
    grids = [float(g) for g in cfg.get("grids", (2 / 48, 2 / 96))]
    modes = int(cfg.get("modes", 5))
    spec_coarse = low_spectrum(assemble(op, grids[0]), modes)
    spec = low_spectrum(assemble(op, grids[1]), modes)
    cert = certify(op, spec, seed=cfg.seed)
    report = soundness_report(cert, spec, spec_coarse)
    (cfg.output_dir / "certificate.json").write_text(cert.to_json())
    (cfg.output_dir / "certificate.txt").write_text(cert.to_text() + "\n"
                                                    + report.to_text() + "\n")
    spec.export_csv(cfg.output_dir / "spectrum.csv")
    return [CheckResult("certificate soundness", report.passed, report.to_text())]


EXPERIMENTS = {
    "sl-spectrum": exp_sl_spectrum,
    "sl-asymptotics": exp_sl_asymptotics,
    "sigma-ladder": exp_sigma_ladder,
    "modulus-check": exp_modulus_check,
    "ac-interval": exp_ac_interval,
    "phi-laplacian": exp_phi_laplacian,
    "constant-drift": exp_constant_drift,
    "rotating-disk": exp_rotating_disk,
    "identity-check": exp_identity_check,
    "certify": exp_certify,
}


def run_experiment(name: str, out_root: Path, seed: int = 0,
                   params: dict | None = None) -> list[CheckResult]:
    if name not in EXPERIMENTS:
        raise UnknownExperiment(f"{name!r}; known: {sorted(EXPERIMENTS)}")
    out = Path(out_root) / name
    out.mkdir(parents=True, exist_ok=True)
    cfg = ExperimentConfig(name=name, output_dir=out, seed=seed,
                           params=params or {})
    checks = EXPERIMENTS[name](cfg)
    lines = [c.line() for c in checks]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return checks


# ---------------------------------------------------------------------------
# Command-line interface
# ---------------------------------------------------------------------------


def _cmd_sl(args) -> int:
    if args.action == "critical-sigma":
        value = critical_sigma(args.diameter)
        print(f"critical slope sigma0({args.diameter:g}) = {value!r}")
        return 0
    problem = SLProblem(args.sigma, args.diameter, args.grid_size)
    if args.action == "gap":
        mu0, mu1, gap = sl_gap(problem)
        print(f"mu0 = {mu0!r}\nmu1 = {mu1!r}\ngap = {gap!r}")
        return 0
    spectrum = solve_sl(problem, args.modes)
    for p in spectrum.pairs:
        print(f"mu[{p.index}] = {p.mu!r}  ({p.parity})")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        s = spectrum.pair(0).samples[:, 0]
        cols = [s, spectrum.pair(0).samples[:, 1],
                spectrum.pair(0).derivative_samples[:, 1]]
        header = ["s", "w0", "w0p"]
        if args.modes > 1:
            cols += [spectrum.pair(1).samples[:, 1],
                     spectrum.pair(1).derivative_samples[:, 1]]
            header += ["w1", "w1p"]
        _write_csv(out / "eigenpairs.csv", header, zip(*cols))
        print(f"wrote {out / 'eigenpairs.csv'}")
    return 0


def _cmd_modulus(args) -> int:
    problem = SLProblem(args.sigma, args.diameter, args.grid_size)
    spectrum = solve_sl(problem, 2)
    riccati = build_riccati(spectrum)
    profile = build_modulus(spectrum, args.drift_bound)
    cm = build_continuity_modulus(spectrum, profile)
    print(f"s0 = {profile.s0!r}, eta_sigma = {profile.eta_sigma!r}, "
          f"eta = {profile.eta!r}")
    for k, v in profile.checks.items():
        print(f"  {k} = {v!r}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        s = profile.omega_samples[:, 0]
        v_interp = np.interp(s, riccati.samples[:, 0], riccati.samples[:, 1])
        _write_csv(out / "profile.csv", ["s", "v", "omega", "psi", "ratio"],
                   zip(s, v_interp, profile.omega_samples[:, 1],
                       profile.psi_samples[:, 1], cm.ratio_samples[:, 1]))
        print(f"wrote {out / 'profile.csv'}")
    return 0


def _cmd_spectrum(args) -> int:
    cfg = load_config(args.config) if args.config else {
        "domain": {"kind": "interval", "params": [1.0]}}
    op = operator_from_config(cfg)
    dop = assemble(op, args.grid)
    spec = low_spectrum(dop, args.modes)
    print(f"lambda0 = {spec.lambda0!r}")
    for lam, r in zip(spec.others, spec.residual_norms[1:]):
        print(f"lambda  = {lam!r}  (residual {r:.2e})")
    try:
        print(f"gap = {spec.gap!r}")
    except GapcertError as exc:
        print(f"gap undefined: {exc}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        spec.export_csv(out / "spectrum.csv")
        if args.export_matrix:
            dop.export_matrix(out / "matrix.txt")
        print(f"wrote {out}")
    return 0


def _cmd_certify(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    out = Path(args.out) if args.out else Path("gapcert-out")
    checks = run_experiment("certify", out.parent if out.name == "certify" else out,
                            seed=args.seed, params=cfg)
    for c in checks:
        print(c.line())
    return 0 if all(c.passed for c in checks) else 1


def _cmd_experiment(args) -> int:
    names = list(EXPERIMENTS) if args.names == ["all"] else args.names
    for name in names:
        if name not in EXPERIMENTS:
            raise UnknownExperiment(f"{name!r}; known: {sorted(EXPERIMENTS)}")
    params = load_config(args.config) if args.config else {}
    out_root = Path(args.out)
    results: dict[str, list[CheckResult]] = {}
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = {name: pool.submit(run_experiment, name, out_root,
                                         args.seed, params.get(name, {}))
                       for name in names}
            for name, fut in futures.items():
                results[name] = fut.result()
    else:
        for name in names:
            results[name] = run_experiment(name, out_root, args.seed,
                                           params.get(name, {}))
    all_ok = True
    for name in names:
        print(f"== {name}")
        for c in results[name]:
            print("  " + c.line())
            all_ok &= c.passed
    print("overall:", "PASS" if all_ok else "FAIL")
    return 0 if all_ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gapcert",
        description="certified spectral-gap lower bounds for drift-diffusion "
                    "operators on convex domains")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sl = sub.add_parser("sl", help="tent-potential eigenproblem")
    p_sl.add_argument("action", choices=["solve", "gap", "critical-sigma"])
    p_sl.add_argument("--sigma", type=float, default=0.0)
    p_sl.add_argument("--diameter", type=float, default=1.0)
    p_sl.add_argument("--modes", type=int, default=2)
    p_sl.add_argument("--grid-size", type=int, default=2048)
    p_sl.add_argument("--out", default=None)
    p_sl.set_defaults(func=_cmd_sl)

    p_mod = sub.add_parser("modulus", help="expansion/continuity moduli")
    p_mod.add_argument("--sigma", type=float, required=True)
    p_mod.add_argument("--diameter", type=float, default=1.0)
    p_mod.add_argument("--drift-bound", type=float, default=0.0)
    p_mod.add_argument("--grid-size", type=int, default=2048)
    p_mod.add_argument("--out", default=None)
    p_mod.set_defaults(func=_cmd_modulus)

    p_spec = sub.add_parser("spectrum", help="discrete operator spectrum")
    p_spec.add_argument("--config", default=None)
    p_spec.add_argument("--grid", type=float, default=1 / 256)
    p_spec.add_argument("--modes", type=int, default=4)
    p_spec.add_argument("--export-matrix", action="store_true")
    p_spec.add_argument("--out", default=None)
    p_spec.set_defaults(func=_cmd_spectrum)

    p_cert = sub.add_parser("certify", help="end-to-end gap certificate")
    p_cert.add_argument("--config", default=None)
    p_cert.add_argument("--out", default="gapcert-out")
    p_cert.add_argument("--seed", type=int, default=0)
    p_cert.set_defaults(func=_cmd_certify)

    p_exp = sub.add_parser("experiment", help="named batch experiments")
    p_exp.add_argument("names", nargs="+",
                       help=f"experiment names or 'all'; known: {sorted(EXPERIMENTS)}")
    p_exp.add_argument("--out", default="gapcert-out")
    p_exp.add_argument("--jobs", type=int, default=1)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--config", default=None)
    p_exp.set_defaults(func=_cmd_experiment)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GapcertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
