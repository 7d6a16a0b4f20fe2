import math

import numpy as np
import pytest

from gapcert.bessel import bessel_j0, bessel_j1, bessel_zero
from gapcert.domain import disk, ellipse, interval, square
from gapcert.elliptic_spectrum import assemble, low_spectrum, principal_eigenpair
from gapcert.errors import GapUndefined, GridTooCoarse, InvalidProblem
from gapcert.fields import (
    ConstantVectorField,
    CutoffRotationalField,
    RotationalField,
    ZeroScalarField,
    ZeroVectorField,
    make_scalar_field,
)
from gapcert.operator_model import OperatorSpec
from oracles import dense_low_spectrum


def _op(domain, B=None, c=None):
    d = domain.dim
    return OperatorSpec(domain=domain,
                        B=B if B is not None else ZeroVectorField(dim=d),
                        c=c if c is not None else ZeroScalarField(dim=d))


def test_bessel_oracle_against_mpmath():
    import mpmath as mp

    for order in (0, 1):
        for k in (1, 2, 3):
            mine = bessel_zero(order, k)
            ref = float(mp.besseljzero(order, k))
            assert mine == pytest.approx(ref, abs=1e-12)
    assert bessel_j0(1.7) == pytest.approx(float(mp.besselj(0, 1.7)), abs=1e-14)
    assert bessel_j1(2.9) == pytest.approx(float(mp.besselj(1, 2.9)), abs=1e-14)


def test_interval_principal_matches_discrete_closed_form():
    dop = assemble(_op(interval(1.0)), 1 / 512)
    lam0, u0 = principal_eigenpair(dop)
    h = dop.grid.spacing[0]
    lam_disc = 4.0 / h ** 2 * math.sin(math.pi * h / 2.0) ** 2
    assert lam0 == pytest.approx(lam_disc, abs=1e-10)
    assert lam0 == pytest.approx(math.pi ** 2, rel=1e-3)
    assert np.min(u0.values) > 0.0
    assert np.max(u0.values) == pytest.approx(1.0)


def test_symmetric_case_matrix_symmetry():
    dop = assemble(_op(interval(1.0)), 1 / 256)
    assert abs(dop.matrix - dop.matrix.T).max() <= 1e-12
    dop2 = assemble(_op(square(1.0)), 1 / 48)
    assert abs(dop2.matrix - dop2.matrix.T).max() <= 1e-12


def test_pattern_symmetry_and_offdiag_positivity():
    op = _op(disk(1.0), B=CutoffRotationalField(omega=0.5, R0=0.85))
    dop = assemble(op, 2 / 48)
    A = dop.matrix.tocoo()
    pattern = set(zip(A.row.tolist(), A.col.tolist()))
    for r, c in pattern:
        assert (c, r) in pattern
    off = A.row != A.col
    assert np.all(A.data[off] > 0.0)  # cell Peclet < 2 keeps couplings positive


def test_square_low_spectrum_values():
    spec = low_spectrum(assemble(_op(square(1.0)), 1 / 64), 4)
    assert spec.lambda0 == pytest.approx(2 * math.pi ** 2, rel=2e-3)
    # next value ~ 5 pi^2 (grid-degenerate pair; at least one copy resolved)
    assert spec.others.real[0] == pytest.approx(5 * math.pi ** 2, rel=2e-3)
    assert np.max(np.abs(spec.others.imag)) <= 1e-9


def test_constant_drift_gauge_property():
    gaps = {}
    for b in (0.0, 2.0):
        op = _op(interval(1.0), B=ConstantVectorField(vec=(b,)))
        spec = low_spectrum(assemble(op, 1 / 512), 3)
        assert np.max(np.abs(spec.others.imag)) <= 1e-10
        gaps[b] = spec.gap
    # all eigenvalues shift by b^2/4: the gap is drift-independent up to O(h^2)
    assert abs(gaps[2.0] - gaps[0.0]) <= 1e-4 * gaps[0.0]


def test_interval_refinement_second_order():
    errs = []
    gap_errs = []
    for h in (1 / 128, 1 / 256, 1 / 512):
        spec = low_spectrum(assemble(_op(interval(1.0)), h), 2)
        errs.append(abs(spec.lambda0 - math.pi ** 2))
        gap_errs.append(abs(spec.gap - 3 * math.pi ** 2))
    assert 3.5 <= errs[0] / errs[1] <= 4.5
    assert 3.5 <= errs[1] / errs[2] <= 4.5
    assert 3.5 <= gap_errs[0] / gap_errs[1] <= 4.5
    assert 3.5 <= gap_errs[1] / gap_errs[2] <= 4.5


def test_square_refinement_second_order():
    errs = []
    for h in (1 / 48, 1 / 96, 1 / 192):
        lam0, _ = principal_eigenpair(assemble(_op(square(1.0)), h))
        errs.append(abs(lam0 - 2 * math.pi ** 2))
    assert 3.5 <= errs[0] / errs[1] <= 4.5
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_arnoldi_matches_dense_oracle():
    op = _op(interval(1.0), B=ConstantVectorField(vec=(1.5,)))
    dop = assemble(op, 1 / 64)
    spec = low_spectrum(dop, 4)
    dense = dense_low_spectrum(dop.matrix, 4)
    mine = np.concatenate([[spec.lambda0 + 0j], spec.others])[:4]
    assert np.allclose(np.sort(mine.real), np.sort(dense.real), rtol=1e-9)
    assert np.max(spec.residual_norms) <= 1e-8


def test_disk_bessel_convergence():
    j01 = bessel_zero(0, 1)
    j11 = bessel_zero(1, 1)
    errs_lam = []
    errs_gap = []
    for h in (2 / 48, 2 / 96):
        spec = low_spectrum(assemble(_op(disk(1.0)), h), 3)
        errs_lam.append(abs(spec.lambda0 - j01 ** 2))
        errs_gap.append(abs(spec.gap - (j11 ** 2 - j01 ** 2)))
    assert errs_lam[1] < errs_lam[0]
    assert errs_lam[1] <= 0.01 * j01 ** 2
    assert errs_gap[1] <= 0.01 * (j11 ** 2 - j01 ** 2)


def test_ellipse_assembles_and_reduces_to_disk():
    spec_e = low_spectrum(assemble(_op(ellipse(1.0, 1.0)), 2 / 48), 2)
    spec_d = low_spectrum(assemble(_op(disk(1.0)), 2 / 48), 2)
    assert spec_e.lambda0 == pytest.approx(spec_d.lambda0, rel=1e-10)


def test_rotating_disk_conjugate_pairs(rotating_disk_spectra):
    spec = rotating_disk_spectra[1]
    non_real = spec.others[np.abs(spec.others.imag) > 1e-9]
    assert len(non_real) >= 2
    resid = {}
    for lam, r in zip(spec.others, spec.residual_norms[1:]):
        resid[complex(lam)] = r
    for lam in non_real:
        partner = min(non_real, key=lambda z: abs(z - np.conj(lam)))
        assert abs(partner - np.conj(lam)) <= 1e-6 * (1 + abs(lam))
        assert abs(resid[complex(lam)] - resid[complex(partner)]) <= 1e-6
    assert np.all(spec.others.real > spec.lambda0)
    assert np.min(spec.u0.values) > 0.0


def test_gap_undefined_for_single_mode():
    spec = low_spectrum(assemble(_op(interval(1.0)), 1 / 64), 1)
    assert len(spec.others) == 0
    with pytest.raises(GapUndefined):
        _ = spec.gap


def test_grid_guards():
    with pytest.raises(GridTooCoarse):
        assemble(_op(interval(1.0)), 1 / 16)  # < 32 interior nodes
    op = _op(interval(1.0), B=ConstantVectorField(vec=(500.0,)))
    with pytest.raises(GridTooCoarse):
        assemble(op, 1 / 64)  # cell Peclet >= 2
    with pytest.raises(InvalidProblem):
        low_spectrum(assemble(_op(interval(1.0)), 1 / 64), 13)


def test_exports(tmp_path):
    dop = assemble(_op(interval(1.0)), 1 / 64)
    spec = low_spectrum(dop, 2)
    mpath = tmp_path / "matrix.txt"
    dop.export_matrix(mpath)
    first = mpath.read_text().splitlines()[0].split()
    assert len(first) == 3
    int(first[0]), int(first[1]), float(first[2])
    cpath = tmp_path / "spectrum.csv"
    spec.export_csv(cpath)
    lines = cpath.read_text().splitlines()
    assert lines[0] == "re,im,residual"
    assert len(lines) == 2 + len(spec.others)
