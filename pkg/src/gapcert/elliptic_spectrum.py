"""Discrete spectra of L = Laplacian - B . grad - c with Dirichlet walls.

Second-order central differences on uniform tensor grids; curved walls
(disk/ellipse) get one-sided cut-cell stencils built from the exact
boundary intersection fractions.  Eigenvalues follow the convention
L u = -lambda u, so lambda0 > 0 for c >= 0 and the reported spectrum is
{lambda}: the principal pair comes from shift-inverted power iteration,
the low spectrum from a shift-inverted Arnoldi iteration (full
reorthogonalization, eigendecomposition of the projected Hessenberg matrix
delegated to LAPACK).

The shifted matrix -A + I is an M-matrix whenever every cell Peclet number
|B| h is below 2 (enforced at assembly): its inverse is entrywise
nonnegative, which is what makes the power iteration converge to a
positive principal vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .domain import Grid, build_grid
from .errors import (
    GapUndefined,
    GridTooCoarse,
    InvalidProblem,
    InvariantViolation,
    MissingConjugate,
    NonConvergence,
    SignInconsistency,
)
from .operator_model import OperatorSpec, SampledField

_POWER_BUDGET = 800
_ARNOLDI_MAX = 60


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Sparse discretization A with (A u)_i ~ (Laplacian u - B.grad u - c u)(x_i)."""

    op: OperatorSpec
    grid: Grid
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def h(self) -> float:
        return self.grid.h_max

    @property
    def n(self) -> int:
        return self.grid.n_nodes

    def export_matrix(self, path) -> None:
        """Coordinate text format: one 'row col value' line per entry."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")


@dataclass(frozen=True, eq=False)
class DiscreteSpectrum:
    """Principal pair plus the next eigenvalues ordered by real part."""

    lambda0: float
    u0: SampledField
    others: np.ndarray  # complex, sorted by real part
    residual_norms: np.ndarray  # aligned: [lambda0, *others]
    grid: Grid
    conjugate_repaired: bool = False

    @property
    def gap(self) -> float:
        if len(self.others) == 0:
            raise GapUndefined("no non-principal eigenvalue was computed")
        return float(np.min(self.others.real) - self.lambda0)

    def export_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im", "residual"])
            w.writerow([repr(self.lambda0), repr(0.0), repr(float(self.residual_norms[0]))])
            for lam, r in zip(self.others, self.residual_norms[1:]):
                w.writerow([repr(lam.real), repr(lam.imag), repr(float(r))])


def assemble(op: OperatorSpec, h: float) -> DiscreteOperator:
    """Discretize on a grid of spacing ~h; >= 32 interior nodes per direction
    and cell Peclet |B| h < 2 are required (the latter keeps the off-diagonal
    signs and with them the M-matrix structure of the shifted system)."""
    grid = build_grid(op.domain, h)
    if min(grid.shape) < 32:
        raise GridTooCoarse(f"need >= 32 interior nodes per direction, got {grid.shape}")
    nodes = grid.nodes
    n = grid.n_nodes
    d = grid.dim
    B = op.B.value(nodes)
    c = op.c.value(nodes)
    peclet = max(float(np.max(np.abs(B[:, a])) * grid.spacing[a]) for a in range(d))
    if peclet >= 2.0:
        raise GridTooCoarse(f"cell Peclet number {peclet:.3f} >= 2; refine the grid")

    rows, cols, vals = [], [], []
    diag = -c.copy()
    idx = np.arange(n)
    for a in range(d):
        ha = grid.spacing[a]
        alpha = grid.arms[:, a, 0] * ha  # distance to left sample/boundary
        beta = grid.arms[:, a, 1] * ha
        left = grid.neighbors[:, a, 0]
        right = grid.neighbors[:, a, 1]
        b = B[:, a]
        coef_left = 2.0 / (alpha * (alpha + beta)) + b * beta / (alpha * (alpha + beta))
        coef_right = 2.0 / (beta * (alpha + beta)) - b * alpha / (beta * (alpha + beta))
        diag += -2.0 / (alpha * beta) - b * (beta - alpha) / (alpha * beta)
        has_l = left >= 0
        rows.append(idx[has_l]); cols.append(left[has_l]); vals.append(coef_left[has_l])
        has_r = right >= 0
        rows.append(idx[has_r]); cols.append(right[has_r]); vals.append(coef_right[has_r])
    rows.append(idx); cols.append(idx); vals.append(diag)
    A = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return DiscreteOperator(op=op, grid=grid, matrix=A)


def _shifted_solver(dop: DiscreteOperator):
    """LU of (-A + I): the shift sits strictly below the spectrum {lambda}
    whenever c >= 0 (then lambda0 > 0), so 1/(lambda + 1) is maximal at the
    principal eigenvalue."""
    M = (-dop.matrix + sp.identity(dop.n, format="csr")).tocsc()
    return splu(M)


def principal_eigenpair(dop: DiscreteOperator,
                        _solver=None) -> tuple[float, SampledField]:
    """Principal eigenvalue and positive max-normalized eigenfunction.

    Power iteration on (-A + I)^{-1}; converged when successive eigenvalue
    estimates differ by <= 1e-11 (1 + |lambda0|).  A converged vector with
    interior sign changes triggers a retry from a fresh seeded start and,
    after three failures, SignInconsistency.
    """
    lu = _solver if _solver is not None else _shifted_solver(dop)
    n = dop.n
    for attempt in range(3):
        if attempt == 0:
            x = np.ones(n)
        else:
            x = np.abs(np.random.default_rng(1234 + attempt).standard_normal(n)) + 0.1
        x /= np.linalg.norm(x)
        lam_prev = np.inf
        for _ in range(_POWER_BUDGET):
            y = lu.solve(x)
            theta = float(x @ y)
            ny = float(np.linalg.norm(y))
            if ny == 0.0 or theta <= 0.0:
                break
            x = y / ny
            lam = -1.0 + 1.0 / theta
            if abs(lam - lam_prev) <= 1e-11 * (1.0 + abs(lam)):
                if np.max(x) < -np.min(x):
                    x = -x
                if np.min(x) <= 0.0:
                    break  # sign change: retry with a new start
                u0 = x / np.max(x)
                return lam, SampledField(grid=dop.grid, values=u0)
            lam_prev = lam
        else:
            raise NonConvergence("power iteration budget exhausted")
    raise SignInconsistency("principal vector kept changing sign in the interior")


def _arnoldi(solve, n: int, m: int, seed: int = 7):
    """Arnoldi with twice-applied modified Gram-Schmidt; returns (V, H, m_eff)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    V = np.zeros((n, m + 1))
    H = np.zeros((m + 1, m))
    V[:, 0] = v
    m_eff = m
    for j in range(m):
        w = solve(V[:, j])
        for _ in range(2):
            coef = V[:, : j + 1].T @ w
            w = w - V[:, : j + 1] @ coef
            H[: j + 1, j] += coef
        hj = np.linalg.norm(w)
        H[j + 1, j] = hj
        if hj < 1e-13 * max(1.0, np.max(np.abs(H))):
            m_eff = j + 1
            break
        V[:, j + 1] = w / hj
    return V[:, :m_eff], H[:m_eff, :m_eff], m_eff


def low_spectrum(dop: DiscreteOperator, k: int) -> DiscreteSpectrum:
    """k eigenvalues of smallest real part (convention L u = -lambda u),
    each with residual norm <= 1e-8.

    Shift-inverted Arnoldi on (-A + I)^{-1} with the projected Hessenberg
    eigendecomposition done by LAPACK.  Real arithmetic keeps Ritz values in
    exact conjugate pairs; if the requested count slices a pair apart, the
    partner is appended and the repair flagged.
    """
    if int(k) != k or not (1 <= k <= 12):
        raise InvalidProblem(f"k must be an integer in 1..12, got {k!r}")
    lu = _shifted_solver(dop)
    lam0, u0 = principal_eigenpair(dop, _solver=lu)
    n = dop.n
    A = dop.matrix
    m_first = min(n - 1, max(2 * k + 14, 36))
    for m in dict.fromkeys([m_first, min(n - 1, _ARNOLDI_MAX)]):
        V, H, m_eff = _arnoldi(lu.solve, n, m)
        theta, Z = np.linalg.eig(H)
        keep = np.abs(theta) > 1e-13
        theta, Z = theta[keep], Z[:, keep]
        lams = -1.0 + 1.0 / theta
        order = np.argsort(lams.real)
        lams, Z = lams[order], Z[:, order]
        vecs = V @ Z
        take = min(k, len(lams))
        resid = np.empty(take)
        for i in range(take):
            v = vecs[:, i]
            resid[i] = (np.linalg.norm(A @ v + lams[i] * v)
                        / max(np.linalg.norm(v), 1e-300))
        if take == k and np.all(resid <= 1e-8):
            break
    else:
        raise NonConvergence(
            f"Arnoldi residuals above 1e-8 at subspace size {_ARNOLDI_MAX}")

    sel = list(range(k))
    # conjugate closure at the selection cut
    tail = lams[k - 1]
    if abs(tail.imag) > 1e-10 * (1.0 + abs(tail.real)):
        has_partner = any(
            abs(lams[i] - np.conj(tail)) <= 1e-6 * (1.0 + abs(tail)) for i in sel)
        repaired = False
        if not has_partner:
            for i in range(k, len(lams)):
                if abs(lams[i] - np.conj(tail)) <= 1e-6 * (1.0 + abs(tail)):
                    sel.append(i)
                    repaired = True
                    break
            if not repaired:
                raise MissingConjugate(f"no conjugate partner for {tail!r}")
    else:
        repaired = False

    lams_sel = lams[sel]
    vecs_sel = vecs[:, sel]
    resid_sel = np.array([
        np.linalg.norm(A @ vecs_sel[:, i] + lams_sel[i] * vecs_sel[:, i])
        / max(np.linalg.norm(vecs_sel[:, i]), 1e-300)
        for i in range(len(sel))])

    # deflate the principal eigenvalue: one Ritz instance must match it
    dist0 = np.abs(lams_sel - lam0)
    i0 = int(np.argmin(dist0))
    if dist0[i0] > 1e-6 * (1.0 + abs(lam0)):
        raise NonConvergence(
            f"Arnoldi did not resolve the principal eigenvalue: nearest Ritz "
            f"value {lams_sel[i0]!r} vs {lam0!r}")
    others = np.delete(lams_sel, i0)
    resid_others = np.delete(resid_sel, i0)
    order = np.argsort(others.real)
    others = others[order]
    resid_others = resid_others[order]
    # simplicity: after removing the principal copy, nothing else may sit on it
    if len(others) and np.min(np.abs(others - lam0)) <= 1e-8 * (1.0 + abs(lam0)):
        raise InvariantViolation("principal_simple",
                                 float(np.min(np.abs(others - lam0))),
                                 "another eigenvalue within 1e-8 of lambda0")
    return DiscreteSpectrum(
        lambda0=lam0, u0=u0, others=others,
        residual_norms=np.concatenate([[resid_sel[i0]], resid_others]),
        grid=dop.grid, conjugate_repaired=repaired)
