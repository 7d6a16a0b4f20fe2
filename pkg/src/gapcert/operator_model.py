"""Elliptic operator data and the geometric quantities derived from it.

The operator is L u = Laplacian(u) - B . grad(u) - c u on a convex domain.
From the coefficients and the principal eigenfunction u0 this module
derives, on the interior grid away from a boundary layer:

    U  = antisymmetrized drift jacobian (the vorticity 2-form of B),
    V  = grad c + grad|B|^2 / 4 - Laplacian(B) / 2,
    Y  = -grad(u0)/u0 + B/2  (the drift velocity of eigenfunction ratios),

and the scalar bounds kappa = sup (|grad u0|/u0)|dbeta|, Lambda =
sup |Y| |U|, plus the convexity profile tau of V estimated from sampled
point pairs.  Two consistency checks tie everything together numerically:
the manufactured-solution identity for Laplacian(Y) and the pair
nonnegativity of the expansion functional C(x, y).

The gradient of u0 is always divided by u0 directly (never differentiating
log u0): near the boundary log u0 has unbounded derivatives while u0 itself
stays smooth, so the ratio form keeps the finite-difference error O(h)
even at the retained-layer edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .domain import DomainSpec, Grid, build_grid
from .errors import (
    InvalidProblem,
    MissingEigenfunction,
    NonPositiveEigenfunction,
    NonPositiveManufacturedSolution,
)
from .fields import (
    CallableScalarField,
    QuadraticGradientField,
    ScalarField,
    VectorField,
)

N_TAU_BUCKETS = 64
# Fraction knocked off the sampled pair minimum before tau is used downstream.
TAU_DEFLATION = 0.05


@dataclass(frozen=True, eq=False)
class SampledField:
    """Grid-aligned scalar samples (one value per interior node)."""

    grid: Grid
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Coefficients of L = Laplacian - B . grad - c on a convex domain.

    `phi` marks a gradient drift B = grad(phi); `K` optionally records the
    vorticity-decay constant |dbeta(x)| <= K dist(x, boundary).
    """

    domain: DomainSpec
    B: VectorField
    c: ScalarField
    phi: Optional[QuadraticGradientField] = None
    K: Optional[float] = None

    def __post_init__(self):
        if self.phi is not None and self.B.is_gradient is False:
            raise InvalidProblem("phi given but the drift is not a gradient field")

    def min_c_on(self, grid: Grid) -> float:
        return float(np.min(self.c.value(grid.nodes)))


@dataclass(frozen=True, eq=False)
class TauProfile:
    """Bucketed lower bound for the directional increments of V.

    Bucket k covers half-distances s in (edges[k], edges[k+1]]; `values`
    are the raw halved pair minima, `deflated` the 5%-deflated working
    values, and `filled[k]` flags buckets that had no sampled pair and took
    the minimum of their neighbors instead.
    """

    edges: np.ndarray  # (K+1,)
    values: np.ndarray  # (K,)
    deflated: np.ndarray  # (K,)
    counts: np.ndarray  # (K,)
    filled: np.ndarray  # (K,) bool

    def at(self, s) -> np.ndarray:
        idx = np.clip(np.searchsorted(self.edges, np.asarray(s, dtype=float),
                                      side="left") - 1, 0, len(self.values) - 1)
        return self.deflated[idx]

    @property
    def sup_negative(self) -> float:
        return float(max(np.max(-self.deflated), 0.0))

    @property
    def min_deflated(self) -> float:
        return float(np.min(self.deflated))


@dataclass(frozen=True, eq=False)
class DerivedFields:
    """U, V (and Y, when u0 is known) on the retained interior nodes."""

    grid: Grid
    layer: float
    index: np.ndarray  # retained node indices into grid.nodes
    coords: np.ndarray  # (m, d)
    U: np.ndarray  # (m, d, d), U[:, i, j] = d_j b_i - d_i b_j
    V: np.ndarray  # (m, d)
    Y: Optional[np.ndarray] = None  # (m, d)
    u0: Optional[np.ndarray] = None  # (m,)
    grad_u0: Optional[np.ndarray] = None  # (m, d)
    tau_profile: Optional[TauProfile] = None

    def with_tau(self, tau: TauProfile) -> "DerivedFields":
        return replace(self, tau_profile=tau)


def _vorticity_matrix(B: VectorField, x: np.ndarray) -> np.ndarray:
    J = B.jacobian(x)
    return np.transpose(J, (0, 1, 2)) - np.transpose(J, (0, 2, 1))


def vorticity_norm(B: VectorField, x: np.ndarray) -> np.ndarray:
    """|dbeta| pointwise: spectral norm of the antisymmetrized jacobian
    (for d = 2 this is |d1 b2 - d2 b1|; in 1-D it vanishes)."""
    x = np.atleast_2d(x)
    if x.shape[1] == 1:
        return np.zeros(len(x))
    U = _vorticity_matrix(B, x)
    return np.abs(U[:, 0, 1])


def compute_derived_fields(op: OperatorSpec, u0: Optional[SampledField] = None,
                           grid: Optional[Grid] = None,
                           layer: Optional[float] = None) -> DerivedFields:
    """Evaluate U and V (plus Y when u0 is supplied) on retained nodes.

    Retained means boundary distance >= layer (default two spacings): the
    discrete |grad u0| / u0 ratio is 0/0 at the wall itself, and the layer
    is where its error is controlled.
    """
    if grid is None:
        if u0 is None:
            raise InvalidProblem("either u0 (with its grid) or a grid is required")
        grid = u0.grid
    if u0 is not None and u0.grid is not grid:
        raise InvalidProblem("u0 was sampled on a different grid")
    if layer is None:
        layer = 2.0 * grid.h_max
    keep = grid.retained_mask(layer)
    idx = np.nonzero(keep)[0]
    coords = grid.nodes[idx]
    U = _vorticity_matrix(op.B, coords)
    Bv = op.B.value(coords)
    J = op.B.jacobian(coords)
    # V_j = d_j c + sum_i b_i d_j b_i - Laplacian(b_j) / 2
    V = (op.c.gradient(coords)
         + 0.5 * np.einsum("ni,nij->nj", Bv, J)
         - 0.5 * op.B.laplacian(coords))
    Y = grad_u0_r = u0_r = None
    if u0 is not None:
        grad_all = grid.gradient(u0.values)
        u0_r = u0.values[idx]
        if np.any(u0_r <= 0.0):
            raise NonPositiveEigenfunction(
                f"u0 <= 0 at {int(np.count_nonzero(u0_r <= 0))} retained node(s)")
        grad_u0_r = grad_all[idx]
        if np.any(~np.isfinite(grad_u0_r)):
            raise InvalidProblem("u0 gradient undefined on retained nodes; "
                                 "increase the boundary layer")
        Y = -grad_u0_r / u0_r[:, None] + 0.5 * Bv
    return DerivedFields(grid=grid, layer=layer, index=idx, coords=coords,
                         U=U, V=V, Y=Y, u0=u0_r, grad_u0=grad_u0_r)


@dataclass(frozen=True)
class KappaEstimate:
    """Layered maximum of (|grad u0|/u0)|dbeta| with a stability flag.

    `wide_value` repeats the maximum over the doubled layer; `stable` marks
    agreement within 10% (the supremum is finite up to the wall, so a
    layered maximum that still moves under widening signals an unresolved
    boundary region).
    """

    value: float
    layer: float
    wide_value: float
    stable: bool


def estimate_kappa(op: OperatorSpec, u0: SampledField,
                   boundary_layer: float) -> KappaEstimate:
    grid = u0.grid
    if boundary_layer < 2.0 * grid.h_max * (1.0 - 1e-12):
        raise InvalidProblem("boundary_layer must be at least two grid spacings")

    def layered_max(layer: float) -> float:
        fields = compute_derived_fields(op, u0=u0, layer=layer)
        ratio = np.linalg.norm(fields.grad_u0, axis=1) / fields.u0
        dbeta = vorticity_norm(op.B, fields.coords)
        return float(np.max(ratio * dbeta))

    value = layered_max(boundary_layer)
    wide = layered_max(2.0 * boundary_layer)
    stable = abs(value - wide) <= 0.10 * max(value, wide, 1e-300)
    return KappaEstimate(value=value, layer=boundary_layer,
                         wide_value=wide, stable=stable)


def estimate_Lambda(fields: DerivedFields) -> float:
    """Max over retained nodes of |Y| times the spectral norm of U."""
    if fields.Y is None:
        raise MissingEigenfunction("Lambda needs Y, which needs u0")
    if fields.coords.shape[1] == 1:
        return 0.0
    u_norm = np.abs(fields.U[:, 0, 1])
    y_norm = np.linalg.norm(fields.Y, axis=1)
    return float(np.max(y_norm * u_norm))


def _halton_pairs(n_items: int, n_pairs: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    sampler = qmc.Halton(d=2, scramble=True, seed=seed)
    u = sampler.random(int(n_pairs * 1.1) + 16)
    i = np.minimum((u[:, 0] * n_items).astype(int), n_items - 1)
    j = np.minimum((u[:, 1] * n_items).astype(int), n_items - 1)
    keep = i != j
    return i[keep][:n_pairs], j[keep][:n_pairs]


def estimate_tau(fields: DerivedFields, n_pairs: int, seed: int = 0) -> TauProfile:
    """Convexity profile of V from quasi-random interior pairs.

    Half-distances are bucketed over (0, D/2]; each bucket records half the
    minimum sampled directional increment of V, then a 5% deflation is
    applied (tau only ever needs to be a lower bound).  Buckets with no
    pair take the minimum of their neighbors and are flagged.
    """
    if n_pairs < 10_000:
        raise InvalidProblem("n_pairs must be at least 1e4")
    half = 0.5 * fields.grid.domain.diameter
    edges = np.linspace(0.0, half, N_TAU_BUCKETS + 1)
    i, j = _halton_pairs(len(fields.coords), n_pairs, seed)
    diff = fields.coords[j] - fields.coords[i]
    dist = np.linalg.norm(diff, axis=1)
    unit = diff / dist[:, None]
    incr = np.einsum("nd,nd->n", fields.V[j] - fields.V[i], unit)
    s = 0.5 * dist
    bucket = np.minimum((s / (half / N_TAU_BUCKETS)).astype(int), N_TAU_BUCKETS - 1)
    values = np.full(N_TAU_BUCKETS, np.inf)
    counts = np.zeros(N_TAU_BUCKETS, dtype=int)
    np.minimum.at(values, bucket, 0.5 * incr)
    np.add.at(counts, bucket, 1)
    filled = counts == 0
    if np.any(filled) and np.any(~filled):
        for k in np.nonzero(filled)[0]:
            neigh = [values[m] for m in (k - 1, k + 1)
                     if 0 <= m < N_TAU_BUCKETS and counts[m] > 0]
            values[k] = min(neigh) if neigh else np.inf
        # second sweep for runs of empty buckets
        for k in range(N_TAU_BUCKETS):
            if not np.isfinite(values[k]):
                finite = values[np.isfinite(values)]
                values[k] = float(np.min(finite))
    deflated = values - TAU_DEFLATION * np.abs(values)
    return TauProfile(edges=edges, values=values, deflated=deflated,
                      counts=counts, filled=filled)


def fold_Lambda(Lambda: float, tau: TauProfile) -> float:
    """Fold the negative part of tau into the drift bound:
    Lambda + max(sup -tau, 0); a nonnegative tau leaves Lambda unchanged."""
    if Lambda < 0:
        raise InvalidProblem(f"Lambda must be >= 0, got {Lambda!r}")
    return Lambda + tau.sup_negative


def manufacture_operator(domain: DomainSpec, B: VectorField, u0_field,
                         lambda0: float) -> OperatorSpec:
    """Operator with c chosen so that u0_field solves L u = -lambda0 u exactly.

    c = (Laplacian(u0) - B . grad(u0) + lambda0 u0) / u0 from the closed-form
    derivatives of the prescribed positive u0.
    """

    def c_values(x):
        x = np.atleast_2d(x)
        u = u0_field.value(x)
        return (u0_field.laplacian(x)
                - np.einsum("nd,nd->n", B.value(x), u0_field.gradient(x))
                + lambda0 * u) / u

    return OperatorSpec(domain=domain, B=B,
                        c=CallableScalarField(func=c_values, dim=domain.dim))


def check_laplacian_identity(op: OperatorSpec, u0_field, lambda0: float,
                             h: float, margin: Optional[float] = None) -> float:
    """Max residual of the drift-velocity identity
    Laplacian(Y) = 2 (Y . grad) Y - Y U - V, all second-order differences.

    Every ingredient (Y, its derivatives, U, V) is built by central
    differencing of point values of u0, B and the manufactured c on the
    grid, so the residual measures the identity itself and converges at
    O(h^2) when (u0, lambda0) solve the eigenvalue equation exactly.
    The index convention for the vorticity term follows the identity's
    derivation: residual_j includes + sum_i (d_i b_j - d_j b_i) Y_i.

    The maximum is taken over a fixed region at boundary distance >= margin
    (default 5% of the diameter): for u0 vanishing at the wall, Y grows
    like 1/distance there, and a sup over an h-dependent region would chase
    that growth instead of measuring convergence.
    """
    grid = build_grid(op.domain, h)
    x = grid.nodes
    u0 = u0_field.value(x)
    if margin is None:
        margin = 0.05 * op.domain.diameter
    eval_mask = grid.retained_mask(max(3.0 * grid.h_max, margin))
    if np.any(u0[eval_mask] <= 0.0):
        raise NonPositiveManufacturedSolution(
            "manufactured u0 must be positive on the evaluation region")
    B = op.B.value(x)
    c = op.c.value(x)
    d = grid.dim
    grad_u0 = grid.gradient(u0)
    with np.errstate(invalid="ignore", divide="ignore"):
        Y = -grad_u0 / u0[:, None] + 0.5 * B
    lap_Y = np.column_stack([grid.laplacian(Y[:, j]) for j in range(d)])
    grad_Y = np.stack([grid.gradient(Y[:, j]) for j in range(d)], axis=1)  # (n, j, i)
    adv = np.einsum("ni,nji->nj", Y, grad_Y)
    Jb = np.stack([grid.gradient(B[:, i]) for i in range(d)], axis=1)  # (n, i, j)
    vort = np.einsum("nji,ni->nj", Jb, Y) - np.einsum("nij,ni->nj", Jb, Y)
    grad_c = grid.gradient(c)
    grad_B2 = grid.gradient(np.einsum("nd,nd->n", B, B))
    lap_B = np.column_stack([grid.laplacian(B[:, j]) for j in range(d)])
    V = grad_c + 0.25 * grad_B2 - 0.5 * lap_B
    resid = lap_Y - 2.0 * adv + vort + V
    resid = resid[eval_mask]
    resid = resid[np.all(np.isfinite(resid), axis=1)]
    return float(np.max(np.abs(resid)))


def check_C_nonnegative(fields: DerivedFields, modulus, n_pairs: int,
                        seed: int = 0) -> float:
    """Minimum over sampled interior pairs of
    C(x, y) = (Y(y) - Y(x)) . (y-x)/|y-x| + 2 psi(|y-x|/2).

    `modulus` must expose psi_at; pairs are drawn quasi-randomly from the
    retained nodes (already clear of the boundary layer).  The contract is
    min >= -tol with tol = 10 h (1 + Lambda_tilde + sigma D), accounting
    for the O(h) discretization of Y at the layer edge.
    """
    if fields.Y is None:
        raise MissingEigenfunction("the pair check needs Y, which needs u0")
    i, j = _halton_pairs(len(fields.coords), n_pairs, seed)
    diff = fields.coords[j] - fields.coords[i]
    dist = np.linalg.norm(diff, axis=1)
    unit = diff / dist[:, None]
    incr = np.einsum("nd,nd->n", fields.Y[j] - fields.Y[i], unit)
    vals = incr + 2.0 * modulus.psi_at(0.5 * dist)
    return float(np.min(vals))


def pair_check_tolerance(grid: Grid, Lambda_tilde: float, sigma: float) -> float:
    return 10.0 * grid.h_max * (1.0 + Lambda_tilde + sigma * grid.domain.diameter)


def estimate_K(op: OperatorSpec, grid: Grid) -> float:
    """Max of |dbeta| / dist(., boundary): finite iff the vorticity decays
    at least linearly at the wall (reported, never assumed)."""
    dist = grid.boundary_dist
    keep = dist > 0
    return float(np.max(vorticity_norm(op.B, grid.nodes[keep]) / dist[keep]))


def effective_potential_value(op: OperatorSpec, x: np.ndarray) -> np.ndarray:
    """c - Laplacian(phi)/2 + |grad phi|^2/4 for gradient-drift operators;
    its convexity is what switches the certificate to the sharp branch."""
    if op.phi is None:
        raise InvalidProblem("effective potential needs a gradient drift (phi)")
    x = np.atleast_2d(x)
    gphi = op.phi.value(x)
    return (op.c.value(x) - 0.5 * op.phi.potential_laplacian(x)
            + 0.25 * np.einsum("nd,nd->n", gphi, gphi))
