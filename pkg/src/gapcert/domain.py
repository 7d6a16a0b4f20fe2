"""Convex domains and uniform tensor grids with exact boundary geometry.

Supported shapes are centred at the origin: interval (length), rectangle
(side lengths), disk (radius) and ellipse (semi-axes).  Boundary distances
and grid-line/boundary intersection fractions are computed from the
analytic description, not from the grid, so cut-cell stencils and
boundary-layer masks carry no extra discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import GridTooCoarse, InvalidProblem

DomainKind = Literal["interval", "rectangle", "disk", "ellipse"]


@dataclass(frozen=True)
class DomainSpec:
    """Convex domain centred at the origin."""

    kind: DomainKind
    params: tuple

    def __post_init__(self):
        if any(p <= 0 for p in self.params):
            raise InvalidProblem(f"domain parameters must be positive: {self.params}")
        n_expected = {"interval": 1, "rectangle": 2, "disk": 1, "ellipse": 2}
        if self.kind not in n_expected:
            raise InvalidProblem(f"unknown domain kind {self.kind!r}")
        if len(self.params) != n_expected[self.kind]:
            raise InvalidProblem(f"{self.kind} takes {n_expected[self.kind]} parameter(s)")

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def diameter(self) -> float:
        if self.kind == "interval":
            return self.params[0]
        if self.kind == "rectangle":
            return float(np.hypot(*self.params))
        if self.kind == "disk":
            return 2.0 * self.params[0]
        return 2.0 * max(self.params)

    @property
    def bounding_half_widths(self) -> tuple:
        if self.kind == "interval":
            return (0.5 * self.params[0],)
        if self.kind == "rectangle":
            return (0.5 * self.params[0], 0.5 * self.params[1])
        if self.kind == "disk":
            return (self.params[0], self.params[0])
        return tuple(self.params)

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points)
        if self.kind == "interval":
            return np.abs(p[:, 0]) < 0.5 * self.params[0]
        if self.kind == "rectangle":
            return ((np.abs(p[:, 0]) < 0.5 * self.params[0])
                    & (np.abs(p[:, 1]) < 0.5 * self.params[1]))
        if self.kind == "disk":
            return np.hypot(p[:, 0], p[:, 1]) < self.params[0]
        a, b = self.params
        return (p[:, 0] / a) ** 2 + (p[:, 1] / b) ** 2 < 1.0

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Exact euclidean distance from interior points to the boundary."""
        p = np.atleast_2d(points)
        if self.kind == "interval":
            return 0.5 * self.params[0] - np.abs(p[:, 0])
        if self.kind == "rectangle":
            return np.minimum(0.5 * self.params[0] - np.abs(p[:, 0]),
                              0.5 * self.params[1] - np.abs(p[:, 1]))
        if self.kind == "disk":
            return self.params[0] - np.hypot(p[:, 0], p[:, 1])
        return _ellipse_distance(p, *self.params)

    def axis_crossing(self, point: np.ndarray, axis: int, direction: int) -> float:
        """Distance from an interior point to the boundary along +/- an axis."""
        if self.kind == "interval":
            return 0.5 * self.params[0] - direction * point[0]
        if self.kind == "rectangle":
            return 0.5 * self.params[axis] - direction * point[axis]
        if self.kind == "disk":
            r = self.params[0]
            other = point[1 - axis]
            return np.sqrt(r * r - other * other) - direction * point[axis]
        a, b = self.params
        semi = (a, b)[axis]
        other = point[1 - axis] / (b, a)[axis]
        return semi * np.sqrt(1.0 - other * other) - direction * point[axis]


def interval(length: float) -> DomainSpec:
    return DomainSpec("interval", (float(length),))


def rectangle(a: float, b: float) -> DomainSpec:
    return DomainSpec("rectangle", (float(a), float(b)))


def square(side: float) -> DomainSpec:
    return rectangle(side, side)


def disk(radius: float) -> DomainSpec:
    return DomainSpec("disk", (float(radius),))


def ellipse(a: float, b: float) -> DomainSpec:
    return DomainSpec("ellipse", (float(a), float(b)))


def _ellipse_distance(p: np.ndarray, a: float, b: float) -> np.ndarray:
    """Distance to the ellipse for interior points, by bisection on the
    foot-point condition in the first quadrant."""
    x = np.abs(p[:, 0])
    y = np.abs(p[:, 1])
    # foot point (a cos t, b sin t); g(t) = (a^2-b^2) cos t sin t - x a sin t + y b cos t
    lo = np.zeros_like(x)
    hi = np.full_like(x, 0.5 * np.pi)

    def g(t):
        return ((a * a - b * b) * np.cos(t) * np.sin(t)
                - x * a * np.sin(t) + y * b * np.cos(t))

    for _ in range(60):
        mid = 0.5 * (lo + hi)
        pick_hi = g(mid) > 0.0
        lo = np.where(pick_hi, mid, lo)
        hi = np.where(pick_hi, hi, mid)
    t = 0.5 * (lo + hi)
    return np.hypot(a * np.cos(t) - x, b * np.sin(t) - y)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform tensor grid of interior nodes with exact boundary arms.

    neighbors[n, axis, side] holds the node index of the (-, +) neighbor or
    -1 when the next grid point in that direction is outside; arms[n, axis,
    side] is then the fraction (0, 1] of the spacing to the boundary along
    that direction (exactly 1.0 for an interior neighbor).
    """

    domain: DomainSpec
    spacing: tuple  # per-axis spacing
    shape: tuple  # per-axis interior grid counts
    nodes: np.ndarray  # (n, d)
    index_map: np.ndarray  # shape -> node index or -1
    neighbors: np.ndarray = field(repr=False)  # (n, d, 2) int
    arms: np.ndarray = field(repr=False)  # (n, d, 2) float
    boundary_dist: np.ndarray = field(repr=False)  # (n,)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def h_max(self) -> float:
        return max(self.spacing)

    def retained_mask(self, layer: float) -> np.ndarray:
        """Nodes at boundary distance >= layer (all have interior neighbors
        once layer >= h, since a neighbor is at most h closer to the wall)."""
        return self.boundary_dist >= layer - 1e-12 * self.h_max

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """Second-order central gradient; NaN where a neighbor is missing."""
        out = np.full((self.n_nodes, self.dim), np.nan)
        for a in range(self.dim):
            left = self.neighbors[:, a, 0]
            right = self.neighbors[:, a, 1]
            ok = (left >= 0) & (right >= 0)
            out[ok, a] = (values[right[ok]] - values[left[ok]]) / (2.0 * self.spacing[a])
        return out

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        """Second-order Laplacian on nodes with full interior stencils."""
        out = np.zeros(self.n_nodes)
        ok = np.ones(self.n_nodes, dtype=bool)
        for a in range(self.dim):
            left = self.neighbors[:, a, 0]
            right = self.neighbors[:, a, 1]
            ok &= (left >= 0) & (right >= 0)
        for a in range(self.dim):
            left = self.neighbors[:, a, 0]
            right = self.neighbors[:, a, 1]
            h2 = self.spacing[a] ** 2
            out[ok] += (values[left[ok]] - 2.0 * values[ok] + values[right[ok]]) / h2
        out[~ok] = np.nan
        return out


def build_grid(domain: DomainSpec, h: float) -> Grid:
    """Interior tensor grid at target spacing h (>= 4 nodes per direction)."""
    if h <= 0:
        raise InvalidProblem(f"grid spacing must be positive, got {h!r}")
    halves = domain.bounding_half_widths
    counts = []
    spacing = []
    axes = []
    for half in halves:
        n = int(round(2.0 * half / h)) - 1
        if n < 4:
            raise GridTooCoarse(f"fewer than 4 interior nodes across width {2*half:g}")
        step = 2.0 * half / (n + 1)
        counts.append(n)
        spacing.append(step)
        axes.append(np.linspace(-half + step, half - step, n))
    shape = tuple(counts)
    if domain.dim == 1:
        pts = axes[0][:, None]
    else:
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = domain.contains(pts)
    index_map = np.full(shape, -1, dtype=int)
    flat_inside = np.nonzero(inside)[0]
    index_map.ravel()[flat_inside] = np.arange(len(flat_inside))
    nodes = pts[inside]

    n_nodes = len(nodes)
    dim = domain.dim
    neighbors = np.full((n_nodes, dim, 2), -1, dtype=int)
    arms = np.ones((n_nodes, dim, 2))
    multi = np.array(np.unravel_index(flat_inside, shape)).T  # (n, dim)
    for a in range(dim):
        for side, direction in ((0, -1), (1, +1)):
            nb = multi.copy()
            nb[:, a] += direction
            valid = (nb[:, a] >= 0) & (nb[:, a] < shape[a])
            nb_idx = np.full(n_nodes, -1, dtype=int)
            if dim == 1:
                nb_idx[valid] = index_map[nb[valid, 0]]
            else:
                nb_idx[valid] = index_map[nb[valid, 0], nb[valid, 1]]
            neighbors[:, a, side] = nb_idx
            cut = nb_idx < 0
            # tensor-aligned walls sit exactly one step beyond the last node,
            # so their arms are exactly 1; only curved boundaries need the
            # crossing computation
            if np.any(cut) and domain.kind not in ("interval", "rectangle"):
                for i in np.nonzero(cut)[0]:
                    dist = domain.axis_crossing(nodes[i], a, direction)
                    # clip: a node microscopically inside must not blow up
                    # the cut-cell stencil
                    arms[i, a, side] = min(max(dist / spacing[a], 1e-6), 1.0)
    return Grid(domain=domain, spacing=tuple(spacing), shape=shape, nodes=nodes,
                index_map=index_map, neighbors=neighbors, arms=arms,
                boundary_dist=domain.boundary_distance(nodes))
