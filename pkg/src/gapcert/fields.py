"""Coefficient fields for the drift term and the potential.

Built-in fields carry closed-form jacobians/laplacians so the derived
quantities (vorticity, effective convexity field, drift bounds) are exact
pointwise; arbitrary callables are wrapped with central-difference
derivatives instead.  Shapes: `value` maps (n, d) points to (n, d) vectors
or (n,) scalars; `jacobian` returns (n, d, d) with J[:, i, j] = d b_i / d x_j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidProblem


class VectorField:
    """Base drift field; subclasses fill in value/jacobian/laplacian."""

    dim: int
    is_gradient: Optional[bool] = None  # None: unknown

    def value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ScalarField:
    dim: int

    def value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass
class ZeroVectorField(VectorField):
    dim: int = 2
    is_gradient: Optional[bool] = True

    def value(self, x):
        return np.zeros_like(np.atleast_2d(x), dtype=float)

    def jacobian(self, x):
        n, d = np.atleast_2d(x).shape
        return np.zeros((n, d, d))

    def laplacian(self, x):
        return np.zeros_like(np.atleast_2d(x), dtype=float)


@dataclass
class ConstantVectorField(VectorField):
    """Constant drift; the gradient of a linear potential."""

    vec: tuple
    is_gradient: Optional[bool] = True

    def __post_init__(self):
        self.dim = len(self.vec)

    def value(self, x):
        x = np.atleast_2d(x)
        return np.broadcast_to(np.asarray(self.vec, dtype=float), x.shape).copy()

    def jacobian(self, x):
        n = len(np.atleast_2d(x))
        return np.zeros((n, self.dim, self.dim))

    def laplacian(self, x):
        return np.zeros((len(np.atleast_2d(x)), self.dim))


@dataclass
class QuadraticGradientField(VectorField):
    """B = Q x + g with symmetric Q: the gradient of the quadratic
    potential x^T Q x / 2 + g . x."""

    Q: np.ndarray
    g: tuple = None
    is_gradient: Optional[bool] = True

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        if self.Q.ndim != 2 or self.Q.shape[0] != self.Q.shape[1]:
            raise InvalidProblem("Q must be square")
        if not np.allclose(self.Q, self.Q.T, atol=1e-14):
            raise InvalidProblem("Q must be symmetric for a gradient field")
        self.dim = self.Q.shape[0]
        if self.g is None:
            self.g = tuple(0.0 for _ in range(self.dim))

    def value(self, x):
        x = np.atleast_2d(x)
        return x @ self.Q.T + np.asarray(self.g, dtype=float)

    def jacobian(self, x):
        n = len(np.atleast_2d(x))
        return np.broadcast_to(self.Q, (n, self.dim, self.dim)).copy()

    def laplacian(self, x):
        return np.zeros((len(np.atleast_2d(x)), self.dim))

    def potential_value(self, x):
        x = np.atleast_2d(x)
        return 0.5 * np.einsum("ni,ij,nj->n", x, self.Q, x) + x @ np.asarray(self.g)

    def potential_laplacian(self, x):
        return np.full(len(np.atleast_2d(x)), float(np.trace(self.Q)))


@dataclass
class RotationalField(VectorField):
    """Rigid rotation drift omega * (-y, x); constant vorticity."""

    omega: float
    dim: int = 2
    is_gradient: Optional[bool] = False

    def value(self, x):
        x = np.atleast_2d(x)
        return self.omega * np.column_stack([-x[:, 1], x[:, 0]])

    def jacobian(self, x):
        n = len(np.atleast_2d(x))
        J = np.zeros((n, 2, 2))
        J[:, 0, 1] = -self.omega
        J[:, 1, 0] = self.omega
        return J

    def laplacian(self, x):
        return np.zeros((len(np.atleast_2d(x)), 2))


@dataclass
class CutoffRotationalField(VectorField):
    """Rotation omega*(-y, x) cut off smoothly inside radius R0.

    Cutoff chi(t) = (1 - t)^3 with t = r^2/R0^2, so the field is C^2 with
    support strictly inside the disk of radius R0; its vorticity vanishes
    like the cube of the distance to r = R0.
    """

    omega: float
    R0: float
    dim: int = 2
    is_gradient: Optional[bool] = False

    def _t(self, x):
        return (x[:, 0] ** 2 + x[:, 1] ** 2) / self.R0 ** 2

    def _chi(self, t):
        return np.where(t < 1.0, (1.0 - np.minimum(t, 1.0)) ** 3, 0.0)

    def _chi_p(self, t):
        return np.where(t < 1.0, -3.0 * (1.0 - np.minimum(t, 1.0)) ** 2, 0.0)

    def _chi_pp(self, t):
        return np.where(t < 1.0, 6.0 * (1.0 - np.minimum(t, 1.0)), 0.0)

    def value(self, x):
        x = np.atleast_2d(x)
        chi = self._chi(self._t(x))
        return self.omega * np.column_stack([-x[:, 1] * chi, x[:, 0] * chi])

    def jacobian(self, x):
        x = np.atleast_2d(x)
        t = self._t(x)
        chi, chi_p = self._chi(t), self._chi_p(t)
        gx = 2.0 * x[:, 0] / self.R0 ** 2
        gy = 2.0 * x[:, 1] / self.R0 ** 2
        J = np.empty((len(x), 2, 2))
        J[:, 0, 0] = self.omega * (-x[:, 1]) * chi_p * gx
        J[:, 0, 1] = self.omega * ((-x[:, 1]) * chi_p * gy - chi)
        J[:, 1, 0] = self.omega * (x[:, 0] * chi_p * gx + chi)
        J[:, 1, 1] = self.omega * x[:, 0] * chi_p * gy
        return J

    def laplacian(self, x):
        x = np.atleast_2d(x)
        t = self._t(x)
        chi_p, chi_pp = self._chi_p(t), self._chi_pp(t)
        radial = (4.0 * t * chi_pp + 8.0 * chi_p) / self.R0 ** 2
        return self.omega * np.column_stack([-x[:, 1] * radial, x[:, 0] * radial])


@dataclass
class CallableVectorField(VectorField):
    """Wrapper for a user drift callable; derivatives by central differences."""

    func: Callable[[np.ndarray], np.ndarray]
    dim: int = 2
    step: float = 1e-5
    is_gradient: Optional[bool] = None

    def value(self, x):
        return np.asarray(self.func(np.atleast_2d(x)), dtype=float)

    def jacobian(self, x):
        x = np.atleast_2d(x)
        J = np.empty((len(x), self.dim, self.dim))
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = self.step
            J[:, :, j] = (self.value(x + e) - self.value(x - e)) / (2 * self.step)
        return J

    def laplacian(self, x):
        x = np.atleast_2d(x)
        out = np.zeros((len(x), self.dim))
        v0 = self.value(x)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = self.step
            out += (self.value(x + e) - 2 * v0 + self.value(x - e)) / self.step ** 2
        return out


@dataclass
class ZeroScalarField(ScalarField):
    dim: int = 2

    def value(self, x):
        return np.zeros(len(np.atleast_2d(x)))

    def gradient(self, x):
        x = np.atleast_2d(x)
        return np.zeros_like(x, dtype=float)


@dataclass
class ConstantScalarField(ScalarField):
    c0: float
    dim: int = 2

    def value(self, x):
        return np.full(len(np.atleast_2d(x)), float(self.c0))

    def gradient(self, x):
        return np.zeros_like(np.atleast_2d(x), dtype=float)


@dataclass
class QuadraticScalarField(ScalarField):
    """c(x) = x^T A x + b . x + c0 with symmetric A."""

    A: np.ndarray
    b: tuple = None
    c0: float = 0.0

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.dim = self.A.shape[0]
        if self.b is None:
            self.b = tuple(0.0 for _ in range(self.dim))
        if not np.allclose(self.A, self.A.T, atol=1e-14):
            raise InvalidProblem("A must be symmetric")

    def value(self, x):
        x = np.atleast_2d(x)
        return (np.einsum("ni,ij,nj->n", x, self.A, x)
                + x @ np.asarray(self.b) + self.c0)

    def gradient(self, x):
        x = np.atleast_2d(x)
        return 2.0 * (x @ self.A.T) + np.asarray(self.b, dtype=float)


@dataclass
class CallableScalarField(ScalarField):
    func: Callable[[np.ndarray], np.ndarray]
    dim: int = 2
    step: float = 1e-5

    def value(self, x):
        return np.asarray(self.func(np.atleast_2d(x)), dtype=float)

    def gradient(self, x):
        x = np.atleast_2d(x)
        out = np.empty_like(x, dtype=float)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = self.step
            out[:, j] = (self.value(x + e) - self.value(x - e)) / (2 * self.step)
        return out


@dataclass
class GaussianBump(ScalarField):
    """exp(-|x - c|^2 / (2 w^2)): positive everywhere, closed-form derivatives."""

    center: tuple
    width: float

    def __post_init__(self):
        self.dim = len(self.center)

    def value(self, x):
        x = np.atleast_2d(x)
        d2 = np.sum((x - np.asarray(self.center)) ** 2, axis=1)
        return np.exp(-0.5 * d2 / self.width ** 2)

    def gradient(self, x):
        x = np.atleast_2d(x)
        diff = x - np.asarray(self.center)
        return -diff / self.width ** 2 * self.value(x)[:, None]

    def laplacian(self, x):
        x = np.atleast_2d(x)
        d2 = np.sum((x - np.asarray(self.center)) ** 2, axis=1)
        w2 = self.width ** 2
        return self.value(x) * (d2 / w2 - self.dim) / w2


@dataclass
class CosineBump(ScalarField):
    """prod_i cos(pi x_i / L_i): vanishes on the enclosing box boundary."""

    lengths: tuple

    def __post_init__(self):
        self.dim = len(self.lengths)

    def value(self, x):
        x = np.atleast_2d(x)
        out = np.ones(len(x))
        for i, L in enumerate(self.lengths):
            out = out * np.cos(np.pi * x[:, i] / L)
        return out

    def gradient(self, x):
        x = np.atleast_2d(x)
        out = np.empty_like(x, dtype=float)
        val = self.value(x)
        for i, L in enumerate(self.lengths):
            k = np.pi / L
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(np.abs(np.cos(k * x[:, i])) > 1e-300,
                                 np.tan(k * x[:, i]), 0.0)
            out[:, i] = -k * val * ratio
        return out

    def laplacian(self, x):
        k2 = sum((np.pi / L) ** 2 for L in self.lengths)
        return -k2 * self.value(x)


def make_vector_field(name: str, dim: int, **params) -> VectorField:
    """Named drift fields for config files and the CLI."""
    if name == "zero":
        return ZeroVectorField(dim=dim)
    if name == "constant":
        return ConstantVectorField(vec=tuple(params["vec"]))
    if name == "gradient-of-quadratic":
        Q = np.asarray(params["Q"], dtype=float)
        return QuadraticGradientField(Q=Q, g=tuple(params.get("g", (0.0,) * dim)))
    if name == "rotational":
        return RotationalField(omega=float(params["omega"]))
    if name == "cutoff-rotational":
        return CutoffRotationalField(omega=float(params["omega"]), R0=float(params["R0"]))
    raise InvalidProblem(f"unknown drift field {name!r}")


def make_scalar_field(name: str, dim: int, **params) -> ScalarField:
    if name == "zero":
        return ZeroScalarField(dim=dim)
    if name == "constant":
        return ConstantScalarField(c0=float(params["c0"]), dim=dim)
    if name == "quadratic":
        A = np.asarray(params["A"], dtype=float)
        return QuadraticScalarField(A=A, b=tuple(params.get("b", (0.0,) * dim)),
                                    c0=float(params.get("c0", 0.0)))
    raise InvalidProblem(f"unknown scalar field {name!r}")
