"""Poincare ball model of hyperbolic space: distances and radial calculus.

Points live in the open unit ball of R^N with metric (2/(1-|x|^2))^2 dx^2.
Radial functions are functions of rho(x) = log((1+|x|)/(1-|x|)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .profiles import RadialProfile, coth

__all__ = [
    "BallPoint",
    "TangentVector",
    "GeometryError",
    "SingularOriginError",
    "rho",
    "rho_from_norm",
    "norm_from_rho",
    "geodesic_distance",
    "grad_radial",
    "laplace_beltrami",
    "laplace_beltrami_coordinates",
    "div_radial_field",
    "christoffel",
    "coordinate_hessian",
    "metric_normalized_eigenvalues",
    "jacobi_eigenvalues",
    "conformal_factor",
]


class GeometryError(ValueError):
    """Invalid point, dimension mismatch, or domain violation."""


class SingularOriginError(GeometryError):
    """A polar-form operator was evaluated at the origin without a smooth limit."""


@dataclass(frozen=True)
class BallPoint:
    """A point of the Poincare ball; ``coords`` must have Euclidean norm < 1."""

    coords: tuple
    dim: int

    def __init__(self, coords: Sequence[float], dim: int | None = None):
        c = tuple(float(v) for v in coords)
        d = len(c) if dim is None else int(dim)
        if d != len(c):
            raise GeometryError(f"dim={d} but {len(c)} coordinates given")
        if d < 2:
            raise GeometryError("dimension must be at least 2")
        if not all(math.isfinite(v) for v in c):
            raise GeometryError("coordinates must be finite")
        if sum(v * v for v in c) >= 1.0:
            raise GeometryError("point must satisfy |x| < 1")
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "dim", d)

    @property
    def x(self) -> np.ndarray:
        return np.array(self.coords)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.coords))

    @classmethod
    def radial(cls, rho_value: float, direction: Sequence[float]) -> "BallPoint":
        """The point at geodesic distance ``rho_value`` along ``direction``."""
        d = np.asarray(direction, dtype=float)
        n = np.linalg.norm(d)
        if n == 0:
            raise GeometryError("direction must be nonzero")
        return cls(norm_from_rho(rho_value) * d / n)


@dataclass(frozen=True)
class TangentVector:
    """Euclidean components of a tangent vector at ``base``."""

    base: BallPoint
    comps: tuple

    @property
    def hyperbolic_norm(self) -> float:
        t2 = self.base.norm ** 2
        return 2.0 / (1.0 - t2) * math.sqrt(sum(c * c for c in self.comps))


def conformal_factor(t):
    """2 / (1 - t^2) for t = |x|."""
    t = np.asarray(t, dtype=float)
    return 2.0 / (1.0 - t * t)


def rho_from_norm(t):
    """Geodesic distance to the origin for Euclidean norm t in [0, 1)."""
    return 2.0 * np.arctanh(np.asarray(t, dtype=float))


def norm_from_rho(r):
    return np.tanh(np.asarray(r, dtype=float) / 2.0)


def rho(x: BallPoint) -> float:
    return float(rho_from_norm(x.norm))


def geodesic_distance(x: BallPoint, y: BallPoint) -> float:
    if x.dim != y.dim:
        raise GeometryError(f"dimension mismatch: {x.dim} vs {y.dim}")
    a, b = x.x, y.x
    diff2 = float(np.dot(a - b, a - b))
    if diff2 == 0.0:
        return 0.0
    q = 2.0 * diff2 / ((1.0 - a @ a) * (1.0 - b @ b))
    # arccosh(1+q) = log1p(q + sqrt(q(q+2))), accurate for small q
    return float(np.log1p(q + math.sqrt(q * (q + 2.0))))


def _has_flat_origin(u: RadialProfile, tol: float = 1e-14) -> bool:
    return abs(float(u.d(0.0))) <= tol


def grad_radial(u: RadialProfile, x: BallPoint) -> TangentVector:
    t = x.norm
    if t == 0.0:
        if _has_flat_origin(u):
            return TangentVector(x, tuple(0.0 for _ in range(x.dim)))
        raise SingularOriginError("gradient of a radial profile with u'(0) != 0 is undefined at the origin")
    du = float(u.d(rho(x)))
    comps = du * (1.0 - t * t) / 2.0 * x.x / t
    return TangentVector(x, tuple(float(c) for c in comps))


def laplace_beltrami(u: RadialProfile, x: BallPoint) -> float:
    r = rho(x)
    if r == 0.0:
        if _has_flat_origin(u):
            return float(x.dim * u.dd(0.0))
        raise SingularOriginError("Laplacian of a radial profile with u'(0) != 0 is undefined at the origin")
    return float(u.dd(r) + (x.dim - 1) * coth(r) * u.d(r))


def laplace_beltrami_coordinates(u: RadialProfile, x: BallPoint, h: float = 1e-4) -> float:
    """Coordinate form of the Laplacian evaluated by central differences.

    Uses Delta = ((1-|x|^2)/2)^2 Delta_E + (N-2)((1-|x|^2)/2) x . grad_E.
    Independent of the polar formula; used as a cross-check.
    """
    X = x.x
    N = x.dim

    def F(p):
        return float(u(rho_from_norm(np.linalg.norm(p))))

    f0 = F(X)
    lap, grad = 0.0, np.zeros(N)
    for i in range(N):
        e = np.zeros(N)
        e[i] = h
        fp, fm = F(X + e), F(X - e)
        lap += (fp - 2.0 * f0 + fm) / (h * h)
        grad[i] = (fp - fm) / (2.0 * h)
    a = (1.0 - X @ X) / 2.0
    return a * a * lap + (N - 2) * a * float(X @ grad)


def div_radial_field(h: RadialProfile, x: BallPoint) -> float:
    """Divergence of the field h(rho) grad(rho)."""
    r = rho(x)
    if r == 0.0:
        raise SingularOriginError("divergence of a radial field is evaluated in polar form; origin excluded")
    return float(h.d(r) + (x.dim - 1) * coth(r) * h(r))


def christoffel(x: BallPoint) -> np.ndarray:
    """Gamma[k, i, j] for the ball metric."""
    X = x.x
    N = x.dim
    I = np.eye(N)
    c = 2.0 / (1.0 - X @ X)
    # Gamma^k_ij = c (delta_jk x_i + delta_ki x_j - delta_ij x_k)
    G = c * (np.einsum("jk,i->kij", I, X) + np.einsum("ki,j->kij", I, X) - np.einsum("ij,k->kij", I, X))
    return G


def coordinate_hessian(v: RadialProfile, x: BallPoint) -> np.ndarray:
    """Riemannian Hessian of v(rho(x)) in ball coordinates (N x N)."""
    t = x.norm
    if t == 0.0:
        raise SingularOriginError("coordinate Hessian is evaluated in polar form; origin excluded")
    X = x.x
    N = x.dim
    r = float(rho_from_norm(t))
    d1, d2 = float(v.d(r)), float(v.dd(r))
    s = t - t**3
    drho = 2.0 * X / s                                   # Euclidean gradient of rho
    ddrho = 2.0 * np.eye(N) / s - 2.0 * (1.0 - 3.0 * t * t) / (s * s * t) * np.outer(X, X)
    grad_v = d1 * drho
    hess_e = d2 * np.outer(drho, drho) + d1 * ddrho
    G = christoffel(x)
    return hess_e - np.einsum("kij,k->ij", G, grad_v)


def jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(A, dtype=float, copy=True)
    n = a.shape[0]
    if a.shape != (n, n):
        raise GeometryError("matrix must be square")
    a = 0.5 * (a + a.T)
    scale = max(np.max(np.abs(a)), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum((a - np.diag(np.diag(a))) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:  # theta^2 would overflow; tan ~ 1/(2 theta)
                    tt = 0.5 / theta
                else:
                    tt = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(tt * tt + 1.0)
                s = tt * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def metric_normalized_eigenvalues(H: np.ndarray, x: BallPoint) -> np.ndarray:
    """Generalized eigenvalues of H with respect to g = (2/(1-|x|^2))^2 Id."""
    g = conformal_factor(x.norm) ** 2
    return jacobi_eigenvalues(H / g)
