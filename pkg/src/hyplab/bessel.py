"""Bessel pairs: the ODE (r^{N-1} V phi')' + r^{N-1} W phi = 0.

``V`` and ``W`` are stored in reduced form, i.e. without the r^{N-1} factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .profiles import RadialProfile, constant, gaussian, power

__all__ = [
    "BesselPair",
    "InvalidPairError",
    "PositivityError",
    "DegenerateCoefficientError",
    "StiffnessError",
    "verify_pair",
    "solve_bessel_ode",
    "integrate_bessel_system",
    "hardy_pair",
    "gaussian_pair",
]


class InvalidPairError(ValueError):
    """The candidate does not solve the Bessel ODE to the required accuracy."""


class PositivityError(ValueError):
    """The candidate solution is not positive on the grid."""


class DegenerateCoefficientError(ValueError):
    """V vanishes (or is negative) on the integration interval."""


class StiffnessError(ArithmeticError):
    """The adaptive step size underflowed."""


@dataclass(frozen=True)
class BesselPair:
    V: RadialProfile
    W: RadialProfile
    N: int
    interval: Tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        hi = self.interval[1] if math.isfinite(self.interval[1]) else 10.0
        probe = np.linspace(max(self.interval[0], 1e-3), hi, 200)
        if np.any(self.V.f(probe) < 0):
            raise ValueError("V must be nonnegative")


def hardy_pair(N: int) -> Tuple[BesselPair, RadialProfile]:
    """(V, W) = (1, ((N-2)/2)^2 / r^2) with phi = r^{-(N-2)/2}."""
    c = ((N - 2) / 2.0) ** 2
    return BesselPair(constant(1.0), power(-2.0, c), N), power(-(N - 2) / 2.0)


def gaussian_pair(N: int) -> Tuple[BesselPair, RadialProfile]:
    """(V, W) = (1, N - r^2) with phi = e^{-r^2/2}."""
    return BesselPair(constant(1.0), constant(float(N)) + power(2.0, -1.0), N), gaussian(0.5)


def verify_pair(pair: BesselPair, phi: RadialProfile, grid) -> float:
    """max |(r^{N-1} V phi')' + r^{N-1} W phi| / (1 + |r^{N-1} W phi|) over the grid."""
    r = np.asarray(grid, dtype=float)
    N = pair.N
    ph, dph, ddph = phi.f(r), phi.df(r), phi.ddf(r)
    if np.any(ph <= 0):
        raise PositivityError("phi must be positive on the grid")
    V, dV, W = pair.V.f(r), pair.V.df(r), pair.W.f(r)
    rn = r ** (N - 1)
    flux_der = (N - 1) * r ** (N - 2) * V * dph + rn * dV * dph + rn * V * ddph
    src = rn * W * ph
    return float(np.max(np.abs(flux_der + src) / (1.0 + np.abs(src))))


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _rhs_factory(pair: BesselPair):
    N = pair.N

    def rhs(r, y):
        rn = r ** (N - 1)
        Vr = float(pair.V(r))
        if Vr <= 0:
            raise DegenerateCoefficientError(f"V({r:.6g}) = {Vr:.3g} is not positive")
        return np.array([y[1] / (rn * Vr), -rn * float(pair.W(r)) * y[0]])

    return rhs


def _dp_step(rhs, r, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(rhs(r + _C[i] * h, yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, ks))
    y4 = y + h * sum(b * k for b, k in zip(_B4, ks))
    return y5, y4, ks[-1]


def integrate_bessel_system(pair: BesselPair, r0: float, phi0: float, dphi0: float, r_end: float,
                            step_tol: float = 1e-10, fixed_step: float | None = None, max_step: float | None = None):
    """Integrate (phi, psi = r^{N-1} V phi') from r0 to r_end.

    Adaptive Dormand-Prince 5(4) with per-step relative error <= step_tol, or a
    fixed step when ``fixed_step`` is given.  ``r_end < r0`` integrates toward
    the origin, which is the stable direction for a recessive (decaying)
    solution.  Returns arrays (r, phi, psi) in integration order.
    """
    if not (r0 > 0 and r_end > 0 and r_end != r0):
        raise ValueError("need r0, r_end > 0 and r0 != r_end")
    sgn = 1.0 if r_end > r0 else -1.0
    span = abs(r_end - r0)
    probe = np.linspace(r0, r_end, 400)
    if np.any(pair.V.f(probe) <= 0):
        raise DegenerateCoefficientError("V vanishes on the integration interval")
    rhs = _rhs_factory(pair)
    N = pair.N
    y = np.array([float(phi0), r0 ** (N - 1) * float(pair.V(r0)) * float(dphi0)])
    r = float(r0)
    rs, ys = [r], [y.copy()]
    k1 = rhs(r, y)
    hmax = max_step if max_step is not None else span / 200.0
    if fixed_step is not None:
        n = max(1, int(math.ceil(span / fixed_step - 1e-9)))
        h = sgn * span / n
        for _ in range(n):
            y, _, k1 = _dp_step(rhs, r, y, h, k1)
            r += h
            rs.append(r)
            ys.append(y.copy())
        rs[-1] = float(r_end)
        return np.array(rs), np.array(ys)[:, 0], np.array(ys)[:, 1]
    h = min(hmax, 1e-3 * span)
    while sgn * (r_end - r) > 0:
        h = min(h, abs(r_end - r))
        y5, y4, k7 = _dp_step(rhs, r, y, sgn * h, k1)
        scale = np.maximum(np.maximum(np.abs(y), np.abs(y5)), 1e-300)
        err = float(np.max(np.abs(y5 - y4) / scale))
        if err <= step_tol:
            r = r + sgn * h if abs(r_end - r) > h else float(r_end)
            y, k1 = y5, k7
            rs.append(r)
            ys.append(y.copy())
        fac = 0.9 * (step_tol / err) ** 0.2 if err > 0 else 5.0
        h = min(hmax, h * min(5.0, max(0.2, fac)))
        if h < 1e-14 * max(1.0, r):
            raise StiffnessError(f"step size underflow at r = {r:.6g}")
    return np.array(rs), np.array(ys)[:, 0], np.array(ys)[:, 1]


def _hermite(x, x0, x1, y0, y1, d0, d1):
    h = x1 - x0
    t = (x - x0) / h
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def solve_bessel_ode(pair: BesselPair, r0: float, phi0: float, dphi0: float, r_end: float,
                     step_tol: float = 1e-10, fixed_step: float | None = None,
                     max_step: float | None = None) -> RadialProfile:
    """Numerical solution as a profile between r0 and r_end (NaN outside).

    phi and psi are interpolated by cubic Hermite polynomials using the stored
    derivatives; phi' = psi / (r^{N-1} V) and phi'' follows from the ODE.
    """
    rs, ph, ps = integrate_bessel_system(pair, r0, phi0, dphi0, r_end, step_tol, fixed_step, max_step)
    if rs[0] > rs[-1]:
        rs, ph, ps = rs[::-1], ph[::-1], ps[::-1]
    N = pair.N
    rn = rs ** (N - 1)
    Vn = pair.V.f(rs) * np.ones_like(rs)
    dph = ps / (rn * Vn)
    dps = -rn * pair.W.f(rs) * ph

    def _locate(r):
        r = np.asarray(r, dtype=float)
        idx = np.clip(np.searchsorted(rs, r, side="right") - 1, 0, len(rs) - 2)
        inside = (r >= rs[0] - 1e-12) & (r <= rs[-1] + 1e-12)
        return r, idx, inside

    def f(r):
        r, i, ok = _locate(r)
        v = _hermite(r, rs[i], rs[i + 1], ph[i], ph[i + 1], dph[i], dph[i + 1])
        return np.where(ok, v, np.nan)

    def psi(r):
        r, i, ok = _locate(r)
        v = _hermite(r, rs[i], rs[i + 1], ps[i], ps[i + 1], dps[i], dps[i + 1])
        return np.where(ok, v, np.nan)

    def df(r):
        r = np.asarray(r, dtype=float)
        return psi(r) / (r ** (N - 1) * pair.V.f(r))

    def ddf(r):
        r = np.asarray(r, dtype=float)
        V = pair.V.f(r)
        return -pair.W.f(r) * f(r) - ((N - 1) / r + pair.V.df(r) / V) * df(r)

    return RadialProfile(f, df, ddf, support_hint=None, envelope=None, name=f"bessel_solution(N={N})")
