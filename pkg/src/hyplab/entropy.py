"""Gaussian probability measures on H^N, entropy and the U-bound estimates.

    d mu = e^{-beta rho^2} / G dV,    G = int e^{-beta rho^2} dV.

All integrands are radial; gradients reduce to |u'(rho)|.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .identity import UndefinedError
from .integrate import DivergentIntegralError, QuadratureSpec, integrate_radial, truncation_radius
from .profiles import RadialProfile, coth

__all__ = [
    "GaussianMeasure",
    "UBoundConfig",
    "UBoundReport",
    "make_measure",
    "entropy",
    "entropy_ratio",
    "ubound_L1",
    "ubound_L1_constants",
    "ubound_L2",
    "ubound_L2_constants",
    "ls_scan",
    "recentering_check",
]

log = logging.getLogger(__name__)

_TAIL_TOL = 1e-20


@dataclass(frozen=True)
class GaussianMeasure:
    beta: float
    N: int
    G: float
    R: float
    mass: float
    spec: QuadratureSpec = field(repr=False, default=QuadratureSpec())

    def radius_for(self, u: Optional[RadialProfile] = None) -> float:
        """Truncation radius for int F(u) d mu with F at most quadratic in (u, u', rho u)."""
        if u is None or u.envelope is None:
            return self.R
        env = u.envelope
        b = self.beta
        return max(self.R, truncation_radius(lambda r: env(r) ** 2 * (1 + r) ** 8 * np.exp(-b * r * r),
                                             self.N, _TAIL_TOL))

    def integrate(self, fn, u: Optional[RadialProfile] = None, term: Optional[str] = None) -> float:
        """int fn d mu."""
        spec = self.spec.with_R(self.radius_for(u))
        b = self.beta
        return integrate_radial(lambda r: fn(r) * np.exp(-b * r * r), self.N, spec, term) / self.G


def make_measure(beta: float, N: int, quad: Optional[QuadratureSpec] = None) -> GaussianMeasure:
    """Normalise e^{-beta rho^2}; the total mass is re-integrated on a doubled panel grid."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    if N < 2:
        raise ValueError("N must be >= 2")
    quad = quad or QuadratureSpec()
    R = quad.truncation_R or truncation_radius(lambda r: (1 + r) ** 8 * np.exp(-beta * r * r), N, _TAIL_TOL)
    spec = quad.with_R(R)
    G = integrate_radial(lambda r: np.exp(-beta * r * r), N, spec, "normalisation")
    if not (G > 0 and math.isfinite(G)):
        raise DivergentIntegralError("normalisation constant is not finite and positive", "normalisation")
    fine = QuadratureSpec(R, 2 * spec.panels, spec.nodes_per_panel, spec.rel_tol,
                          spec.grading_levels, spec.grading_ratio)
    mass = integrate_radial(lambda r: np.exp(-beta * r * r) / G, N, fine, "mass")
    return GaussianMeasure(float(beta), int(N), float(G), float(R), float(mass), spec)


# ---------------------------------------------------------------------------
# Entropy
# ---------------------------------------------------------------------------

def _nodes_constant(u: RadialProfile, R: float) -> bool:
    r = np.linspace(0.0, R, 4001)
    v = u.f(r) ** 2
    return bool(np.all(v == v[0]))


def _xlogx_ratio(v, s):
    """v log(v / s) with 0 log 0 = 0."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    nz = v > 0
    out[nz] = v[nz] * np.log(v[nz] / s)
    return out


def _with_quad(m: GaussianMeasure, quad: Optional[QuadratureSpec]) -> GaussianMeasure:
    return m if quad is None else replace(m, spec=quad)


def entropy(u: RadialProfile, m: GaussianMeasure, quad: Optional[QuadratureSpec] = None) -> float:
    """Ent_mu(u^2) = int u^2 log(u^2 / int u^2 d mu) d mu."""
    m = _with_quad(m, quad)
    s = m.integrate(lambda r: u.f(r) ** 2, u, "l2")
    if s == 0.0:
        raise UndefinedError("entropy of the zero function is undefined")
    if _nodes_constant(u, m.radius_for(u)):
        return 0.0
    return m.integrate(lambda r: _xlogx_ratio(u.f(r) ** 2, s), u, "entropy")


def entropy_ratio(u: RadialProfile, m: GaussianMeasure, quad: Optional[QuadratureSpec] = None) -> Tuple[float, float, float]:
    """(ent, dirichlet, ent / dirichlet); the ratio is NaN for 0/0 and +inf if only dirichlet vanishes."""
    m = _with_quad(m, quad)
    ent = entropy(u, m)
    dir_ = m.integrate(lambda r: u.df(r) ** 2, u, "dirichlet")
    if dir_ == 0.0:
        return ent, 0.0, (float("nan") if ent == 0.0 else float("inf"))
    return ent, dir_, ent / dir_


def ls_scan(family: Union[Dict[str, RadialProfile], Sequence[RadialProfile]], m: GaussianMeasure,
            quad: Optional[QuadratureSpec] = None) -> Tuple[float, Optional[str]]:
    """Largest entropy/energy ratio over the family: an empirical lower bound on LS(beta).

    0/0 members (constants) are skipped by convention.  Members that raise
    are skipped with a warning; if every member raised, the last error is re-raised.
    """
    m = _with_quad(m, quad)
    items = list(family.items()) if isinstance(family, dict) else [(p.name, p) for p in family]
    if not items:
        raise ValueError("family must be nonempty")
    best, arg, errors = 0.0, None, []
    for pid, u in items:
        try:
            _, _, ratio = entropy_ratio(u, m)
        except (UndefinedError, DivergentIntegralError, ValueError) as exc:
            log.warning("ls_scan: skipping %s (%s)", pid, exc)
            errors.append(exc)
            continue
        if math.isnan(ratio):
            continue
        if math.isinf(ratio):
            raise ArithmeticError(f"positive entropy with zero energy for {pid}")
        if ratio > best or arg is None:
            best, arg = max(best, ratio), pid
    if len(errors) == len(items):
        raise errors[-1]
    return best, arg


def recentering_check(u: RadialProfile, m: GaussianMeasure, quad: Optional[QuadratureSpec] = None) -> Dict[str, float]:
    """Ent(u^2) <= Ent((u - mean)^2) + 2 int (u - mean)^2 d mu."""
    m = _with_quad(m, quad)
    mean = m.integrate(lambda r: u.f(r), u, "mean")
    ent = entropy(u, m)
    var = m.integrate(lambda r: (u.f(r) - mean) ** 2, u, "variance")
    ent_c = 0.0 if var == 0.0 else m.integrate(
        lambda r: _xlogx_ratio((u.f(r) - mean) ** 2, var), u, "entropy_centred")
    rhs = ent_c + 2.0 * var
    return {"ent": ent, "ent_centered": ent_c, "variance": var, "mean": mean, "rhs": rhs,
            "margin": rhs - ent, "passed": float(rhs - ent >= -1e-10 * max(1.0, abs(ent)))}


# ---------------------------------------------------------------------------
# U-bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UBoundConfig:
    """Free parameters of the L2 U-bound.

    ``alpha2`` and ``gamma2`` are multiples of the L1 constants (D, C) that
    enter the absorption; the defaults 4 and 4 give an absorbed fraction of 3/8.
    """

    alpha2_factor: float = 4.0
    gamma2_factor: float = 4.0


@dataclass
class UBoundReport:
    name: str
    lhs: float
    rhs: float
    constants: Dict[str, float]
    terms: Dict[str, float]
    case: str = "general"

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -1e-10 * max(1.0, abs(self.lhs))

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
                "passed": self.passed, "case": self.case, "constants": dict(self.constants),
                "terms": dict(self.terms)}


def ubound_L1_constants(beta: float, N: int) -> Dict[str, float]:
    """C1 = 1/(2 beta); first-case D = (N-1)coth(1)/(2 beta); general D1 = 2 + C1 + D."""
    C1 = 1.0 / (2.0 * beta)
    D = (N - 1) * float(coth(1.0)) / (2.0 * beta)
    return {"C1": C1, "D_first": D, "D1": 2.0 + C1 + D}


def _vanishes_on_unit_ball(f: RadialProfile) -> bool:
    r = np.linspace(0.0, 1.0, 2001)[:-1]
    return not np.any(f.f(r))


def ubound_L1(f: RadialProfile, m: GaussianMeasure, quad: Optional[QuadratureSpec] = None) -> Dict[str, UBoundReport]:
    """int |f| rho d mu <= C1 int |f'| d mu + D int |f| d mu.

    Always reports the general case; adds the sharper first case when f
    vanishes on the unit ball.
    """
    m = _with_quad(m, quad)
    k = ubound_L1_constants(m.beta, m.N)
    lhs = m.integrate(lambda r: np.abs(f.f(r)) * r, f, "moment1")
    grad = m.integrate(lambda r: np.abs(f.df(r)), f, "grad1")
    mass = m.integrate(lambda r: np.abs(f.f(r)), f, "l1")
    terms = {"f_rho": lhs, "grad": grad, "f": mass}
    out = {"general": UBoundReport("ubound_L1", lhs, k["C1"] * grad + k["D1"] * mass,
                                   {"C1": k["C1"], "D1": k["D1"]}, terms, "general")}
    if _vanishes_on_unit_ball(f):
        out["first"] = UBoundReport("ubound_L1", lhs, k["C1"] * grad + k["D_first"] * mass,
                                    {"C1": k["C1"], "D": k["D_first"]}, terms, "first")
    return out


def ubound_L2_constants(beta: float, N: int, config: UBoundConfig = UBoundConfig()) -> Dict[str, float]:
    """(C2, D2) from the absorption argument applied to f = u^2 max(1, rho).

    The L1 bound for rho_1 = max(1, rho) <= 1 + rho holds with (C, D) = (C1, D1 + 1).
    With theta = C/gamma^2 + D/(2 alpha^2) < 1:
        C2 = C gamma^2 / (1 - theta),   D2 = (C + D alpha^2 / 2) / (1 - theta).
    """
    k = ubound_L1_constants(beta, N)
    C, D = k["C1"], k["D1"] + 1.0
    alpha2 = config.alpha2_factor * D
    gamma2 = config.gamma2_factor * C
    theta = C / gamma2 + D / (2.0 * alpha2)
    if theta >= 1.0:
        raise ValueError(f"absorption fails: theta = {theta:.3g} >= 1")
    return {"C": C, "D": D, "alpha2": alpha2, "gamma2": gamma2, "theta": theta,
            "C2": C * gamma2 / (1.0 - theta), "D2": (C + D * alpha2 / 2.0) / (1.0 - theta)}


def ubound_L2(u: RadialProfile, m: GaussianMeasure, quad: Optional[QuadratureSpec] = None,
              config: UBoundConfig = UBoundConfig()) -> UBoundReport:
    """int rho^2 u^2 d mu <= C2 int |u'|^2 d mu + D2 int u^2 d mu."""
    m = _with_quad(m, quad)
    k = ubound_L2_constants(m.beta, m.N, config)
    lhs = m.integrate(lambda r: r * r * u.f(r) ** 2, u, "moment2")
    grad = m.integrate(lambda r: u.df(r) ** 2, u, "grad2")
    l2 = m.integrate(lambda r: u.f(r) ** 2, u, "l2")
    return UBoundReport("ubound_L2", lhs, k["C2"] * grad + k["D2"] * l2, k,
                        {"rho2_u2": lhs, "grad": grad, "u2": l2})
