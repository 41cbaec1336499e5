"""Exact-identity verifiers for radial functions on hyperbolic space.

Each verifier evaluates every integral of an identity separately by radial
quadrature and reports the residual between the two sides.  Vector fields are
radial, X = s(rho) grad(rho), so all pointwise quantities are scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .integrate import QuadratureSpec, auto_radius, integrate_radial
from .profiles import RadialProfile, coth, r_coth_minus_one

__all__ = [
    "RadialField",
    "IdentityReport",
    "ParameterError",
    "RegimeError",
    "UndefinedError",
    "remainder_Rp",
    "signed_power",
    "verify_master_identity",
    "verify_bessel_identity",
    "verify_hardy",
    "hardy_ratio",
    "ckn_lambda",
    "verify_ckn",
    "hup_bracket",
    "verify_hup",
    "make_report",
]

EPS = 1e-300
DEFAULT_TOL = 1e-8


class ParameterError(ValueError):
    """Invalid numerical parameter (e.g. p <= 1, lambda <= 0)."""


class RegimeError(ValueError):
    """The (a, b, N) parameters fall outside the selected CKN case."""


class UndefinedError(ValueError):
    """A quantity is undefined for the input (typically the zero function)."""


@dataclass(frozen=True)
class RadialField:
    """The field X = s(rho) grad(rho); its hyperbolic length is |s(rho)|."""

    s: RadialProfile


@dataclass
class IdentityReport:
    name: str
    terms: Dict[str, float]
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    tol: float
    passed: bool
    extra: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "terms": dict(self.terms),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "abs_residual": self.abs_residual,
            "rel_residual": self.rel_residual,
            "tol": self.tol,
            "passed": self.passed,
            "extra": dict(self.extra),
        }


def make_report(name: str, terms: Dict[str, float], lhs: float, rhs: float, tol: float,
                extra: Optional[Dict[str, float]] = None) -> IdentityReport:
    abs_res = abs(lhs - rhs)
    rel = abs_res / (abs(lhs) + abs(rhs) + EPS)
    return IdentityReport(name, {k: float(v) for k, v in terms.items()}, float(lhs), float(rhs),
                          float(abs_res), float(rel), float(tol), bool(rel <= tol), dict(extra or {}))


# ---------------------------------------------------------------------------
# Pointwise remainder
# ---------------------------------------------------------------------------

def signed_power(a, q: float):
    """|a|^{q-1} a, taken as 0 at a = 0."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.abs(a) ** (q - 1.0) * a
    return np.where(a == 0.0, 0.0, out)


def remainder_Rp(a, b, p: float):
    """|b|^p + (p-1)|a|^p - p |a|^{p-2} a b, for collinear radial vectors."""
    if not np.all(np.asarray(p) > 1):
        raise ParameterError(f"remainder requires p > 1, got {p}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.abs(b) ** p + (p - 1.0) * np.abs(a) ** p - p * signed_power(a, p - 1.0) * b
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _spec_for(u: RadialProfile, N: int, quad: Optional[QuadratureSpec]) -> QuadratureSpec:
    quad = quad or QuadratureSpec()
    if quad.truncation_R is not None:
        return quad
    return quad.with_R(auto_radius([u], N))


def _integrator(N: int, spec: QuadratureSpec):
    def I(fn, term):
        return integrate_radial(fn, N, spec, term=term)
    return I


def _is_zero_profile(u: RadialProfile, spec: QuadratureSpec) -> bool:
    r = np.linspace(0.0, spec.truncation_R, 2001)[1:]
    return not np.any(u.f(r))


# ---------------------------------------------------------------------------
# Master identity
# ---------------------------------------------------------------------------

def verify_master_identity(u: RadialProfile, A: RadialProfile, X: RadialField, p: float, lam: float, N: int,
                           quad: Optional[QuadratureSpec] = None, tol: float = DEFAULT_TOL) -> IdentityReport:
    """Weighted Lp identity with remainder for the radial field X = s grad(rho).

    lhs = lam^p int A|u'|^p + (p-1)/lam^{p/(p-1)} int A|u s|^p
    rhs = -int div(A|s|^{p-2}s grad rho)|u|^p + int A R_p(u s / lam^{1/(p-1)}, lam u')
    """
    if not p > 1:
        raise ParameterError("p must exceed 1")
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    spec = _spec_for(u, N, quad)
    I = _integrator(N, spec)
    s = X.s
    q = p - 1.0
    # h = A |s|^{p-2} s, differentiated analytically
    g = s.compose(lambda y: signed_power(y, q),
                  lambda y: q * np.abs(y) ** (q - 1.0),
                  lambda y: q * (q - 1.0) * signed_power(y, q - 1.0),
                  name=f"|.|^{p - 2:g}.")
    h = A * g

    def div_h(r):
        return h.df(r) + (N - 1) * coth(r) * h.f(r)

    up = lambda r: np.abs(u.f(r)) ** p
    grad_term = lam**p * I(lambda r: A.f(r) * np.abs(u.df(r)) ** p, "grad")
    field_term = q / lam ** (p / q) * I(lambda r: A.f(r) * np.abs(u.f(r) * s.f(r)) ** p, "field")
    div_term = -I(lambda r: div_h(r) * up(r), "divergence")
    rem_term = I(lambda r: A.f(r) * remainder_Rp(u.f(r) * s.f(r) / lam ** (1.0 / q), lam * u.df(r), p),
                 "remainder")
    flux = _boundary_flux(lambda r: h.f(r) * up(r), N, spec.truncation_R)
    terms = {"grad": grad_term, "field": field_term, "divergence": div_term, "remainder": rem_term}
    return make_report("master", terms, grad_term + field_term, div_term + rem_term, tol,
                       {"flux_origin": flux[0], "flux_R": flux[1], "p": p, "lambda": lam, "N": N})


def _boundary_flux(F, N: int, R: float):
    """|F| sinh^{N-1} at a point close to 0 and at R (both should vanish)."""
    pts = np.array([1e-8, R])
    with np.errstate(all="ignore"):
        vals = np.abs(np.asarray(F(pts), dtype=float)) * np.sinh(pts) ** (N - 1)
    return float(vals[0]), float(vals[1])


# ---------------------------------------------------------------------------
# Bessel-pair identity and Hardy
# ---------------------------------------------------------------------------

def verify_bessel_identity(V: RadialProfile, W: RadialProfile, phi: RadialProfile, u: RadialProfile, N: int,
                           R: Optional[float] = None, quad: Optional[QuadratureSpec] = None,
                           tol: float = DEFAULT_TOL, pair_tol: float = 1e-8) -> IdentityReport:
    """int V|u'|^2 - int W u^2 = int V phi^2 |(u/phi)'|^2 - (N-1) int V (phi'/phi) (r coth r - 1)/r u^2.

    (V, W) are the reduced weights: the ODE is (r^{N-1} V phi')' + r^{N-1} W phi = 0.
    """
    from .bessel import BesselPair, InvalidPairError, verify_pair

    quad = quad or QuadratureSpec()
    if R is not None:
        spec = quad.with_R(R)
    else:
        spec = _spec_for(u, N, quad)
    R_eff = spec.truncation_R
    grid = np.linspace(min(0.05, R_eff / 10), min(R_eff, 8.0), 400)
    res = verify_pair(BesselPair(V, W, N, (0.0, R_eff)), phi, grid)
    if res > pair_tol:
        raise InvalidPairError(f"Bessel ODE residual {res:.3e} exceeds {pair_tol:.1e}")
    I = _integrator(N, spec)
    log_der = lambda r: phi.df(r) / phi.f(r)
    grad = I(lambda r: V.f(r) * u.df(r) ** 2, "grad")
    pot = I(lambda r: W.f(r) * u.f(r) ** 2, "potential")
    quot = I(lambda r: V.f(r) * (u.df(r) - u.f(r) * log_der(r)) ** 2, "quotient")
    corr = -(N - 1) * I(lambda r: V.f(r) * log_der(r) * r_coth_minus_one(r) / r * u.f(r) ** 2, "curvature")
    terms = {"grad": grad, "potential": pot, "quotient": quot, "curvature": corr}
    return make_report("bessel", terms, grad - pot, quot + corr, tol, {"pair_residual": res, "N": N})


def hardy_ratio(u: RadialProfile, N: int, quad: Optional[QuadratureSpec] = None) -> float:
    """int |grad u|^2 / int u^2/rho^2."""
    spec = _spec_for(u, N, quad)
    I = _integrator(N, spec)
    num = I(lambda r: u.df(r) ** 2, "grad")
    den = I(lambda r: u.f(r) ** 2 / (r * r), "hardy")
    if den == 0:
        raise UndefinedError("Hardy ratio undefined for the zero function")
    return num / den


def verify_hardy(u: RadialProfile, N: int, quad: Optional[QuadratureSpec] = None,
                 tol: float = DEFAULT_TOL) -> IdentityReport:
    """Hardy identity with remainder, via the pair (1, ((N-2)/2)^2 / r^2)."""
    from .bessel import hardy_pair

    pair, phi = hardy_pair(N)
    rep = verify_bessel_identity(pair.V, pair.W, phi, u, N, quad=quad, tol=tol)
    rep.name = "hardy"
    return rep


# ---------------------------------------------------------------------------
# Caffarelli-Kohn-Nirenberg
# ---------------------------------------------------------------------------

_CKN_CASES = ("ineq_c1", "idt_c2", "idt_c3", "idt_c4")


def _ckn_regime(case_id: str, a: float, b: float, N: int) -> bool:
    k = b - a + 1.0
    half = (N - 2) / 2.0
    return {
        "ineq_c1": k > 0 and b <= half,
        "idt_c2": k < 0 and b >= half,
        "idt_c3": k < 0 and b >= half,
        "idt_c4": k > 0 and b >= half,
    }[case_id]


def ckn_lambda(A_w: float, B_w: float, k: float) -> float:
    return (B_w / A_w) ** (1.0 / (2.0 * k))


def verify_ckn(case_id: str, a: float, b: float, u: RadialProfile, N: int,
               quad: Optional[QuadratureSpec] = None, tol: float = DEFAULT_TOL,
               enforce_regime: bool = True) -> IdentityReport:
    """Check one of the four weighted L2 interpolation statements.

    Each case is an identity
        sqrt(A B) - 1/2 int bracket u^2/rho^{a+b+1} = extra + lam^k/2 int rho^{-2b}(u' - s u)^2
    with A = int |u'|^2/rho^{2b}, B = int u^2/rho^{2a}, k = b-a+1 and lam^{2k} = B/A.
    For ``ineq_c1`` the report additionally records the inequality slack
    A B - ((N-1-a-b)^2/4) (int u^2/rho^{a+b+1})^2 in ``extra['slack']``.
    """
    if case_id not in _CKN_CASES:
        raise ParameterError(f"unknown CKN case {case_id!r}")
    k = b - a + 1.0
    if k == 0:
        raise RegimeError("b - a + 1 must be nonzero")
    if enforce_regime and not _ckn_regime(case_id, a, b, N):
        raise RegimeError(f"parameters (a={a}, b={b}, N={N}) violate the regime of {case_id}")
    spec = _spec_for(u, N, quad)
    if _is_zero_profile(u, spec):
        terms = {"A": 0.0, "B": 0.0, "bracket": 0.0, "cross": 0.0, "remainder": 0.0}
        return make_report(f"ckn_{case_id}", terms, 0.0, 0.0, tol, {"slack": 0.0, "lambda": float("nan")})
    I = _integrator(N, spec)
    A_w = I(lambda r: u.df(r) ** 2 * r ** (-2.0 * b), "grad_weighted")
    B_w = I(lambda r: u.f(r) ** 2 * r ** (-2.0 * a), "mass_weighted")
    lam = ckn_lambda(A_w, B_w, k)
    lk = lam**k
    c = N - 2.0 * b - 2.0
    m = a + b + 1.0

    if case_id == "ineq_c1":
        bracket = lambda r: (N - 1 - a - b) + (N - 1) * r_coth_minus_one(r)
        s = lambda r: -(r ** (k - 1.0)) / lk
        use_cross = False
    elif case_id == "idt_c2":
        bracket = lambda r: (a + b - N + 1) - (N - 1) * r_coth_minus_one(r)
        s = lambda r: r ** (k - 1.0) / lk
        use_cross = False
    elif case_id == "idt_c3":
        bracket = lambda r: (N - 3 * b + a - 3) - (N - 1) * r_coth_minus_one(r)
        s = lambda r: r ** (k - 1.0) / lk - c / r
        use_cross = True
    else:
        bracket = lambda r: (3 * b - a - N + 3) + (N - 1) * r_coth_minus_one(r)
        s = lambda r: -(r ** (k - 1.0)) / lk - c / r
        use_cross = True

    brk = 0.5 * I(lambda r: bracket(r) * u.f(r) ** 2 * r ** (-m), "bracket")
    cross = 0.0
    if use_cross:
        cross = 0.5 * lk * c * (N - 1) * I(
            lambda r: r_coth_minus_one(r) * u.f(r) ** 2 * r ** (-2.0 * b - 2.0), "cross")
    rem = 0.5 * lk * I(lambda r: r ** (-2.0 * b) * (u.df(r) - s(r) * u.f(r)) ** 2, "remainder")
    sqrtAB = math.sqrt(A_w * B_w)
    terms = {"A": A_w, "B": B_w, "bracket": brk, "cross": cross, "remainder": rem}
    extra = {"lambda": lam, "k": k, "a": a, "b": b, "N": N, "in_regime": float(_ckn_regime(case_id, a, b, N))}
    if case_id == "ineq_c1":
        plain = I(lambda r: u.f(r) ** 2 * r ** (-m), "plain")
        const = (N - 1 - a - b) ** 2 / 4.0
        lhs_i, rhs_i = A_w * B_w, const * plain**2
        extra["slack"] = lhs_i - rhs_i
        extra["rel_slack"] = (lhs_i - rhs_i) / (abs(lhs_i) + abs(rhs_i) + EPS)
        terms["plain"] = plain
    return make_report(f"ckn_{case_id}", terms, sqrtAB - brk, cross + rem, tol, extra)


# ---------------------------------------------------------------------------
# Heisenberg uncertainty identity
# ---------------------------------------------------------------------------

def hup_bracket(r, N: int):
    """N + (N-1)(r cosh r - sinh r)/sinh r, the divergence of rho grad(rho)."""
    return N + (N - 1) * r_coth_minus_one(r)


def verify_hup(u: RadialProfile, N: int, quad: Optional[QuadratureSpec] = None, tol: float = DEFAULT_TOL):
    """sqrt(A B) = C/2 + (lam^2/2) int e^{-rho^2/lam^2} |grad(u e^{rho^2/(2 lam^2)})|^2.

    Returns ``(report, lambda_opt, deficit1)`` with deficit1 = sqrt(AB) - C/2.
    The remainder is integrated as (lam^2/2) int (u' + rho u / lam^2)^2, which is
    the same integrand with the exponentials cancelled.
    """
    spec = _spec_for(u, N, quad)
    I = _integrator(N, spec)
    A = I(lambda r: u.df(r) ** 2, "grad")
    B = I(lambda r: r * r * u.f(r) ** 2, "moment")
    if A == 0.0 or B == 0.0:
        raise UndefinedError("optimal scale undefined for the zero function")
    C = I(lambda r: hup_bracket(r, N) * u.f(r) ** 2, "bracket")
    lam = (B / A) ** 0.25
    l2 = lam * lam
    rem = 0.5 * l2 * I(lambda r: (u.df(r) + r * u.f(r) / l2) ** 2, "remainder")
    sqrtAB = math.sqrt(A * B)
    deficit1 = sqrtAB - 0.5 * C
    rep = make_report("hup", {"A": A, "B": B, "C": C, "remainder": rem}, sqrtAB, 0.5 * C + rem, tol,
                      {"lambda_opt": lam, "deficit1": deficit1, "N": N})
    rep.extra["deficit_residual"] = abs(deficit1 - rem)
    return rep, lam, deficit1
