"""Uncertainty-principle deficits and their stability with respect to Gaussians.

The deficits are

    delta1 = sqrt(A B) - C/2,     delta2 = A B - C^2/4 = delta1 (delta1 + C),

with A = int |grad u|^2, B = int rho^2 u^2 and C = int (N + (N-1)(rho coth rho - 1)) u^2.
Distances to the Gaussian family c e^{-alpha rho^2} are computed with the
optimal c in closed form and a one-dimensional search over alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .identity import IdentityReport, UndefinedError, hup_bracket, make_report
from .integrate import QuadratureSpec, auto_radius, integrate_radial, radial_nodes, sphere_area
from .profiles import RadialProfile, r_coth_minus_one, r_over_sinh
from .spectral import (ScanResult, SpectralConfig, WeightFamily, poincare_constant_scan,
                       sturm_liouville_gap)

__all__ = [
    "GaussianCandidate",
    "DeficitReport",
    "IncompleteScanError",
    "deficits",
    "delta1_tilde_direct",
    "gaussian_distance",
    "in_A_beta",
    "ChainCheck",
    "ChainReport",
    "KTable",
    "build_k_table",
    "verify_stability_chain",
    "scale_noninvariant_check",
    "mass_weight",
]

WEIGHT_TAGS = ("unit", "M")
DEFAULT_ALPHA_BRACKET = (1e-3, 1e3)
_GOLDEN_ITERS = 60
_COARSE_POINTS = 41
_LOG_HUGE = 600.0          # ||g||^2 above e^600 counts as infinite: the projection is then 0
_LOG_OVERFLOW = 650.0     # sinh^{N-1}(R) must stay representable
_BOUNDARY_REL = 1e-9       # relative slack of the A_beta membership test


class IncompleteScanError(ValueError):
    """The supplied K table does not cover the scale range a chain needs."""


@dataclass(frozen=True)
class GaussianCandidate:
    """c e^{-alpha rho^2}; ``at_boundary`` marks a minimiser on the edge of the search bracket."""

    c: float
    alpha: float
    at_boundary: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def profile(self) -> RadialProfile:
        from .profiles import gaussian
        return gaussian(self.alpha, self.c)


@dataclass
class DeficitReport:
    A: float
    B: float
    C: float
    delta1: float
    delta2: float
    delta1_tilde: float
    lambda_opt: float
    d1: float
    argmin: Optional[GaussianCandidate]
    weight_tag: str
    delta1_tilde_direct: float = float("nan")

    @property
    def delta1_tilde_residual(self) -> float:
        return abs(self.delta1_tilde - self.delta1_tilde_direct)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["argmin"] = None if self.argmin is None else dict(self.argmin.__dict__)
        d["delta1_tilde_residual"] = self.delta1_tilde_residual
        return d


def mass_weight(r, N: int):
    """(1 - tanh^2(r/2))^N = cosh^{-2N}(r/2)."""
    return np.cosh(np.asarray(r, dtype=float) / 2.0) ** (-2.0 * N)


def _weight_fn(tag: str, N: int):
    if tag == "unit":
        return lambda r: np.ones_like(np.asarray(r, dtype=float))
    if tag == "M":
        return lambda r: mass_weight(r, N)
    raise ValueError(f"unknown weight tag {tag!r}")


def _spec(u: RadialProfile, N: int, quad: Optional[QuadratureSpec]) -> QuadratureSpec:
    quad = quad or QuadratureSpec()
    return quad if quad.truncation_R is not None else quad.with_R(auto_radius([u], N))


def _moments(u: RadialProfile, N: int, spec: QuadratureSpec) -> Tuple[float, float, float]:
    A = integrate_radial(lambda r: u.df(r) ** 2, N, spec, "grad")
    B = integrate_radial(lambda r: r * r * u.f(r) ** 2, N, spec, "moment")
    C = integrate_radial(lambda r: hup_bracket(r, N) * u.f(r) ** 2, N, spec, "bracket")
    if A == 0.0 or B == 0.0:
        raise UndefinedError("deficits are undefined for the zero function")
    return A, B, C


def _tilde_corrections(r, N: int, lam: float):
    """The two radial weights added to delta1, written with q = r/sinh r.

    Returns (pot, cross) so that delta1_tilde = delta1 + int pot u^2 - int cross u u'.
    """
    q = r_over_sinh(r)
    qa, qh = q ** (N - 1), q ** ((N - 1) / 2.0)
    rc = 1.0 + r_coth_minus_one(r)
    r2 = r * r
    pot = ((N - 1) ** 2 / 2.0 * qa * r2 * rc * rc + (N + 3) ** 2 / 2.0 * qa * r2
           - (N - 1) * (N + 3) * qa * r2 * rc - 8.0 * r2) / (16.0 * lam * lam)
    cross = (N - 1) / 4.0 * qh * r * rc - (N + 3) / 4.0 * qh * r + r
    return pot, cross


def _vprime_B(r, N: int, lam: float):
    """Derivative of v = (r/sinh r)^{(N-1)/2} r^2 / lam^2."""
    q = r_over_sinh(r)
    rc = 1.0 + r_coth_minus_one(r)
    return q ** ((N - 1) / 2.0) * r * ((N + 3) - (N - 1) * rc) / (2.0 * lam * lam)


def delta1_tilde_direct(u: RadialProfile, N: int, lam: float, quad: Optional[QuadratureSpec] = None) -> float:
    """(lam^2/2) int |grad(u M^{-1/2})|^2 M for M = e^{-v}: the integrand is (u' + u v'/2)^2."""
    spec = _spec(u, N, quad)
    return 0.5 * lam * lam * integrate_radial(
        lambda r: (u.df(r) + 0.5 * u.f(r) * _vprime_B(r, N, lam)) ** 2, N, spec, "tilde_direct")


def deficits(u: RadialProfile, N: int, quad: Optional[QuadratureSpec] = None, weight_tag: str = "unit",
             with_distance: bool = True, alpha_bracket: Tuple[float, float] = DEFAULT_ALPHA_BRACKET) -> DeficitReport:
    spec = _spec(u, N, quad)
    A, B, C = _moments(u, N, spec)
    sab = math.sqrt(A * B)
    d1 = sab - 0.5 * C
    d2 = A * B - 0.25 * C * C
    lam = (B / A) ** 0.25

    def pot_term(r):
        return _tilde_corrections(r, N, lam)[0] * u.f(r) ** 2

    def cross_term(r):
        return _tilde_corrections(r, N, lam)[1] * u.f(r) * u.df(r)

    tilde = d1 + integrate_radial(pot_term, N, spec, "tilde_pot") - integrate_radial(cross_term, N, spec, "tilde_cross")
    direct = delta1_tilde_direct(u, N, lam, spec)
    dist, cand = (gaussian_distance(u, weight_tag, N, spec, alpha_bracket) if with_distance
                  else (float("nan"), None))
    return DeficitReport(A, B, C, d1, d2, tilde, lam, dist, cand, weight_tag, direct)


# ---------------------------------------------------------------------------
# Distance to the Gaussian family
# ---------------------------------------------------------------------------

def _gauss_radius(alpha: float, N: int, tag: str) -> float:
    """Radius beyond which e^{-2 alpha r^2} w sinh^{N-1} is e^{-75} below its peak."""
    if tag == "M":
        return 80.0
    r_peak = (N - 1) / (4.0 * alpha)
    return r_peak + math.sqrt(37.5 / alpha) + 1.0


def _log_gauss_peak(alpha: float, N: int, tag: str) -> float:
    return 0.0 if tag == "M" else (N - 1) ** 2 / (8.0 * alpha)


class _DistanceProblem:
    """d^2(alpha) = int (u - c*(alpha) g_alpha)^2 w dV with the least-squares c*.

    Quadrature nodes are cached per truncation radius R = k R_u (k integer)
    with the panel width of the base spec, so each alpha costs a few vector ops.
    """

    def __init__(self, u: RadialProfile, N: int, tag: str, spec: QuadratureSpec):
        self.u, self.N, self.tag, self.spec = u, N, tag, spec
        self.w = _weight_fn(tag, N)
        self.R_u = spec.truncation_R
        self._cache: Dict[int, Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self.u2 = integrate_radial(lambda r: u.f(r) ** 2 * self.w(r), N, spec, "u_norm")

    def _nodes(self, k: int):
        if k not in self._cache:
            sp = self.spec
            r, wt, _ = radial_nodes(k * self.R_u, sp, min(8192, 2 * sp.panels * k))
            W = wt * sphere_area(self.N) * np.sinh(r) ** (self.N - 1) * self.w(r)
            self._cache[k] = (r, W, self.u.f(r) * np.ones_like(r))
        return self._cache[k]

    def evaluate(self, alpha: float) -> Tuple[float, float]:
        N = self.N
        k = max(1, math.ceil(_gauss_radius(alpha, N, self.tag) / self.R_u))
        if _log_gauss_peak(alpha, N, self.tag) > _LOG_HUGE or (N - 1) * k * self.R_u > _LOG_OVERFLOW:
            return self.u2, 0.0
        r, W, uu = self._nodes(k)
        g = np.exp(-alpha * r * r)
        gW = g * W
        c = float(np.dot(uu, gW) / np.dot(g, gW))
        res = uu - c * g
        return float(np.dot(res * res, W)), c


def gaussian_distance(u: RadialProfile, weight_tag: str, N: int, quad: Optional[QuadratureSpec] = None,
                      alpha_bracket: Tuple[float, float] = DEFAULT_ALPHA_BRACKET) -> Tuple[float, GaussianCandidate]:
    """inf over (c, alpha in bracket) of ||u - c e^{-alpha rho^2}||_{L^2(w dV)}.

    The outer search is a coarse log-spaced scan followed by golden-section
    refinement in log(alpha).  A minimiser on the bracket edge is returned
    with ``at_boundary=True``.
    """
    lo, hi = alpha_bracket
    if not (0 < lo < hi):
        raise ValueError("alpha bracket must satisfy 0 < lo < hi")
    prob = _DistanceProblem(u, N, weight_tag, _spec(u, N, quad))
    xs = np.linspace(math.log(lo), math.log(hi), _COARSE_POINTS)
    vals = [prob.evaluate(math.exp(x)) for x in xs]
    d2s = [v[0] for v in vals]
    i = int(np.argmin(d2s))
    if i in (0, len(xs) - 1):
        d2, c = vals[i]
        return math.sqrt(max(d2, 0.0)), GaussianCandidate(c, math.exp(xs[i]), True)
    a, b = xs[i - 1], xs[i + 1]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = prob.evaluate(math.exp(x1)), prob.evaluate(math.exp(x2))
    for _ in range(_GOLDEN_ITERS):
        if f1[0] <= f2[0]:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = prob.evaluate(math.exp(x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = prob.evaluate(math.exp(x2))
    best_x, best = (x1, f1) if f1[0] <= f2[0] else (x2, f2)
    if vals[i][0] < best[0]:
        best_x, best = xs[i], vals[i]
    return math.sqrt(max(best[0], 0.0)), GaussianCandidate(best[1], math.exp(best_x), False)


def in_A_beta(u: RadialProfile, beta: float, N: int, quad: Optional[QuadratureSpec] = None) -> bool:
    """B/A <= beta^4, with a relative slack of 1e-9 so the boundary case is included."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    spec = _spec(u, N, quad)
    A, B, _ = _moments(u, N, spec)
    return B / A <= beta**4 * (1.0 + _BOUNDARY_REL)


# ---------------------------------------------------------------------------
# Stability chains
# ---------------------------------------------------------------------------

@dataclass
class KTable:
    """Empirical Poincare constants per weight family, with provenance."""

    N: int
    beta: float
    scans: Dict[str, ScanResult]

    def constant(self, kind: str, lam: float, lo: float = 0.0, hi: float = math.inf) -> float:
        scan = self.scans.get(kind)
        if scan is None:
            raise IncompleteScanError(f"no scan for weight {kind}")
        lams = [e.lam for e in scan.entries if e.valid]
        if not lams or not (min(lams) <= lam <= max(lams)):
            raise IncompleteScanError(f"scan for {kind} covers [{min(lams, default=float('nan'))}, "
                                      f"{max(lams, default=float('nan'))}] but lambda = {lam:.6g} is needed")
        try:
            return scan.inf_over(lo, hi)
        except KeyError as exc:
            raise IncompleteScanError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {"N": self.N, "beta": self.beta, "scans": {k: v.to_dict() for k, v in self.scans.items()}}


def build_k_table(N: int, beta: float, points: int = 12, config: SpectralConfig = SpectralConfig(),
                  executor=None) -> KTable:
    """Scans for the three weights the chains use.

    ``A`` on [0.02, beta] (unit-weight chain inside A_beta), ``A_tanh`` on
    [0.02, 50] (the M-weighted chain) and ``B`` on [beta, 100 beta].
    """
    grids = {
        "A": np.geomspace(0.02, beta, points),
        "A_tanh": np.geomspace(0.02, 50.0, points),
        "B": np.geomspace(beta, 100.0 * beta, points),
    }
    scans = {k: poincare_constant_scan(k, g, N, config=config, executor=executor) for k, g in grids.items()}
    return KTable(N, beta, scans)


@dataclass
class ChainCheck:
    name: str
    lhs: float
    rhs: float
    K: float
    K_source: str
    tol: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tol

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.update(margin=self.margin, passed=self.passed)
        return d


@dataclass
class ChainReport:
    branch: str
    lambda_opt: float
    beta: float
    deficits: DeficitReport
    checks: List[ChainCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"branch": self.branch, "lambda_opt": self.lambda_opt, "beta": self.beta,
                "passed": self.passed, "deficits": self.deficits.to_dict(),
                "checks": [c.to_dict() for c in self.checks]}


def _projection_distance2(u: RadialProfile, g, w, N: int, spec: QuadratureSpec) -> float:
    """inf_c int (u - c g)^2 w dV on a fixed profile g."""
    gg = integrate_radial(lambda r: g(r) ** 2 * w(r), N, spec, "gauss_norm")
    ug = integrate_radial(lambda r: u.f(r) * g(r) * w(r), N, spec, "projection")
    c = ug / gg
    return integrate_radial(lambda r: (u.f(r) - c * g(r)) ** 2 * w(r), N, spec, "residual")


def verify_stability_chain(u: RadialProfile, N: int, beta: float, K_source: KTable,
                           quad: Optional[QuadratureSpec] = None, rel_tol: float = 1e-9) -> ChainReport:
    """Evaluate both sides of every inequality in the stability chain for ``u``.

    Always: the M-weighted chain (with K from the A_tanh scan) and its delta2
    consequence.  Inside A_beta: the unit-weight chain restricted to
    lambda <= beta (K from the A scan) and its delta2 consequence.  Outside:
    delta1_tilde >= K int u^2 (K from the B scan); the projection onto the
    non-integrable profile M^{1/2} is zero, so the distance is ||u||.
    """
    if K_source.N != N:
        raise IncompleteScanError(f"K table is for N = {K_source.N}, not {N}")
    spec = _spec(u, N, quad)
    rep = deficits(u, N, spec, weight_tag="M", with_distance=True, alpha_bracket=DEFAULT_ALPHA_BRACKET)
    lam = rep.lambda_opt
    inside = rep.B / rep.A <= beta**4 * (1.0 + _BOUNDARY_REL)
    tol = rel_tol * max(1.0, rep.C, rep.A, rep.B)
    out = ChainReport("A_beta" if inside else "complement", lam, beta, rep)

    K_M = K_source.constant("A_tanh", lam)
    lam_gauss = lambda r: np.exp(-r * r / (2.0 * lam * lam))
    mid = _projection_distance2(u, lam_gauss, _weight_fn("M", N), N, spec)
    d2M = rep.d1 ** 2
    out.checks += [
        ChainCheck("M_weight_at_lambda_opt", rep.delta1, K_M * mid, K_M, "A_tanh scan (empirical inf)", tol),
        ChainCheck("M_weight_distance", rep.delta1, K_M * d2M, K_M, "A_tanh scan (empirical inf)", tol),
        ChainCheck("M_weight_delta2", rep.delta2, K_M * rep.C * d2M + K_M**2 * d2M**2, K_M,
                   "A_tanh scan (empirical inf)", tol * max(1.0, rep.C)),
    ]
    if inside:
        K_A = K_source.constant("A", lam, hi=beta)
        mid_u = _projection_distance2(u, lam_gauss, _weight_fn("unit", N), N, spec)
        d_u, _ = gaussian_distance(u, "unit", N, spec, (1.0 / (2.0 * beta * beta), DEFAULT_ALPHA_BRACKET[1]))
        d2u = d_u ** 2
        out.checks += [
            ChainCheck("A_beta_at_lambda_opt", rep.delta1, K_A * mid_u, K_A, "A scan on lambda <= beta", tol),
            ChainCheck("A_beta_distance", rep.delta1, K_A * d2u, K_A, "A scan on lambda <= beta", tol),
            ChainCheck("A_beta_delta2", rep.delta2, K_A * rep.C * d2u + K_A**2 * d2u**2, K_A,
                       "A scan on lambda <= beta", tol * max(1.0, rep.C)),
        ]
    else:
        K_B = K_source.constant("B", lam, lo=beta)
        u2 = integrate_radial(lambda r: u.f(r) ** 2, N, spec, "u_norm")
        out.checks += [
            ChainCheck("tilde_identity", rep.delta1_tilde, rep.delta1_tilde_direct, float("nan"), "exact",
                       1e-7 * max(1.0, abs(rep.delta1_tilde_direct))),
            ChainCheck("complement_distance", rep.delta1_tilde, K_B * u2, K_B, "B scan on lambda >= beta", tol),
        ]
    return out


def scale_noninvariant_check(u: RadialProfile, N: int, quad: Optional[QuadratureSpec] = None,
                             K: Optional[float] = None, tol: float = 1e-8) -> IdentityReport:
    """A + B = C + int |grad(u e^{rho^2/2})|^2 e^{-rho^2}, with the last integral taken as int (u' + rho u)^2.

    C sits on the right so that neither side cancels when u is the Gaussian
    e^{-rho^2/2}; the relative residual then stays meaningful.

    ``K`` defaults to the fixed_beta(1) gap (minimum over l <= 2).  The report's
    ``extra`` holds the distance inf_c ||u - c e^{-rho^2/2}||^2 and the slack
    of rhs >= K * distance.
    """
    spec = _spec(u, N, quad)
    A, B, C = _moments(u, N, spec)
    rhs = integrate_radial(lambda r: (u.df(r) + r * u.f(r)) ** 2, N, spec, "weighted_gradient")
    lhs = A + B
    if K is None:
        w = WeightFamily("fixed_beta", 1.0)
        K = min(sturm_liouville_gap(w, N, l).gap for l in range(3))
    dist = _projection_distance2(u, lambda r: np.exp(-0.5 * r * r), _weight_fn("unit", N), N, spec)
    extra = {"K": K, "distance2": dist, "slack": rhs - K * dist, "N": N}
    return make_report("scale_noninvariant", {"A": A, "B": B, "C": C, "weighted_gradient": rhs}, lhs, C + rhs, tol,
                       extra)
