"""Integration over hyperbolic space.

Radial integrands are reduced to one-dimensional integrals in geodesic polar
coordinates, omega_{N-1} * int_0^R f(r) sinh^{N-1}(r) dr, and evaluated with
composite Gauss-Legendre panels.  A Monte Carlo estimator with a Gaussian-type
importance density serves as an independent cross-check.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .profiles import RadialProfile

__all__ = [
    "QuadratureSpec",
    "MonteCarloSpec",
    "QuadResult",
    "DivergentIntegralError",
    "NoFiniteTruncationError",
    "EstimationError",
    "sphere_area",
    "radial_nodes",
    "integrate_radial",
    "integrate_radial_detail",
    "truncation_radius",
    "auto_radius",
    "integrate_mc",
]


class DivergentIntegralError(ArithmeticError):
    """The integrand is not integrable (or overflows) on the requested range."""

    def __init__(self, message: str, term: str | None = None):
        super().__init__(message if term is None else f"{term}: {message}")
        self.term = term


class NoFiniteTruncationError(ArithmeticError):
    """The tail envelope does not beat the exponential volume growth."""


class EstimationError(ArithmeticError):
    """Monte Carlo estimation failed (non-finite integrand at a sample)."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule on [0, R].

    ``truncation_R=None`` lets callers pick R from the integrand's envelope.
    The first uniform panel is replaced by ``grading_levels`` geometric panels
    shrinking toward 0 with ratio ``grading_ratio``; below the smallest panel a
    power-law tail correction is added.
    """

    truncation_R: Optional[float] = None
    panels: int = 64
    nodes_per_panel: int = 16
    rel_tol: float = 1e-10
    grading_levels: int = 16
    grading_ratio: float = 0.2

    def __post_init__(self):
        if self.truncation_R is not None and not (self.truncation_R > 0 and math.isfinite(self.truncation_R)):
            raise ValueError("truncation_R must be positive and finite")
        if self.panels < 8:
            raise ValueError("panels must be >= 8")
        if self.nodes_per_panel < 2:
            raise ValueError("nodes_per_panel must be >= 2")
        if not (0 < self.rel_tol < 1):
            raise ValueError("rel_tol must lie in (0, 1)")
        if not (0 < self.grading_ratio < 1) or self.grading_levels < 0:
            raise ValueError("invalid grading parameters")

    def with_R(self, R: float) -> "QuadratureSpec":
        return QuadratureSpec(R, self.panels, self.nodes_per_panel, self.rel_tol,
                              self.grading_levels, self.grading_ratio)


@dataclass(frozen=True)
class MonteCarloSpec:
    samples: int = 100_000
    seed: int = 0
    beta_importance: float = 1.0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not (self.beta_importance > 0):
            raise ValueError("beta_importance must be > 0")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    R: float
    origin_tail: float


def sphere_area(N: int) -> float:
    """Area of the unit sphere S^{N-1}, via log-Gamma."""
    return math.exp(math.log(2.0) + 0.5 * N * math.log(math.pi) - math.lgamma(0.5 * N))


@functools.lru_cache(maxsize=256)
def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@functools.lru_cache(maxsize=512)
def _nodes_cached(R: float, panels: int, n: int, levels: int, ratio: float):
    h = R / panels
    brk = [h * ratio**k for k in range(levels, 0, -1)] + [h * k for k in range(1, panels + 1)]
    brk = np.array(brk)
    a, b = brk[:-1], brk[1:]
    x, w = _gl(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    r.setflags(write=False)
    wt.setflags(write=False)
    return r, wt, float(brk[0])


def radial_nodes(R: float, spec: QuadratureSpec, panels: int | None = None):
    """Nodes and weights (without the volume factor) on [r_min, R], plus r_min."""
    p = spec.panels if panels is None else panels
    return _nodes_cached(float(R), int(p), spec.nodes_per_panel, spec.grading_levels, spec.grading_ratio)


def _volume_factor(r: np.ndarray, N: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.sinh(r) ** (N - 1)


def _evaluate(f, r):
    fn = f.f if isinstance(f, RadialProfile) else f
    with np.errstate(all="ignore"):
        return np.asarray(fn(r), dtype=float) * np.ones_like(r)


def _origin_tail(f, N: int, r_min: float, term: str | None) -> float:
    """Power-law estimate of the integral over [0, r_min]."""
    pts = np.array([r_min, 2.0 * r_min])
    F = _evaluate(f, pts) * _volume_factor(pts, N)
    if not np.all(np.isfinite(F)):
        raise DivergentIntegralError("integrand is not finite near the origin", term)
    if F[0] == 0.0 or F[1] == 0.0 or np.sign(F[0]) != np.sign(F[1]):
        return 0.0
    p = math.log(abs(F[1] / F[0])) / math.log(2.0)
    if p <= -1.0 + 1e-6:
        raise DivergentIntegralError(f"integrand behaves like r^{p:.3f} at the origin (not integrable)", term)
    return float(F[0] * r_min / (p + 1.0))


def _panel_sum(f, N: int, R: float, spec: QuadratureSpec, panels: int, term: str | None):
    r, w, r_min = radial_nodes(R, spec, panels)
    F = _evaluate(f, r) * _volume_factor(r, N)
    if not np.all(np.isfinite(F)):
        raise DivergentIntegralError("integrand overflowed or is not finite on the quadrature grid", term)
    # math.fsum gives an order-independent, correctly rounded reduction
    return math.fsum(F * w), r_min


def _resolve_R(f, N: int, spec: QuadratureSpec) -> float:
    if spec.truncation_R is not None:
        return float(spec.truncation_R)
    if isinstance(f, RadialProfile):
        if f.support_hint is not None and math.isfinite(f.support_hint[1]):
            return float(f.support_hint[1])
        if f.envelope is not None:
            return truncation_radius(f, N, 1e-18)
    raise ValueError("truncation_R must be given for integrands without an envelope")


def integrate_radial_detail(f: Union[RadialProfile, Callable], N: int, spec: QuadratureSpec | None = None,
                            term: str | None = None) -> QuadResult:
    """Integrate a radial function over H^N, with a panel-doubling error estimate."""
    if N < 2:
        raise ValueError("N must be >= 2")
    spec = spec or QuadratureSpec()
    R = _resolve_R(f, N, spec)
    coarse, r_min_c = _panel_sum(f, N, R, spec, spec.panels, term)
    fine, r_min = _panel_sum(f, N, R, spec, 2 * spec.panels, term)
    coarse += _origin_tail(f, N, r_min_c, term)
    tail = _origin_tail(f, N, r_min, term)
    omega = sphere_area(N)
    return QuadResult(value=omega * (fine + tail), error_estimate=omega * abs(fine + tail - coarse), R=R,
                      origin_tail=omega * tail)


def integrate_radial(f: Union[RadialProfile, Callable], N: int, spec: QuadratureSpec | None = None,
                     term: str | None = None) -> float:
    return integrate_radial_detail(f, N, spec, term).value


def truncation_radius(f_tail_bound: Union[RadialProfile, Callable], N: int, tol: float,
                      step: float = 1.0 / 32.0, r_max: float = 2000.0) -> float:
    """Smallest grid R with envelope(R) e^{(N-1)R} / (2^{N-1}(N-1)) < tol."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if not tol > 0:
        raise ValueError("tol must be positive")
    env: Callable
    if isinstance(f_tail_bound, RadialProfile):
        if f_tail_bound.support_hint is not None and math.isfinite(f_tail_bound.support_hint[1]):
            return float(f_tail_bound.support_hint[1])
        env = f_tail_bound.envelope if f_tail_bound.envelope is not None else (lambda r: np.abs(f_tail_bound.f(r)))
    else:
        env = f_tail_bound
    grid = np.arange(1, int(round(r_max / step)) + 1) * step
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        e = np.abs(np.asarray(env(grid), dtype=float)) * np.ones_like(grid)
        log_bound = np.log(e) + (N - 1) * grid - (N - 1) * math.log(2.0) - math.log(N - 1)
    ok = log_bound < math.log(tol)
    positive = np.nonzero(e > 0)[0]
    # an envelope that underflows to zero (rather than being cut off) decides on
    # its last representable value
    last = positive[-1] if positive.size else grid.size - 1
    underflow = e[last] < 1e-250
    if not ok[-1] or (underflow and not ok[last]):
        raise NoFiniteTruncationError("envelope does not decay faster than e^{(N-1)r}")
    # first index after which the bound stays below tol
    bad = np.nonzero(~ok)[0]
    idx = 0 if bad.size == 0 else bad[-1] + 1
    return float(grid[idx])


def auto_radius(profiles, N: int, extra_power: float = 8.0, tol: float = 1e-18, minimum: float = 4.0) -> float:
    """Truncation radius adequate for quadratic integrands built from ``profiles``.

    The envelope used is max_i env_i(r)^2 (1+r)^extra_power, covering products
    of the profile with polynomially growing weights.
    """
    Rs = [minimum]
    for p in profiles:
        if p.support_hint is not None and math.isfinite(p.support_hint[1]):
            Rs.append(p.support_hint[1])
            continue
        if p.envelope is None:
            raise ValueError(f"profile {p.name} has neither support nor envelope; pass truncation_R")
        env = p.envelope
        Rs.append(truncation_radius(lambda r, e=env: e(r) ** 2 * (1.0 + r) ** extra_power, N, tol))
    return float(max(Rs))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

_TABLE_NODES = 10_000


@functools.lru_cache(maxsize=64)
def _radius_table(N: int, beta: float):
    # log density (N-1) log sinh r - beta r^2, peak near (N-1)/(2 beta)
    peak = (N - 1) / (2.0 * beta)
    R = peak + math.sqrt(60.0 / beta) + 1.0
    grid = np.linspace(0.0, R, _TABLE_NODES)
    with np.errstate(divide="ignore"):
        logd = (N - 1) * np.log(np.sinh(grid)) - beta * grid**2
    logd[0] = -np.inf if N > 1 else 0.0
    m = np.max(logd)
    dens = np.exp(logd - m)
    cell = 0.5 * (dens[1:] + dens[:-1]) * np.diff(grid)
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    cdf /= cdf[-1]
    return grid, cdf


def integrate_mc(f: Callable[[np.ndarray], np.ndarray], N: int, mc: MonteCarloSpec | None = None):
    """Importance-sampling estimate of the integral of f over H^N.

    ``f`` receives an ``(n, N)`` array of ball coordinates and returns ``n``
    values.  Radii are drawn by inverting a tabulated CDF of the density
    proportional to sinh^{N-1}(r) e^{-beta r^2}; directions are uniform.  The
    weights use the exact piecewise-constant density that the linear
    interpolation of the CDF induces, so the estimator is unbiased for the
    integral over the tabulated radius range.

    Returns ``(estimate, stderr)``.
    """
    mc = mc or MonteCarloSpec()
    grid, cdf = _radius_table(int(N), float(mc.beta_importance))
    rng = np.random.default_rng(int(mc.seed))
    U = rng.random(mc.samples)
    Z = rng.standard_normal((mc.samples, N))
    r = np.interp(U, cdf, grid)
    cell = np.clip(np.searchsorted(grid, r, side="right") - 1, 0, len(grid) - 2)
    p_r = (cdf[cell + 1] - cdf[cell]) / (grid[cell + 1] - grid[cell])
    direction = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    pts = np.tanh(r / 2.0)[:, None] * direction
    with np.errstate(all="ignore"):
        vals = np.asarray(f(pts), dtype=float).reshape(-1)
    if vals.shape[0] != mc.samples or not np.all(np.isfinite(vals)):
        raise EstimationError("integrand returned non-finite values or wrong shape at sampled points")
    if not np.any(vals):
        return 0.0, 0.0
    weights = sphere_area(N) * np.sinh(r) ** (N - 1) / p_r
    y = vals * weights
    est = float(np.mean(y))
    err = float(np.std(y, ddof=1) / math.sqrt(mc.samples)) if mc.samples > 1 else float("inf")
    return est, err
