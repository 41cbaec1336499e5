"""Sharp constants and spectral gaps.

* Eigenvalue branches of the Hessian of rho^2 (Euclidean and hyperbolic).
* Bakry-Emery lower bounds for weights e^{-v(rho)/lambda^2}.
* Sturm-Liouville gaps of weighted radial Laplacians, sector by sector.
* The ground-state potential V(r) for the weight with the (r/sinh r) factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .profiles import RadialProfile, coth, r_coth_minus_one, r_over_sinh

__all__ = [
    "SpectralConfig",
    "HessianProfile",
    "hessian_profile",
    "hessian_branches",
    "hessian_series",
    "hessian_eigen_bound",
    "bakry_emery_bound",
    "case1_threshold",
    "WeightFamily",
    "GapResult",
    "ConvergenceError",
    "DomainError",
    "weight_truncation_radius",
    "assemble_operator",
    "sturm_count",
    "tridiagonal_eigenvalue",
    "tridiagonal_eigenvector",
    "sturm_liouville_gap",
    "ScanEntry",
    "ScanResult",
    "poincare_constant_scan",
    "potential_value",
    "potential_at_zero",
    "potential_scan",
    "locate_threshold",
]


class ConvergenceError(ArithmeticError):
    """The mesh-doubling test did not reach the requested tolerance."""


class DomainError(ValueError):
    """Argument outside the admissible domain."""


@dataclass(frozen=True)
class SpectralConfig:
    """Tunable defaults for the spectral solver."""

    mesh_nodes: int = 200
    max_doublings: int = 2
    richardson_tol: float = 0.01
    l_max: int = 2
    eps0: float = 1.0            # free parameter of the small-lambda Bakry-Emery case
    weight_cutoff: float = 1e-14  # w(R) < cutoff * max w for natural-boundary truncation
    dirichlet_R: float = 60.0     # truncation for the non-integrable weight B


DEFAULT_CONFIG = SpectralConfig()


# ---------------------------------------------------------------------------
# Hessian of rho^2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HessianProfile:
    """Matrix field P(t) Id + Q(t) x x^T with t = |x|."""

    P: Callable
    Q: Callable
    N: int
    model: str


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t >= 1):
        raise DomainError("t must lie in the open interval (0, 1)")
    return t


def hessian_profile(model: str, N: int) -> HessianProfile:
    """P, Q for the Euclidean Hessian of rho^2 or the Riemannian one (C = 0)."""
    if model == "euclidean_rho2":
        def P(t):
            t = _check_t(t)
            return 4.0 * 2.0 * np.arctanh(t) / (t - t**3)

        def Q(t):
            t = _check_t(t)
            r = 2.0 * np.arctanh(t)
            return 8.0 / (t * t * (1 - t * t) ** 2) + 4.0 * r * (3 * t * t - 1) / (t**3 * (1 - t * t) ** 2)
    elif model == "hyperbolic_rho2":
        def P(t):
            t = _check_t(t)
            r = 2.0 * np.arctanh(t)
            return 4.0 * r / (t * (1 - t * t)) + 8.0 * r * t / (1 - t * t) ** 2

        def Q(t):
            t = _check_t(t)
            r = 2.0 * np.arctanh(t)
            d = (1 - t * t) ** 2
            return 8.0 / (t * t * d) - 4.0 * r / (t * d) - 4.0 * r / (t**3 * d)
    else:
        raise DomainError(f"unknown Hessian model {model!r}")
    return HessianProfile(P, Q, N, model)


def hessian_branches(model: str, t) -> Tuple[np.ndarray, np.ndarray]:
    """(tangential, radial) eigenvalues; hyperbolic values are normalised by g.

    Closed forms: Euclidean 4 rho/(t - t^3) and 8(1 + rho t)/(1-t^2)^2;
    hyperbolic 2 rho coth(rho) and 2.
    """
    t = _check_t(t)
    r = 2.0 * np.arctanh(t)
    if model == "euclidean_rho2":
        return 4.0 * r / (t - t**3), 8.0 * (1.0 + r * t) / (1 - t * t) ** 2
    if model == "hyperbolic_rho2":
        return 2.0 * r * coth(r), np.full_like(t, 2.0)
    raise DomainError(f"unknown Hessian model {model!r}")


def hessian_series(model: str, t, terms: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """Small-t power series of both branches (exact limits at t = 0)."""
    t = np.asarray(t, dtype=float)
    if model == "euclidean_rho2":
        # rho/t = 2 sum t^{2j}/(2j+1)
        rho_over_t = 2.0 * sum(t ** (2 * j) / (2 * j + 1) for j in range(terms))
        tang = 4.0 * rho_over_t / (1 - t * t)
        rad = 8.0 * (1.0 + rho_over_t * t * t) / (1 - t * t) ** 2
        return tang, rad
    if model == "hyperbolic_rho2":
        r = 2.0 * t * sum(t ** (2 * j) / (2 * j + 1) for j in range(terms))
        # r coth r = sum 2^{2n} B_{2n} r^{2n}/(2n)!
        bern = [1.0, 1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66]
        rc = sum(2 ** (2 * n) * bern[n] * r ** (2 * n) / math.factorial(2 * n) for n in range(len(bern)))
        return 2.0 * rc, np.full_like(t, 2.0)
    raise DomainError(f"unknown Hessian model {model!r}")


def hessian_eigen_bound(model: str, t_grid) -> Tuple[float, float]:
    """Grid infimum of both eigenvalue branches and their common t -> 0 limit."""
    tang, rad = hessian_branches(model, t_grid)
    inf_est = float(min(np.min(tang), np.min(rad)))
    lt, lr = hessian_series(model, np.array(0.0))
    return inf_est, float(min(lt, lr))


def bakry_emery_bound(v: RadialProfile, lam: float, N: int, r_grid) -> float:
    """inf_r min(v'', coth(r) v') / lam^2 - (N - 1)."""
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0):
        raise DomainError("r_grid must be positive")
    branch = np.minimum(v.ddf(r), coth(r) * v.df(r))
    return float(np.min(branch) / lam**2 - (N - 1))


def case1_threshold(N: int, eps0: float = DEFAULT_CONFIG.eps0) -> float:
    """alpha = sqrt((2 - eps0)/(N - 1)): below it the Hessian criterion gives eps0/lambda^2."""
    if not (0 < eps0 < 2):
        raise DomainError("eps0 must lie in (0, 2)")
    return math.sqrt((2.0 - eps0) / (N - 1))


# ---------------------------------------------------------------------------
# Weights and the Sturm-Liouville solver
# ---------------------------------------------------------------------------

_KINDS = ("A", "B", "fixed_beta", "A_tanh")


@dataclass(frozen=True)
class WeightFamily:
    """Radial weight on H^N.

    kind ``A``: e^{-r^2/lam^2}; ``B``: e^{-(r/sinh r)^{(N-1)/2} r^2/lam^2};
    ``fixed_beta``: e^{-beta r^2}; ``A_tanh``: stiffness weight as ``A`` with
    the mass weight multiplied by (1 - tanh^2(r/2))^N.
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown weight kind {self.kind!r}")
        if not self.param > 0:
            raise DomainError("weight parameter must be positive")

    def log_weight(self, r, N: int):
        r = np.asarray(r, dtype=float)
        if self.kind in ("A", "A_tanh"):
            return -(r * r) / self.param**2
        if self.kind == "fixed_beta":
            return -self.param * r * r
        return -(r_over_sinh(r) ** ((N - 1) / 2.0)) * r * r / self.param**2

    def weight(self, r, N: int):
        return np.exp(self.log_weight(r, N))

    def log_mass_factor(self, r, N: int):
        r = np.asarray(r, dtype=float)
        if self.kind == "A_tanh":
            return -2.0 * N * np.log(np.cosh(r / 2.0))
        return np.zeros_like(r)

    @property
    def integrable(self) -> bool:
        """Whether the weighted volume is finite (constants are then admissible)."""
        return self.kind != "B"


@dataclass(frozen=True)
class GapResult:
    gap: float
    mesh_nodes: int
    truncation_R: float
    richardson_delta: float
    angular_mode: int
    weight_kind: str = ""
    weight_param: float = float("nan")
    boundary_at_R: str = "natural"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _log_volume(r, N: int):
    with np.errstate(divide="ignore"):
        return (N - 1) * np.log(np.sinh(r))


def weight_truncation_radius(weight: WeightFamily, N: int, cutoff: float = DEFAULT_CONFIG.weight_cutoff,
                             r_max: float = 400.0) -> float:
    """R with sinh^{N-1}(R) w(R) < cutoff * max, beyond the peak."""
    if not weight.integrable:
        return DEFAULT_CONFIG.dirichlet_R
    r = np.linspace(1e-6, r_max, 200_001)
    # the mass weight is never larger than the stiffness weight, so it decides
    lw = _log_volume(r, N) + weight.log_weight(r, N) + weight.log_mass_factor(r, N)
    top = np.argmax(lw)
    below = np.nonzero(lw[top:] < lw[top] + math.log(cutoff))[0]
    if below.size == 0:
        raise DomainError("weight does not decay within r_max; pass R explicitly")
    R = float(r[top + below[0]])
    if weight.kind == "A_tanh":
        # stiffness/mass ratio cosh^{2N}(R/2) must stay below 1e14, otherwise the
        # zero mode is lost to rounding; the mass left out beyond R is ~e^{-R}
        R = min(R, 2.0 * math.acosh(math.exp(math.log(1e14) / (2 * N))))
    return R


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _cell_integral(fun, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GL_X[None, :]
    return np.sum(fun(pts) * _GL_W[None, :], axis=1) * half


def assemble_operator(weight: WeightFamily, N: int, l: int, R: float, mesh_nodes: int):
    """Symmetric tridiagonal (diag, offdiag) of M^{-1/2} K M^{-1/2}.

    Vertex-centred finite volumes on a uniform grid: fluxes use the cell
    average of the stiffness weight, masses integrate the mass weight over
    dual cells.  Node 0 is dropped for l >= 1 (Dirichlet at the origin) and
    node n for the non-integrable weight (Dirichlet at R).
    """
    if mesh_nodes < 3:
        raise DomainError("need at least 3 nodes")
    n = mesh_nodes - 1
    h = R / n
    x = np.arange(n + 1) * h
    # shift the log-weights so the largest is O(1)
    lw_peak = float(np.max(_log_volume(x[1:], N) + weight.log_weight(x[1:], N)))

    def stiff_w(r):
        return np.exp(_log_volume(r, N) + weight.log_weight(r, N) - lw_peak)

    def mass_w(r):
        return np.exp(_log_volume(r, N) + weight.log_weight(r, N) + weight.log_mass_factor(r, N) - lw_peak)

    flux = _cell_integral(stiff_w, x[:-1], x[1:]) / (h * h)          # length n
    lo = np.maximum(x - h / 2, 0.0)
    hi = np.minimum(x + h / 2, R)
    mass = _cell_integral(mass_w, lo, hi)
    diag = np.zeros(n + 1)
    diag[:-1] += flux
    diag[1:] += flux
    if l > 0:
        c = l * (l + N - 2)
        cent = np.zeros(n + 1)
        cent[1:] = c * _cell_integral(lambda r: stiff_w(r) / np.sinh(r) ** 2, lo[1:], hi[1:])
        diag = diag + cent
    if not np.all(mass > 0):
        raise DomainError("mass weight underflows on the mesh; reduce R")
    off = -flux
    keep_lo = 1 if l > 0 else 0
    keep_hi = n if not weight.integrable else n + 1
    d = diag[keep_lo:keep_hi] / mass[keep_lo:keep_hi]
    m = mass[keep_lo:keep_hi]
    e = off[keep_lo:keep_hi - 1] / np.sqrt(m[:-1] * m[1:])
    return d, e


def sturm_count(d: Sequence[float], e2: Sequence[float], x: float) -> int:
    """Number of eigenvalues strictly below x (LDL^T Sturm sequence)."""
    count = 0
    q = d[0] - x
    if q < 0:
        count += 1
    tiny = 1e-300
    for i in range(1, len(d)):
        if q == 0.0:
            q = tiny
        q = d[i] - x - e2[i - 1] / q
        if q < 0:
            count += 1
    return count


def tridiagonal_eigenvalue(d: np.ndarray, e: np.ndarray, k: int, rel_tol: float = 1e-13) -> float:
    """k-th smallest eigenvalue (0-based) of a symmetric tridiagonal matrix by bisection."""
    n = len(d)
    if not 0 <= k < n:
        raise DomainError("eigenvalue index out of range")
    ae = np.abs(e)
    rad = np.zeros(n)
    rad[:-1] += ae
    rad[1:] += ae
    lo = float(np.min(d - rad))
    hi = float(np.max(d + rad))
    dl, e2 = d.tolist(), (e * e).tolist()
    while hi - lo > rel_tol * max(abs(lo), abs(hi), 1e-300):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if sturm_count(dl, e2, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def tridiagonal_eigenvector(d: np.ndarray, e: np.ndarray, mu: float, iters: int = 3) -> np.ndarray:
    """Unit eigenvector for the eigenvalue ``mu`` by inverse iteration (Thomas solves)."""
    n = len(d)
    shift = mu + 1e-10 * max(abs(mu), 1.0)
    x = np.ones(n) / math.sqrt(n)
    for _ in range(iters):
        # solve (T - shift) y = x
        c = np.zeros(n - 1)
        y = np.zeros(n)
        b0 = d[0] - shift
        c[0] = e[0] / b0 if n > 1 else 0.0
        y[0] = x[0] / b0
        for i in range(1, n):
            b = d[i] - shift - e[i - 1] * c[i - 1]
            if b == 0.0:
                b = 1e-300
            if i < n - 1:
                c[i] = e[i] / b
            y[i] = (x[i] - e[i - 1] * y[i - 1]) / b
        for i in range(n - 2, -1, -1):
            y[i] -= c[i] * y[i + 1]
        x = y / np.linalg.norm(y)
    return x


def _solve(weight: WeightFamily, N: int, l: int, R: float, nodes: int) -> float:
    d, e = assemble_operator(weight, N, l, R, nodes)
    k = 1 if (l == 0 and weight.integrable) else 0
    return tridiagonal_eigenvalue(d, e, k)


def sturm_liouville_gap(weight: WeightFamily, N: int, l: int = 0, R: Optional[float] = None,
                        mesh_nodes: int = DEFAULT_CONFIG.mesh_nodes,
                        config: SpectralConfig = DEFAULT_CONFIG) -> GapResult:
    """Smallest nonzero eigenvalue of -(w u')' + l(l+N-2)/sinh^2 w u = mu w u.

    For integrable weights the constant mode of the l = 0 sector is discarded
    and the boundary at R is natural; for the non-integrable weight B the
    bottom of the spectrum is returned with a Dirichlet condition at R.
    """
    if N < 2 or l < 0:
        raise DomainError("need N >= 2 and l >= 0")
    if mesh_nodes < 200:
        raise DomainError("mesh_nodes must be at least 200")
    if R is None:
        R = weight_truncation_radius(weight, N, config.weight_cutoff) if weight.integrable else config.dirichlet_R
    R = float(R)
    nodes = mesh_nodes
    prev = _solve(weight, N, l, R, nodes)
    delta = math.inf
    for _ in range(config.max_doublings + 1):
        nodes = 2 * nodes - 1
        cur = _solve(weight, N, l, R, nodes)
        delta = abs(cur - prev) / max(abs(cur), 1e-300)
        prev = cur
        if delta <= config.richardson_tol:
            break
    if delta > config.richardson_tol:
        raise ConvergenceError(f"richardson delta {delta:.3g} after mesh doublings (kind={weight.kind}, l={l})")
    return GapResult(gap=float(prev), mesh_nodes=nodes, truncation_R=R, richardson_delta=float(delta),
                     angular_mode=l, weight_kind=weight.kind, weight_param=weight.param,
                     boundary_at_R="natural" if weight.integrable else "dirichlet")


@dataclass
class ScanEntry:
    lam: float
    K: float
    gaps: Dict[int, float]
    argmin_l: int
    valid: bool
    error: str = ""
    max_delta: float = float("nan")


@dataclass
class ScanResult:
    kind: str
    N: int
    entries: List[ScanEntry]
    inf_K: float
    label: str = "empirical"

    def K_at(self, lam: float) -> float:
        for e in self.entries:
            if e.lam == lam and e.valid:
                return e.K
        raise KeyError(lam)

    def inf_over(self, lo: float = 0.0, hi: float = math.inf) -> float:
        """Empirical infimum of K over grid points in [lo, hi]."""
        vals = [e.K for e in self.entries if e.valid and lo <= e.lam <= hi]
        if not vals:
            raise KeyError(f"no valid scan entries in [{lo}, {hi}]")
        return float(min(vals))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "N": self.N, "inf_K": self.inf_K, "label": self.label,
            "entries": [{"lambda": e.lam, "K": e.K, "gaps": {str(k): v for k, v in e.gaps.items()},
                         "argmin_l": e.argmin_l, "valid": e.valid, "error": e.error,
                         "max_delta": e.max_delta} for e in self.entries],
        }


def _scan_one(args):
    kind, lam, N, l_max, mesh_nodes, config = args
    w = WeightFamily(kind, lam)
    gaps, deltas = {}, []
    try:
        for l in range(l_max + 1):
            g = sturm_liouville_gap(w, N, l, mesh_nodes=mesh_nodes, config=config)
            gaps[l] = g.gap
            deltas.append(g.richardson_delta)
    except (ConvergenceError, DomainError) as exc:
        return ScanEntry(lam, float("nan"), gaps, -1, False, str(exc))
    l_best = min(gaps, key=gaps.get)
    factor = 1.0 if kind == "fixed_beta" else lam * lam / 2.0
    return ScanEntry(lam, factor * gaps[l_best], gaps, l_best, True, "", max(deltas))


def poincare_constant_scan(weight_kind: str, lambda_grid: Sequence[float], N: int, l_max: int = 2,
                           mesh_nodes: int = DEFAULT_CONFIG.mesh_nodes, config: SpectralConfig = DEFAULT_CONFIG,
                           executor=None) -> ScanResult:
    """K(lambda) = (lambda^2/2) min_{l <= l_max} gap over a grid of scales.

    For ``fixed_beta`` the grid holds beta values and K is the gap itself.
    ``executor`` may be any object with a ``map`` method (e.g. a process pool).
    """
    if l_max < 2:
        raise DomainError("l_max must be at least 2")
    grid = [float(x) for x in lambda_grid]
    if not grid or any(x <= 0 for x in grid):
        raise DomainError("lambda grid must be nonempty and positive")
    jobs = [(weight_kind, lam, N, l_max, mesh_nodes, config) for lam in grid]
    mapper = executor.map if executor is not None else map
    entries = list(mapper(_scan_one, jobs))
    valid = [e.K for e in entries if e.valid]
    return ScanResult(weight_kind, N, entries, float(min(valid)) if valid else float("nan"))


# ---------------------------------------------------------------------------
# Ground-state potential for weight B
# ---------------------------------------------------------------------------

def potential_value(r, lam: float, N: int):
    """V(r) = lam^2((N-1)^2/4 + |v'|^2/4 - (v'' + (N-1) coth r v')/2) for v = -log(weight B).

    Evaluated from the six-term expansion rewritten with q = r/sinh r so that
    every term stays bounded (no overflow for large r, no 0/0 at r = 0).
    """
    r = np.asarray(r, dtype=float)
    q = r_over_sinh(r)
    qa = q ** (N - 1)
    qh = q ** ((N - 1) / 2.0)
    rc = 1.0 + r_coth_minus_one(r)          # r coth r
    l2, l4 = lam**2, lam**4
    t1 = (N + 3) ** 2 / (16 * l4) * qa * r**2
    t2 = (N - 1) ** 2 / (16 * l4) * qa * r**2 * rc**2
    t3 = -(N - 1) * (N + 3) / (8 * l4) * qa * r**2 * rc
    t4 = -(N + 1) * (N + 3) / (8 * l2) * qh
    t5 = (N - 3) * (N - 1) / (8 * l2) * qh * rc**2
    t6 = (N - 1) / (4 * l2) * qh * r**2
    return l2 * ((N - 1) ** 2 / 4.0 + t1 + t2 + t3 + t4 + t5 + t6)


def potential_at_zero(lam: float, N: int) -> float:
    """Series limit V(0+) = lam^2 (N-1)^2/4 - N (the Laplacian of v at 0 is 2N/lam^2)."""
    return lam**2 * (N - 1) ** 2 / 4.0 - N


def potential_scan(lam: float, N: int, r_max: float = 40.0, n_grid: int = 8001) -> Tuple[float, float]:
    """Minimum of V over [0, r_max] by a dense grid plus golden-section refinement."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if r_max < 20:
        raise DomainError("r_max must be at least 20")
    r = np.linspace(0.0, r_max, n_grid)
    V = potential_value(r, lam, N)
    V[0] = potential_at_zero(lam, N)
    i = int(np.argmin(V))
    if i == 0:
        return float(V[0]), 0.0
    a, b = r[max(i - 1, 0)], r[min(i + 1, n_grid - 1)]
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = float(potential_value(c, lam, N)), float(potential_value(d, lam, N))
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = float(potential_value(c, lam, N))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = float(potential_value(d, lam, N))
    x = 0.5 * (a + b)
    vx = float(potential_value(x, lam, N))
    if vx > V[i]:
        return float(V[i]), float(r[i])
    return vx, float(x)


def locate_threshold(N: int, K: float = 1.0, lam_lo: float = 0.01, lam_hi: float = 100.0,
                     iters: int = 60) -> float:
    """Smallest lambda (by bisection) with min_r V >= K."""
    f = lambda lam: potential_scan(lam, N)[0] - K
    if f(lam_hi) < 0:
        raise DomainError("min V stays below K up to lam_hi")
    if f(lam_lo) >= 0:
        return lam_lo
    lo, hi = lam_lo, lam_hi
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if f(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi
