"""Radial profiles r -> (f, f', f'') and the built-in test-function library.

A profile is the universal currency of the package: test functions, weights,
potentials and field intensities are all radial functions of the geodesic
distance to the origin.  Derivatives are analytic; finite differences appear
only in :func:`check_derivatives`.

All callables are vectorised: they accept a float or a numpy array.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]


class ProfileError(ValueError):
    """Raised for malformed profile ids or invalid profile parameters."""


def _zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class RadialProfile:
    """A radial function with analytic first and second derivatives.

    Attributes
    ----------
    f, df, ddf:
        Vectorised callables for the value and the first two derivatives.
    support_hint:
        Optional ``(r_min, r_max)``; the profile vanishes outside it.
    envelope:
        Optional monotone bound on ``max(|f|, |f'|, |f''|)`` for large r, used
        to pick a truncation radius.  ``None`` means "unknown".
    name:
        Human-readable id, used in reports.
    """

    f: ArrayFn
    df: ArrayFn
    ddf: ArrayFn
    support_hint: Optional[Tuple[float, float]] = None
    envelope: Optional[ArrayFn] = None
    name: str = "profile"

    def __call__(self, r):
        return self.f(np.asarray(r, dtype=float))

    def d(self, r):
        return self.df(np.asarray(r, dtype=float))

    def dd(self, r):
        return self.ddf(np.asarray(r, dtype=float))

    # -- algebra ---------------------------------------------------------
    def __add__(self, other: "RadialProfile") -> "RadialProfile":
        other = as_profile(other)
        return RadialProfile(
            f=lambda r: self.f(r) + other.f(r),
            df=lambda r: self.df(r) + other.df(r),
            ddf=lambda r: self.ddf(r) + other.ddf(r),
            support_hint=_union_support(self.support_hint, other.support_hint),
            envelope=_env_sum(self.envelope, other.envelope),
            name=f"({self.name}+{other.name})",
        )

    __radd__ = __add__

    def __neg__(self) -> "RadialProfile":
        return self.scale(-1.0)

    def __sub__(self, other: "RadialProfile") -> "RadialProfile":
        return self + (-as_profile(other))

    def __mul__(self, other) -> "RadialProfile":
        if np.isscalar(other):
            return self.scale(float(other))
        other = as_profile(other)
        a, b = self, other
        return RadialProfile(
            f=lambda r: a.f(r) * b.f(r),
            df=lambda r: a.df(r) * b.f(r) + a.f(r) * b.df(r),
            ddf=lambda r: a.ddf(r) * b.f(r) + 2.0 * a.df(r) * b.df(r) + a.f(r) * b.ddf(r),
            support_hint=_intersect_support(a.support_hint, b.support_hint),
            envelope=_env_product(a.envelope, b.envelope),
            name=f"{a.name}*{b.name}",
        )

    __rmul__ = __mul__

    def scale(self, c: float) -> "RadialProfile":
        c = float(c)
        env = None if self.envelope is None else (lambda r, e=self.envelope: abs(c) * e(r))
        return RadialProfile(
            f=lambda r: c * self.f(r),
            df=lambda r: c * self.df(r),
            ddf=lambda r: c * self.ddf(r),
            support_hint=self.support_hint,
            envelope=env,
            name=f"{c:g}*{self.name}",
        )

    def compose(self, F: ArrayFn, dF: ArrayFn, ddF: ArrayFn, name: str) -> "RadialProfile":
        """Return ``F(self)`` with derivatives from the chain rule."""
        s = self
        return RadialProfile(
            f=lambda r: F(s.f(r)),
            df=lambda r: dF(s.f(r)) * s.df(r),
            ddf=lambda r: ddF(s.f(r)) * s.df(r) ** 2 + dF(s.f(r)) * s.ddf(r),
            name=f"{name}({s.name})",
        )

    def with_name(self, name: str) -> "RadialProfile":
        return RadialProfile(self.f, self.df, self.ddf, self.support_hint, self.envelope, name)


def as_profile(x) -> RadialProfile:
    if isinstance(x, RadialProfile):
        return x
    if np.isscalar(x):
        return constant(float(x))
    raise TypeError(f"cannot interpret {type(x).__name__} as a RadialProfile")


def _union_support(a, b):
    if a is None or b is None:
        return None
    return (min(a[0], b[0]), max(a[1], b[1]))


def _intersect_support(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return (max(a[0], b[0]), min(a[1], b[1]))


def _env_sum(e1, e2):
    if e1 is None or e2 is None:
        return None
    return lambda r: e1(r) + e2(r)


def _env_product(e1, e2):
    # The second derivative of a product involves f'g' etc.; a factor 4
    # covers the binomial coefficients (1, 2, 1).
    if e1 is None or e2 is None:
        return None
    return lambda r: 4.0 * e1(r) * e2(r)


# ---------------------------------------------------------------------------
# Elementary profiles
# ---------------------------------------------------------------------------

def constant(c: float) -> RadialProfile:
    c = float(c)
    return RadialProfile(
        f=lambda r: np.full_like(np.asarray(r, dtype=float), c),
        df=_zero,
        ddf=_zero,
        envelope=(lambda r: np.full_like(np.asarray(r, dtype=float), abs(c))),
        name=f"const({c:g})",
    )


def identity() -> RadialProfile:
    """The profile r -> r (i.e. rho itself)."""
    return RadialProfile(
        f=lambda r: np.asarray(r, dtype=float) * 1.0,
        df=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        ddf=_zero,
        envelope=lambda r: 1.0 + np.asarray(r, dtype=float),
        name="rho",
    )


def power(p: float, c: float = 1.0) -> RadialProfile:
    """c * r^p for r > 0."""
    p, c = float(p), float(c)

    def f(r):
        return c * np.asarray(r, dtype=float) ** p

    def df(r):
        r = np.asarray(r, dtype=float)
        return c * p * r ** (p - 1.0) if p != 0 else np.zeros_like(r)

    def ddf(r):
        r = np.asarray(r, dtype=float)
        return c * p * (p - 1.0) * r ** (p - 2.0) if p not in (0.0, 1.0) else np.zeros_like(r)

    env = (lambda r: abs(c) * (1.0 + abs(p)) ** 2 * (1.0 + np.asarray(r, dtype=float)) ** max(p, 0.0))
    return RadialProfile(f, df, ddf, envelope=env, name=f"r^{p:g}")


def gaussian(alpha: float, c: float = 1.0) -> RadialProfile:
    """c * exp(-alpha r^2)."""
    a, c = float(alpha), float(c)
    if a <= 0:
        raise ProfileError("gaussian requires alpha > 0")

    def f(r):
        r = np.asarray(r, dtype=float)
        return c * np.exp(-a * r * r)

    def df(r):
        r = np.asarray(r, dtype=float)
        return -2.0 * a * r * c * np.exp(-a * r * r)

    def ddf(r):
        r = np.asarray(r, dtype=float)
        return (4.0 * a * a * r * r - 2.0 * a) * c * np.exp(-a * r * r)

    k = (1.0 + 2.0 * a) ** 2
    env = lambda r: abs(c) * k * (1.0 + np.asarray(r)) ** 2 * np.exp(-a * np.asarray(r) ** 2)
    return RadialProfile(f, df, ddf, envelope=env, name=f"gaussian(alpha={a:g})")


def gauss(mu: float) -> RadialProfile:
    """exp(-r^2 / (2 mu^2)), whose optimal uncertainty scale is mu."""
    mu = float(mu)
    if mu <= 0:
        raise ProfileError("gauss requires mu > 0")
    return gaussian(1.0 / (2.0 * mu * mu)).with_name(f"gauss:mu={mu:g}")


def polygauss(k: float, alpha: float) -> RadialProfile:
    """r^k exp(-alpha r^2)."""
    k, a = float(k), float(alpha)
    if a <= 0 or k < 0:
        raise ProfileError("polygauss requires k >= 0 and alpha > 0")

    def f(r):
        r = np.asarray(r, dtype=float)
        return r ** k * np.exp(-a * r * r)

    def df(r):
        r = np.asarray(r, dtype=float)
        e = np.exp(-a * r * r)
        base = -2.0 * a * r ** (k + 1.0)
        if k != 0:
            base = base + k * r ** (k - 1.0)
        return base * e

    def ddf(r):
        r = np.asarray(r, dtype=float)
        e = np.exp(-a * r * r)
        out = (4.0 * a * a * r ** (k + 2.0) - 2.0 * a * (2.0 * k + 1.0) * r ** k)
        if k not in (0.0, 1.0):
            out = out + k * (k - 1.0) * r ** (k - 2.0)
        return out * e

    cst = (1.0 + k + 2.0 * a) ** 2
    env = lambda r: cst * (1.0 + np.asarray(r)) ** (k + 2.0) * np.exp(-a * np.asarray(r) ** 2)
    return RadialProfile(f, df, ddf, envelope=env, name=f"polygauss:k={k:g},alpha={a:g}")


def shiftgauss(c0: float, alpha: float) -> RadialProfile:
    """(c0 + r) exp(-alpha r^2)."""
    c0, a = float(c0), float(alpha)
    if a <= 0:
        raise ProfileError("shiftgauss requires alpha > 0")

    def f(r):
        r = np.asarray(r, dtype=float)
        return (c0 + r) * np.exp(-a * r * r)

    def df(r):
        r = np.asarray(r, dtype=float)
        return (1.0 - 2.0 * a * r * (c0 + r)) * np.exp(-a * r * r)

    def ddf(r):
        r = np.asarray(r, dtype=float)
        g = c0 + r
        return (4.0 * a * a * r * r * g - 2.0 * a * g - 4.0 * a * r) * np.exp(-a * r * r)

    cst = (1.0 + abs(c0)) * (1.0 + 2.0 * a) ** 2 * 4.0
    env = lambda r: cst * (1.0 + np.asarray(r)) ** 3 * np.exp(-a * np.asarray(r) ** 2)
    return RadialProfile(f, df, ddf, envelope=env, name=f"shiftgauss:c0={c0:g},alpha={a:g}")


def _smoothstep5(s):
    """Quintic C^2 step from 1 (s<=0) to 0 (s>=1), with derivatives in s."""
    s = np.clip(s, 0.0, 1.0)
    h = 1.0 - (10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5)
    dh = -(30.0 * s**2 - 60.0 * s**3 + 30.0 * s**4)
    ddh = -(60.0 * s - 180.0 * s**2 + 120.0 * s**3)
    return h, dh, ddh


def bump(r0: float, r1: float) -> RadialProfile:
    """1 on [0, r0], C^2 quintic descent on [r0, r1], 0 beyond r1."""
    r0, r1 = float(r0), float(r1)
    if not (0.0 <= r0 < r1):
        raise ProfileError("bump requires 0 <= r0 < r1")
    w = r1 - r0

    def f(r):
        return _smoothstep5((np.asarray(r, dtype=float) - r0) / w)[0]

    def df(r):
        return _smoothstep5((np.asarray(r, dtype=float) - r0) / w)[1] / w

    def ddf(r):
        return _smoothstep5((np.asarray(r, dtype=float) - r0) / w)[2] / (w * w)

    env = lambda r: np.where(np.asarray(r) <= r1, 1.0 + 2.0 / w + 6.0 / (w * w), 0.0)
    return RadialProfile(f, df, ddf, support_hint=(0.0, r1), envelope=env, name=f"bump:r0={r0:g},r1={r1:g}")


def log_bump(r0: float, r1: float) -> RadialProfile:
    """1 on [0, r0], quintic step in log(r) on [r0, r1], 0 beyond r1.

    The transition costs int |u'|^2 r dr = O(1/log(r1/r0)), which makes it the
    right cutoff for near-extremal Hardy sequences.
    """
    r0, r1 = float(r0), float(r1)
    if not (0.0 < r0 < r1):
        raise ProfileError("log_bump requires 0 < r0 < r1")
    L = math.log(r1 / r0)

    def _s(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(r > 0, np.log(np.maximum(r, 1e-300) / r0) / L, -np.inf), r

    def f(r):
        s, _ = _s(r)
        return _smoothstep5(s)[0]

    def df(r):
        s, r = _s(r)
        return np.where(r > 0, _smoothstep5(s)[1] / (L * np.maximum(r, 1e-300)), 0.0)

    def ddf(r):
        s, r = _s(r)
        _, dh, ddh = _smoothstep5(s)
        rr = np.maximum(r, 1e-300)
        return np.where(r > 0, (ddh / L - dh) / (L * rr * rr), 0.0)

    env = lambda r: np.where(np.asarray(r) <= r1, 1.0 + 2.0 / (L * r0) + 6.0 / (L * r0 * r0), 0.0)
    return RadialProfile(f, df, ddf, support_hint=(0.0, r1), envelope=env, name=f"log_bump(r0={r0:g},r1={r1:g})")


def exp_decay(a: float, c: float = 1.0) -> RadialProfile:
    """c * exp(-a r)."""
    a, c = float(a), float(c)
    return RadialProfile(
        f=lambda r: c * np.exp(-a * np.asarray(r, dtype=float)),
        df=lambda r: -a * c * np.exp(-a * np.asarray(r, dtype=float)),
        ddf=lambda r: a * a * c * np.exp(-a * np.asarray(r, dtype=float)),
        envelope=lambda r: abs(c) * (1.0 + a) ** 2 * np.exp(-a * np.asarray(r)),
        name=f"exp(-{a:g}r)",
    )


def ramp_square(r_start: float = 1.0) -> RadialProfile:
    """max(r - r_start, 0)^2: vanishes on the ball of radius r_start, C^1."""
    s = float(r_start)

    def f(r):
        return np.maximum(np.asarray(r, dtype=float) - s, 0.0) ** 2

    def df(r):
        return 2.0 * np.maximum(np.asarray(r, dtype=float) - s, 0.0)

    def ddf(r):
        return np.where(np.asarray(r, dtype=float) > s, 2.0, 0.0)

    return RadialProfile(f, df, ddf, support_hint=(s, math.inf),
                         envelope=lambda r: 4.0 * (1.0 + np.asarray(r)) ** 2, name=f"ramp2({s:g})")


# ---------------------------------------------------------------------------
# Special functions used by the weights
# ---------------------------------------------------------------------------

def coth(r):
    """coth with the Laurent series near 0 to avoid cancellation."""
    r = np.asarray(r, dtype=float)
    small = np.abs(r) < 1e-6
    safe = np.where(small, 1.0, r)
    out = 1.0 / np.tanh(safe)
    series = 1.0 / np.where(small, r, 1.0) + r / 3.0 - r**3 / 45.0
    return np.where(small, series, out)


def r_over_sinh(r):
    """q(r) = r / sinh r, stable for every r >= 0 (q(0) = 1)."""
    r = np.asarray(r, dtype=float)
    small = r < 1e-4
    rs = np.where(small, 1.0, r)
    big = 2.0 * rs * np.exp(-rs) / (-np.expm1(-2.0 * rs))
    series = 1.0 - r * r / 6.0 + 7.0 * r**4 / 360.0
    return np.where(small, series, big)


def r_coth_minus_one(r):
    """r coth r - 1 with a series branch near 0 (value ~ r^2/3)."""
    r = np.asarray(r, dtype=float)
    small = r < 1e-3
    rs = np.where(small, 1.0, r)
    val = rs / np.tanh(rs) - 1.0
    series = r * r / 3.0 - r**4 / 45.0 + 2.0 * r**6 / 945.0
    return np.where(small, series, val)


def rcosh_minus_sinh_over_sinh(r):
    """(r cosh r - sinh r)/sinh r = r coth r - 1."""
    return r_coth_minus_one(r)


# ---------------------------------------------------------------------------
# Grammar for built-in profile ids
# ---------------------------------------------------------------------------

_GRAMMAR = {
    "gauss": (("mu",), lambda p: gauss(p["mu"])),
    "polygauss": (("k", "alpha"), lambda p: polygauss(p["k"], p["alpha"])),
    "shiftgauss": (("c0", "alpha"), lambda p: shiftgauss(p["c0"], p["alpha"])),
    "bump": (("r0", "r1"), lambda p: bump(p["r0"], p["r1"])),
}

_ID_RE = re.compile(r"^\s*([a-z]+)\s*:\s*(.*?)\s*$")


def parse_profile(pid: str) -> RadialProfile:
    """Build a library profile from an id such as ``"polygauss:k=2,alpha=1"``."""
    if not isinstance(pid, str):
        raise ProfileError(f"profile id must be a string, got {type(pid).__name__}")
    m = _ID_RE.match(pid)
    if not m or m.group(1) not in _GRAMMAR:
        raise ProfileError(f"unknown profile id {pid!r}; families: {sorted(_GRAMMAR)}")
    family, body = m.group(1), m.group(2)
    keys, ctor = _GRAMMAR[family]
    params = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        if "=" not in item:
            raise ProfileError(f"malformed parameter {item!r} in {pid!r}")
        k, v = (t.strip() for t in item.split("=", 1))
        if k not in keys:
            raise ProfileError(f"unknown parameter {k!r} for family {family!r}")
        if k in params:
            raise ProfileError(f"duplicate parameter {k!r} in {pid!r}")
        try:
            params[k] = float(v)
        except ValueError as exc:
            raise ProfileError(f"non-numeric value {v!r} for {k!r}") from exc
        if not math.isfinite(params[k]):
            raise ProfileError(f"non-finite value for {k!r}")
    missing = [k for k in keys if k not in params]
    if missing:
        raise ProfileError(f"missing parameters {missing} for family {family!r}")
    return ctor(params).with_name(pid.strip())


def library_ids() -> list[str]:
    """A fixed, representative set of profile ids used by scans and tests."""
    return [
        "gauss:mu=0.5",
        "gauss:mu=1",
        "gauss:mu=2",
        "polygauss:k=1,alpha=1",
        "polygauss:k=2,alpha=1",
        "polygauss:k=2,alpha=0.5",
        "polygauss:k=3,alpha=1",
        "shiftgauss:c0=1,alpha=1",
        "shiftgauss:c0=0.5,alpha=0.7",
        "shiftgauss:c0=2,alpha=1.5",
        "bump:r0=0.5,r1=2",
        "bump:r0=1,r1=3",
    ]


def library() -> dict[str, RadialProfile]:
    return {pid: parse_profile(pid) for pid in library_ids()}


# ---------------------------------------------------------------------------
# Self-consistency check
# ---------------------------------------------------------------------------

def check_derivatives(p: RadialProfile, grid, h: float = 1e-5) -> Tuple[float, float]:
    """Max relative mismatch of (df, ddf) against central differences."""
    r = np.asarray(grid, dtype=float)
    fd1 = (p.f(r + h) - p.f(r - h)) / (2 * h)
    fd2 = (p.df(r + h) - p.df(r - h)) / (2 * h)
    scale1 = np.maximum(np.abs(p.df(r)), 1e-3 * (1 + np.abs(p.f(r))))
    scale2 = np.maximum(np.abs(p.ddf(r)), 1e-3 * (1 + np.abs(p.df(r))))
    e1 = float(np.max(np.abs(fd1 - p.df(r)) / scale1))
    e2 = float(np.max(np.abs(fd2 - p.ddf(r)) / scale2))
    return e1, e2
