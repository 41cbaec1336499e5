import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad, trapezoid

from hyplab.integrate import (EstimationError, MonteCarloSpec, NoFiniteTruncationError, QuadratureSpec,
                              integrate_mc, integrate_radial, integrate_radial_detail, sphere_area,
                              truncation_radius)
from hyplab.profiles import RadialProfile, bump, constant, exp_decay, gaussian, polygauss


def test_sphere_area_low_dimensions():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)


@pytest.mark.parametrize("R", [0.5, 2.0, 5.0])
def test_hyperbolic_disk_area(R):
    assert integrate_radial(lambda r: np.ones_like(r), 2, QuadratureSpec(R)) == pytest.approx(
        2 * math.pi * (math.cosh(R) - 1), rel=1e-13)


def test_zero_integrand():
    assert integrate_radial(constant(0.0), 3, QuadratureSpec(4.0)) == 0.0


def test_gaussian_normalisation_against_trapezoid_oracle():
    h = 1e-4
    r = np.arange(0.0, 12.0 + h / 2, h)
    oracle = 4 * math.pi * trapezoid(np.sinh(r) ** 2 * np.exp(-r * r), r)
    got = integrate_radial(gaussian(1.0), 3)
    assert got == pytest.approx(oracle, rel=1e-9)


@pytest.mark.parametrize("N", [2, 3, 5])
@pytest.mark.parametrize("pid_args", [(2.0, 1.0), (1.0, 0.5), (0.5, 2.0)])
def test_against_scipy_quad(N, pid_args):
    u = polygauss(*pid_args)
    ref = sphere_area(N) * quad(lambda r: u.f(r) * math.sinh(r) ** (N - 1), 0, 30, limit=400,
                                epsabs=0, epsrel=1e-13)[0]
    assert integrate_radial(u, N) == pytest.approx(ref, rel=1e-10)


def test_integrable_origin_singularity_uses_graded_panels():
    # r^{-1/2} e^{-r^2} in N = 2 behaves like r^{1/2} near 0
    f = lambda r: r ** -0.5 * np.exp(-r * r)
    ref = 2 * math.pi * quad(lambda r: r ** -0.5 * math.exp(-r * r) * math.sinh(r), 0, 12, epsrel=1e-13)[0]
    assert integrate_radial(f, 2, QuadratureSpec(12.0)) == pytest.approx(ref, rel=1e-9)


def test_error_estimate_is_reported():
    det = integrate_radial_detail(gaussian(1.0), 3)
    assert det.error_estimate < 1e-10 * det.value
    assert det.R > 4


def test_truncation_radius_examples():
    bound = lambda r: math.exp(-r * r + 2 * r) / 8
    R = truncation_radius(lambda r: np.exp(-r * r), 3, 1e-12)
    assert bound(R) < 1e-12 <= bound(R - 1 / 32)
    # the rule keeps the true tail within a small multiple of tol
    tail = 4 * math.pi * quad(lambda r: math.exp(-r * r) * math.sinh(r) ** 2, R, np.inf)[0]
    assert tail < 1e-11
    assert truncation_radius(bump(1.0, 5.0), 3, 1e-12) == 5.0
    with pytest.raises(NoFiniteTruncationError):
        truncation_radius(lambda r: np.exp(-r), 3, 1e-12)


def test_missing_envelope_requires_radius():
    bare = RadialProfile(lambda r: np.exp(-np.asarray(r) ** 2), lambda r: 0 * r, lambda r: 0 * r)
    with pytest.raises(ValueError):
        integrate_radial(bare, 3)


@pytest.mark.parametrize("N,g", [(3, lambda r: np.exp(-r * r)), (2, lambda r: r * r * np.exp(-r * r))])
def test_monte_carlo_agrees_with_quadrature(N, g):
    exact = integrate_radial(g, N, QuadratureSpec(12.0))
    est, err = integrate_mc(lambda x: g(2 * np.arctanh(np.linalg.norm(x, axis=1))), N, MonteCarloSpec(100_000, 5))
    assert abs(est - exact) <= 3 * err


def test_monte_carlo_edge_cases():
    assert integrate_mc(lambda x: np.zeros(len(x)), 3, MonteCarloSpec(1000, 1)) == (0.0, 0.0)
    with pytest.raises(EstimationError):
        integrate_mc(lambda x: np.full(len(x), np.nan), 3, MonteCarloSpec(1000, 1))
    with pytest.raises(ValueError):
        MonteCarloSpec(0)


@given(st.integers(0, 2**32))
def test_monte_carlo_is_deterministic_per_seed(seed):
    f = lambda x: np.exp(-np.sum(x * x, axis=1))
    a = integrate_mc(f, 2, MonteCarloSpec(500, seed))
    b = integrate_mc(f, 2, MonteCarloSpec(500, seed))
    assert a == b


@given(st.floats(0.3, 3.0))
def test_quadrature_is_linear(c):
    u = exp_decay(1.0)
    base = integrate_radial(u, 2, QuadratureSpec(60.0))
    assert integrate_radial(u.scale(c), 2, QuadratureSpec(60.0)) == pytest.approx(c * base, rel=1e-13)


def test_truncation_distinguishes_cutoff_from_underflow():
    # a hard cutoff is accepted even though the bound is large just inside it
    assert truncation_radius(lambda r: np.where(r < 3.0, 1.0, 0.0), 2, 1e-12) == pytest.approx(3.0)
    with pytest.raises(NoFiniteTruncationError):
        truncation_radius(lambda r: np.exp(-0.5 * r), 2, 1e-12)
