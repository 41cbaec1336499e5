import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from hyplab.geometry import (BallPoint, GeometryError, SingularOriginError, coordinate_hessian, div_radial_field,
                             geodesic_distance, grad_radial, jacobi_eigenvalues, laplace_beltrami,
                             laplace_beltrami_coordinates, metric_normalized_eigenvalues, rho)
from hyplab.profiles import constant, gauss, identity, power, r_coth_minus_one

coords = st.lists(st.floats(-0.6, 0.6), min_size=3, max_size=3)


def test_rho_examples():
    assert rho(BallPoint([0.0, 0.0, 0.0])) == 0.0
    assert rho(BallPoint([math.tanh(0.5), 0.0, 0.0])) == pytest.approx(1.0, rel=1e-15)
    oracle = quad(lambda s: 2.0 / (1 - s * s), 0.0, 0.5, epsabs=1e-15, epsrel=1e-13)[0]
    assert rho(BallPoint([0.5, 0.0, 0.0])) == pytest.approx(math.log(3.0), rel=1e-15)
    assert rho(BallPoint([0.5, 0.0, 0.0])) == pytest.approx(oracle, rel=1e-13)


def test_point_validation():
    with pytest.raises(GeometryError):
        BallPoint([0.8, 0.7])
    with pytest.raises(GeometryError):
        BallPoint([0.1])
    with pytest.raises(GeometryError):
        BallPoint([0.1, 0.2], dim=3)


def test_geodesic_distance_examples():
    x = BallPoint([0.3, 0.0, 0.0])
    y = BallPoint([-0.3, 0.0, 0.0])
    assert geodesic_distance(x, x) == 0.0
    assert geodesic_distance(x, y) == pytest.approx(2 * rho(x), rel=1e-14)
    arccosh = math.acosh(1 + 2 * 0.36 / (1 - 0.09) ** 2)
    assert geodesic_distance(x, y) == pytest.approx(arccosh, rel=1e-13)
    with pytest.raises(GeometryError):
        geodesic_distance(x, BallPoint([0.1, 0.1]))


def test_distance_to_origin_matches_rho_for_random_points():
    rng = np.random.default_rng(0)
    o = BallPoint([0.0, 0.0, 0.0])
    for _ in range(20):
        v = rng.normal(size=3)
        p = BallPoint(v / np.linalg.norm(v) * rng.uniform(0, 0.95))
        assert geodesic_distance(p, o) == pytest.approx(rho(p), rel=1e-13, abs=1e-15)


@given(coords, coords, coords)
def test_triangle_inequality_and_symmetry(a, b, c):
    x, y, z = BallPoint(a), BallPoint(b), BallPoint(c)
    assert geodesic_distance(x, y) == pytest.approx(geodesic_distance(y, x), rel=1e-12, abs=1e-14)
    assert geodesic_distance(x, z) <= geodesic_distance(x, y) + geodesic_distance(y, z) + 1e-12


def test_gradient_of_rho_has_unit_length():
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = rng.normal(size=4)
        p = BallPoint(v / np.linalg.norm(v) * rng.uniform(0.01, 0.99))
        assert grad_radial(identity(), p).hyperbolic_norm == pytest.approx(1.0, rel=1e-12)


def test_gradient_of_gaussian_matches_finite_differences():
    u = gauss(1.0)
    p = BallPoint([0.5, 0.0, 0.0])
    r = math.log(3.0)
    assert grad_radial(u, p).hyperbolic_norm == pytest.approx(r * math.exp(-r * r / 2), rel=1e-13)
    h = 1e-6
    F = lambda x: math.exp(-(2 * math.atanh(np.linalg.norm(x))) ** 2 / 2)
    g = np.array([(F(p.x + h * e) - F(p.x - h * e)) / (2 * h) for e in np.eye(3)])
    assert (1 - 0.25) / 2 * np.linalg.norm(g) == pytest.approx(r * math.exp(-r * r / 2), rel=1e-8)
    assert grad_radial(constant(2.0), p).hyperbolic_norm == 0.0
    with pytest.raises(SingularOriginError):
        grad_radial(identity(), BallPoint([0.0, 0.0, 0.0]))


def test_laplacian_examples_and_coordinate_cross_check():
    p = BallPoint.radial(1.0, [1.0, 0.0, 0.0])
    assert laplace_beltrami(identity(), p) == pytest.approx(2.0 / math.tanh(1.0), rel=1e-14)
    assert laplace_beltrami(constant(3.0), p) == 0.0
    lam = 0.7
    v = power(2.0, 1.0 / lam**2)
    assert laplace_beltrami(v, p) == pytest.approx(2 / lam**2 + 4 / lam**2 / math.tanh(1.0), rel=1e-13)
    for u in (gauss(0.8), v):
        assert laplace_beltrami_coordinates(u, p) == pytest.approx(laplace_beltrami(u, p), rel=1e-6)
    origin = BallPoint([0.0, 0.0, 0.0])
    assert laplace_beltrami(gauss(1.0), origin) == pytest.approx(-3.0)
    with pytest.raises(SingularOriginError):
        laplace_beltrami(identity(), origin)


@pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
def test_divergence_examples(r):
    p = BallPoint.radial(r, [0.0, 1.0, 0.0, 0.0])
    N = 4
    assert div_radial_field(identity(), p) == pytest.approx(N + (N - 1) * float(r_coth_minus_one(r)), rel=1e-13)
    a, b = 0.3, 0.4
    expected = r ** (-b - a - 1) * (-b - a + (N - 1) * r / math.tanh(r))
    assert div_radial_field(power(-b - a), p) == pytest.approx(expected, rel=1e-13)
    assert div_radial_field(constant(0.0), p) == 0.0
    with pytest.raises(SingularOriginError):
        div_radial_field(identity(), BallPoint([0.0] * 4))


def test_hessian_of_rho_squared_has_minimum_two():
    rng = np.random.default_rng(2)
    for _ in range(10):
        v = rng.normal(size=3)
        r = rng.uniform(0.1, 3.0)
        p = BallPoint.radial(r, v)
        ev = metric_normalized_eigenvalues(coordinate_hessian(power(2.0), p), p)
        np.testing.assert_allclose(ev, sorted([2.0, 2 * r / math.tanh(r), 2 * r / math.tanh(r)]), rtol=1e-11)
    assert np.all(coordinate_hessian(constant(1.0), p) == 0.0)


@given(st.lists(st.floats(-5, 5), min_size=9, max_size=9))
def test_jacobi_matches_numpy(vals):
    A = np.array(vals).reshape(3, 3)
    A = A + A.T
    np.testing.assert_allclose(jacobi_eigenvalues(A), np.linalg.eigvalsh(A), atol=1e-11 * max(1, np.abs(A).max()))
