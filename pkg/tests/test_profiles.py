import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from hyplab.profiles import (ProfileError, bump, check_derivatives, coth, gauss, library, library_ids, log_bump,
                             parse_profile, polygauss, power, r_coth_minus_one, r_over_sinh, shiftgauss)

r = sp.symbols("r", positive=True)
GRID = np.linspace(0.05, 4.0, 37)


def _sympy_check(profile, expr, grid=GRID, rtol=1e-11):
    for k, fn in enumerate((profile.f, profile.df, profile.ddf)):
        ref = sp.lambdify(r, sp.diff(expr, r, k), "numpy")(grid)
        np.testing.assert_allclose(fn(grid), ref, rtol=rtol, atol=1e-13)


@pytest.mark.parametrize("mu", [0.5, 1.0, 2.3])
def test_gauss_matches_symbolic_derivatives(mu):
    _sympy_check(gauss(mu), sp.exp(-r**2 / (2 * sp.Float(mu) ** 2)))


@pytest.mark.parametrize("k,alpha", [(1, 1.0), (2, 0.5), (3.5, 2.0)])
def test_polygauss_matches_symbolic_derivatives(k, alpha):
    _sympy_check(polygauss(k, alpha), r ** sp.Float(k) * sp.exp(-sp.Float(alpha) * r**2))


@pytest.mark.parametrize("c0,alpha", [(1.0, 1.0), (0.5, 0.7)])
def test_shiftgauss_matches_symbolic_derivatives(c0, alpha):
    _sympy_check(shiftgauss(c0, alpha), (sp.Float(c0) + r) * sp.exp(-sp.Float(alpha) * r**2))


def test_bump_is_c2_and_compactly_supported():
    b = bump(0.5, 2.0)
    assert b.f(np.array([0.0, 0.5]))[0] == 1.0
    assert np.all(b.f(np.array([2.0, 3.0, 10.0])) == 0.0)
    for fn in (b.f, b.df, b.ddf):
        for knot in (0.5, 2.0):
            left, right = fn(np.array([knot - 1e-9])), fn(np.array([knot + 1e-9]))
            assert abs(left[0] - right[0]) < 1e-6
    assert b.support_hint == (0.0, 2.0)


def test_log_bump_derivatives_match_finite_differences():
    b = log_bump(1e-3, 1.0)
    err_d, err_dd = check_derivatives(b, np.geomspace(2e-3, 0.9, 40), h=1e-6)
    assert err_d < 1e-5 and err_dd < 1e-3
    assert b.f(np.array([1e-4]))[0] == 1.0 and b.f(np.array([1.5]))[0] == 0.0


def test_special_functions_near_zero_are_finite_and_accurate():
    t = np.array([0.0, 1e-12, 1e-6, 1e-3, 0.5, 30.0, 800.0])
    q = r_over_sinh(t)
    rc = r_coth_minus_one(t)
    assert np.all(np.isfinite(q)) and np.all(np.isfinite(rc))
    ref_q = [1.0] + [float(sp.Float(x) / sp.sinh(sp.Float(x))) for x in t[1:]]
    ref_rc = [0.0] + [float(sp.Float(x) * sp.coth(sp.Float(x)) - 1) for x in t[1:]]
    np.testing.assert_allclose(q, ref_q, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(rc, ref_rc, rtol=1e-10, atol=1e-15)
    assert coth(np.array([2.0]))[0] == pytest.approx(1.0 / math.tanh(2.0))


def test_parse_profile_grammar():
    u = parse_profile("polygauss:k=2,alpha=0.5")
    assert u.f(np.array([1.0]))[0] == pytest.approx(math.exp(-0.5))
    assert parse_profile(" gauss:mu=2 ").name == "gauss:mu=2"
    for bad in ["gauss", "gauss:sigma=1", "gauss:mu=1,mu=2", "gauss:mu=abc", "nope:x=1", "polygauss:k=1",
                "gauss:mu=nan", 3]:
        with pytest.raises(ProfileError):
            parse_profile(bad)


def test_library_profiles_have_consistent_derivatives():
    assert len(library_ids()) == len(set(library_ids())) >= 12
    # grid avoids the knots of the compactly supported entries
    for pid, u in library().items():
        err_d, err_dd = check_derivatives(u, np.linspace(0.1, 2.9, 25))
        assert err_d < 1e-6 and err_dd < 1e-4, pid


@given(st.floats(0.2, 3.0), st.floats(0.1, 3.0))
def test_profile_arithmetic_obeys_product_rule(a, x):
    u = gauss(a) * power(2.0)
    g = math.exp(-x * x / (2 * a * a))
    assert float(u.f(np.array([x]))[0]) == pytest.approx(x * x * g, rel=1e-12)
    dg = -x / (a * a) * g
    assert float(u.df(np.array([x]))[0]) == pytest.approx(2 * x * g + x * x * dg, rel=1e-10)


@given(st.floats(0.1, 5.0), st.floats(-3.0, 3.0))
def test_scaled_profile_is_linear(c, x):
    u = shiftgauss(1.0, 1.0)
    x = abs(x)
    assert float(u.scale(c).f(np.array([x]))[0]) == pytest.approx(c * float(u.f(np.array([x]))[0]), rel=1e-14)
