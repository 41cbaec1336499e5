import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from hyplab.bessel import InvalidPairError, gaussian_pair, hardy_pair
from hyplab.identity import (ParameterError, RadialField, RegimeError, UndefinedError, hardy_ratio, hup_bracket,
                             remainder_Rp, verify_bessel_identity, verify_ckn, verify_hardy,
                             verify_master_identity, verify_hup)
from hyplab.profiles import constant, gauss, gaussian, identity, polygauss, power, shiftgauss


def _zero(R):
    return replace(constant(0.0), support_hint=(0.0, R))


def _oracle(fn, N, R=20.0):
    area = {2: 2 * math.pi, 3: 4 * math.pi, 4: 2 * math.pi**2, 5: 8 * math.pi**2 / 3}[N]
    return area * quad(lambda r: fn(r) * math.sinh(r) ** (N - 1), 0, R, limit=500, epsabs=0, epsrel=1e-12)[0]


def test_remainder_examples():
    assert remainder_Rp(0.7, 0.7, 3) == pytest.approx(0.0, abs=1e-15)
    assert remainder_Rp(1.0, 0.0, 2) == 1.0
    assert remainder_Rp(2.0, -1.0, 3) == 29.0
    assert remainder_Rp(0.0, 0.5, 1.5) == pytest.approx(0.5**1.5)
    with pytest.raises(ParameterError):
        remainder_Rp(1.0, 1.0, 1.0)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(1.01, 6.0))
def test_remainder_is_nonnegative_and_matches_convexity(a, b, p):
    val = remainder_Rp(a, b, p)
    assert val >= -1e-9 * (abs(a) ** p + abs(b) ** p + 1)
    # convexity oracle: |b|^p >= |a|^p + p|a|^{p-2} a (b - a)
    conv = abs(b) ** p - abs(a) ** p - p * (abs(a) ** (p - 2) * a if a else 0.0) * (b - a)
    assert val == pytest.approx(conv, rel=1e-9, abs=1e-9)


def test_remainder_vanishes_only_on_the_diagonal():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(2, 100_000))
    p = rng.uniform(1.0 + 1e-6, 6.0, size=100_000)
    vals = remainder_Rp(a, b, p)
    assert np.all(vals >= -1e-12)
    assert np.all(vals[np.abs(a - b) > 1e-3] > 0)


def test_master_identity_gaussian_against_oracle():
    u = gaussian(0.5)
    rep = verify_master_identity(u, constant(1.0), RadialField(power(1.0, -1.0)), 2.0, 1.0, 3)
    assert rep.passed and rep.rel_residual < 1e-8
    grad = _oracle(lambda r: (r * math.exp(-r * r / 2)) ** 2, 3)
    assert rep.terms["grad"] == pytest.approx(grad, rel=1e-10)
    assert rep.terms["field"] == pytest.approx(grad, rel=1e-10)
    assert rep.terms["remainder"] == pytest.approx(0.0, abs=1e-12)


def test_master_identity_hardy_type_weight_and_field():
    N, lam = 5, 1.7
    u = polygauss(1.0, 1.0)
    s = power(-1.0, -(N - 2) / 2.0)
    rep = verify_master_identity(u, power(-2.0), RadialField(s), 2.0, lam, N)
    assert rep.rel_residual < 1e-8
    ref = _oracle(lambda r: r**-2 * (math.exp(-r * r) * (1 - 2 * r * r)) ** 2, N)
    assert rep.terms["grad"] == pytest.approx(lam**2 * ref, rel=1e-9)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.5])
def test_master_identity_across_exponents(p):
    u = polygauss(2.0, 1.0)
    rep = verify_master_identity(u, gauss(3.0), RadialField(power(1.0, -1.0)), p, 0.8, 3)
    assert rep.rel_residual < 1e-8
    assert rep.terms["remainder"] > 0


def test_master_identity_zero_function_and_errors():
    rep = verify_master_identity(_zero(5.0), constant(1.0), RadialField(identity()), 2, 1, 3)
    assert rep.passed and rep.lhs == rep.rhs == 0.0
    with pytest.raises(ParameterError):
        verify_master_identity(gaussian(1.0), constant(1.0), RadialField(identity()), 1.0, 1.0, 3)
    with pytest.raises(ParameterError):
        verify_master_identity(gaussian(1.0), constant(1.0), RadialField(identity()), 2.0, 0.0, 3)


def test_master_at_p2_matches_bessel_identity_term_by_term():
    N = 3
    pair, phi = gaussian_pair(N)
    u = shiftgauss(1.0, 1.0)
    s = power(1.0, -1.0)  # phi'/phi for phi = e^{-r^2/2}
    master = verify_master_identity(u, pair.V, RadialField(s), 2.0, 1.0, N)
    bes = verify_bessel_identity(pair.V, pair.W, phi, u, N)
    assert master.terms["remainder"] == pytest.approx(bes.terms["quotient"], rel=1e-9)
    assert master.terms["grad"] == pytest.approx(bes.terms["grad"], rel=1e-12)


def test_bessel_identity_examples():
    N = 4
    pair, phi = hardy_pair(N)
    rep = verify_bessel_identity(pair.V, pair.W, phi, polygauss(2.0, 1.0), N)
    assert rep.rel_residual < 1e-8
    assert rep.terms["grad"] - rep.terms["potential"] >= 0
    pair3, phi3 = gaussian_pair(3)
    rep = verify_bessel_identity(pair3.V, pair3.W, phi3, gaussian(1.0) * (constant(1.0) + power(2.0)), 3)
    assert rep.rel_residual < 1e-8
    rep = verify_bessel_identity(constant(1.0), constant(0.0), constant(1.0), gaussian(1.0), 3)
    assert rep.passed and rep.terms["grad"] == rep.terms["quotient"]
    with pytest.raises(InvalidPairError):
        verify_bessel_identity(constant(1.0), constant(1.0), constant(1.0), gaussian(1.0), 3)


@pytest.mark.parametrize("N", [3, 4, 6])
def test_hardy_ratio_bound(N):
    for u in (gaussian(1.0), polygauss(2.0, 0.5), shiftgauss(1.0, 2.0)):
        assert hardy_ratio(u, N) >= (N - 2) ** 2 / 4
        assert verify_hardy(u, N).rel_residual < 1e-8
    with pytest.raises(UndefinedError):
        hardy_ratio(_zero(3.0), N)


def test_ckn_case1_improved_uncertainty_specialisation():
    rep = verify_ckn("ineq_c1", -1.0, 0.0, gauss(1.0), 3)
    assert rep.rel_residual < 1e-8
    assert rep.extra["slack"] >= 0


def test_ckn_zero_function_and_regime_errors():
    rep = verify_ckn("idt_c2", 3.0, 1.0, _zero(4.0), 3)
    assert rep.passed and all(v == 0 for v in rep.terms.values())
    with pytest.raises(RegimeError):
        verify_ckn("ineq_c1", 0.0, 2.0, gaussian(1.0), 3)
    with pytest.raises(RegimeError):
        verify_ckn("idt_c2", 0.0, 0.0, gaussian(1.0), 3)
    with pytest.raises(RegimeError):
        verify_ckn("idt_c2", 1.0, 0.0, gaussian(1.0), 3)
    with pytest.raises(ParameterError):
        verify_ckn("case9", 0.0, 0.0, gaussian(1.0), 3)


def test_ckn_cross_term_example_outside_its_stated_regime():
    # a = 2, b = 2, N = 5 has b - a + 1 = 1 > 0, which is the case-4 regime
    u = polygauss(3.0, 1.0)
    with pytest.raises(RegimeError):
        verify_ckn("idt_c3", 2.0, 2.0, u, 5)
    rep = verify_ckn("idt_c3", 2.0, 2.0, u, 5, enforce_regime=False)
    assert rep.rel_residual < 1e-7
    assert verify_ckn("idt_c4", 2.0, 2.0, u, 5).rel_residual < 1e-7


@pytest.mark.parametrize("case,a,b,N", [("idt_c2", 3.0, 1.0, 3), ("idt_c3", 3.5, 1.5, 4), ("idt_c4", 1.0, 1.0, 4)])
def test_ckn_identities(case, a, b, N):
    u = polygauss(4.0, 1.0)
    assert verify_ckn(case, a, b, u, N).rel_residual < 1e-8


@pytest.mark.parametrize("mu", [0.6, 1.0, 1.7])
def test_hup_gaussian_is_extremal(mu):
    rep, lam, d1 = verify_hup(gauss(mu), 3)
    assert lam == pytest.approx(mu, rel=1e-8)
    assert abs(d1) < 1e-8 * rep.terms["A"]


def test_hup_identity_and_scaling():
    u = shiftgauss(1.0, 1.0)
    rep, lam, d1 = verify_hup(u, 2)
    assert rep.rel_residual < 1e-8 and d1 > 0
    rep5, lam5, _ = verify_hup(u.scale(5.0), 2)
    assert lam5 == pytest.approx(lam, rel=1e-12)
    assert rep5.rel_residual == pytest.approx(rep.rel_residual, abs=1e-14)
    assert hup_bracket(np.array([0.0]), 3)[0] == 3.0
    with pytest.raises(UndefinedError):
        verify_hup(_zero(2.0), 3)
