import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from hyplab.entropy import (UBoundConfig, entropy, entropy_ratio, ls_scan, make_measure, recentering_check,
                            ubound_L1, ubound_L1_constants, ubound_L2, ubound_L2_constants)
from hyplab.identity import UndefinedError
from hyplab.profiles import (bump, constant, exp_decay, gauss, gaussian, library, polygauss, ramp_square,
                             shiftgauss)


def _oracle_mu(fn, beta, N, G, R=15.0):
    area = {2: 2 * math.pi, 3: 4 * math.pi, 5: 8 * math.pi**2 / 3}[N]
    val = quad(lambda r: fn(r) * math.exp(-beta * r * r) * math.sinh(r) ** (N - 1), 0, R, limit=400,
               epsabs=0, epsrel=1e-12)[0]
    return area * val / G


def test_normalisation_against_oracle():
    m = make_measure(1.0, 3)
    ref = 4 * math.pi * quad(lambda r: math.sinh(r) ** 2 * math.exp(-r * r), 0, 30, epsabs=0, epsrel=1e-13)[0]
    assert m.G == pytest.approx(ref, rel=1e-9)
    assert m.mass == pytest.approx(1.0, abs=1e-9)
    assert make_measure(2.0, 2).G < make_measure(1.0, 2).G
    with pytest.raises(ValueError):
        make_measure(0.0, 3)


def test_constant_has_zero_entropy_and_energy():
    m = make_measure(1.0, 3)
    ent, dirichlet, ratio = entropy_ratio(constant(2.5), m)
    assert ent == 0.0 and dirichlet == 0.0 and math.isnan(ratio)
    with pytest.raises(UndefinedError):
        entropy(replace(constant(0.0), support_hint=(0.0, 3.0)), m)


def test_entropy_and_energy_against_oracle():
    beta, N = 1.0, 3
    m = make_measure(beta, N)
    ent, dirichlet, ratio = entropy_ratio(gauss(math.sqrt(2.0)), m)
    u = lambda r: math.exp(-r * r / 4)
    s = _oracle_mu(lambda r: u(r) ** 2, beta, N, m.G)
    ent_ref = _oracle_mu(lambda r: u(r) ** 2 * math.log(u(r) ** 2 / s), beta, N, m.G)
    dir_ref = _oracle_mu(lambda r: (r / 2 * u(r)) ** 2, beta, N, m.G)
    assert ent == pytest.approx(ent_ref, rel=1e-8)
    assert dirichlet == pytest.approx(dir_ref, rel=1e-8)
    assert math.isfinite(ratio) and ratio > 0


def test_entropy_is_nonnegative_on_random_profiles():
    rng = np.random.default_rng(7)
    m = make_measure(1.0, 3)
    for _ in range(30):
        u = polygauss(float(rng.uniform(0, 3)), float(rng.uniform(0.1, 2))) + gaussian(float(rng.uniform(0.1, 2)),
                                                                                      float(rng.uniform(-1, 1)))
        assert entropy(u, m) >= -1e-12


@settings(max_examples=15)
@given(st.floats(0.01, 100.0))
def test_entropy_is_scale_invariant(c):
    m = make_measure(1.0, 2)
    u = shiftgauss(1.0, 0.5)
    assert entropy(u.scale(c), m) == pytest.approx(c * c * entropy(u, m), rel=1e-10)
    ent, dirichlet, ratio = entropy_ratio(u.scale(c), m)
    assert ratio == pytest.approx(entropy_ratio(u, m)[2], rel=1e-10)


def test_ubound_L1_examples():
    m = make_measure(1.0, 3)
    zero = replace(constant(0.0), support_hint=(0.0, 3.0))
    rep = ubound_L1(zero, m)
    assert rep["general"].lhs == 0.0 and rep["general"].passed
    f = ramp_square(1.0) * exp_decay(1.0)
    rep = ubound_L1(f, m)
    assert "first" in rep and rep["first"].margin >= 0 and rep["general"].passed
    m2 = make_measure(0.5, 2)
    rep = ubound_L1(exp_decay(1.0), m2)
    assert "first" not in rep and rep["general"].margin >= 0
    k = ubound_L1_constants(0.5, 2)
    assert k["C1"] == 1.0 and k["D1"] == pytest.approx(2 + 1 + 1 / math.tanh(1.0))


def test_ubound_L2_examples():
    m = make_measure(1.0, 3)
    b = bump(0.3, 0.9)
    rep = ubound_L2(b, m)
    assert rep.lhs <= rep.terms["u2"] <= rep.rhs
    assert ubound_L2(gauss(1.0), m).margin >= 0
    assert ubound_L2(shiftgauss(1.0, 1.0), make_measure(2.0, 2)).margin >= 0


def test_ubound_L2_constants_close_the_absorption():
    k = ubound_L2_constants(1.0, 3)
    assert k["theta"] == pytest.approx(3 / 8)
    assert k["C2"] == pytest.approx(k["C"] * k["gamma2"] * 8 / 5)
    with pytest.raises(ValueError):
        ubound_L2_constants(1.0, 3, UBoundConfig(alpha2_factor=0.25, gamma2_factor=0.5))


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("N", [2, 3, 5])
def test_ubounds_on_library(beta, N):
    m = make_measure(beta, N)
    for pid, u in library().items():
        assert all(r.passed for r in ubound_L1(u, m).values()), pid
        assert ubound_L2(u, m).passed, pid


def test_ls_scan_examples():
    m = make_measure(1.0, 3)
    assert ls_scan([constant(1.0), constant(3.0)], m) == (0.0, None)
    family = {f"a={a:g}": gaussian(a) for a in (0.1, 0.3, 1.0, 3.0)}
    ls, arg = ls_scan(family, m)
    assert 0 < ls < math.inf and arg in family
    bigger = dict(family, extra=polygauss(1.0, 0.5))
    assert ls_scan(bigger, m)[0] >= ls
    with pytest.raises(ValueError):
        ls_scan([], m)


def test_recentering_estimate():
    m = make_measure(1.0, 3)
    rng = np.random.default_rng(8)
    for _ in range(20):
        u = gaussian(float(rng.uniform(0.1, 2))) + polygauss(1.0, float(rng.uniform(0.2, 2))).scale(
            float(rng.uniform(-2, 2)))
        assert recentering_check(u, m)["passed"] == 1.0
