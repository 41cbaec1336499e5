import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from hyplab.identity import UndefinedError
from hyplab.integrate import QuadratureSpec
from hyplab.profiles import constant, gauss, gaussian, library, polygauss, shiftgauss
from hyplab.stability import (GaussianCandidate, IncompleteScanError, build_k_table, deficits, gaussian_distance,
                              in_A_beta, mass_weight, scale_noninvariant_check, verify_stability_chain)


@pytest.fixture(scope="module")
def k_table_n2():
    return build_k_table(2, 2.0, points=6)


def test_gaussian_has_zero_deficits():
    rep = deficits(gauss(1.0), 3)
    assert abs(rep.delta1) < 1e-8 and abs(rep.delta2) < 1e-8
    assert rep.lambda_opt == pytest.approx(1.0, rel=1e-8)
    assert rep.d1 < 1e-6


def test_delta2_factorises_on_random_profiles():
    rng = np.random.default_rng(6)
    for _ in range(20):
        u = polygauss(float(rng.uniform(0, 3)), float(rng.uniform(0.3, 2))) + gaussian(float(rng.uniform(0.2, 2)))
        rep = deficits(u, int(rng.integers(2, 5)), with_distance=False)
        scale = rep.A * rep.B + (rep.delta1 + rep.C / 2) ** 2
        assert abs(rep.delta2 - rep.delta1 * (rep.delta1 + rep.C)) <= 1e-10 * scale
        assert rep.delta1 >= -1e-10 * scale


def test_delta1_tilde_identity_and_positivity():
    u = gaussian(1.0) + polygauss(2.0, 1.0)
    rep = deficits(u, 2, with_distance=False)
    assert rep.delta1 > 0
    assert rep.delta1_tilde_residual < 1e-7 * max(1.0, abs(rep.delta1_tilde_direct))


def test_distance_to_a_member_is_zero():
    d, cand = gaussian_distance(gaussian(2.0, 3.0), "unit", 3)
    assert d < 1e-8
    assert cand.c == pytest.approx(3.0, rel=1e-8) and cand.alpha == pytest.approx(2.0, rel=1e-8)


def test_weighted_distance_is_smaller():
    u = gaussian(1.0) + polygauss(1.0, 1.5)
    assert gaussian_distance(u, "M", 3)[0] <= gaussian_distance(u, "unit", 3)[0]
    assert np.all(mass_weight(np.linspace(0, 10, 50), 3) <= 1.0)


def test_distance_matches_brute_force_grid():
    u = shiftgauss(1.0, 1.0)
    N = 3
    d, cand = gaussian_distance(u, "unit", N)
    # independent oracle: scipy quadrature of the three moments on a (c, alpha) grid
    area = 4 * math.pi
    I = lambda fn: area * quad(lambda r: fn(r) * math.sinh(r) ** 2, 0, 12, limit=200, epsrel=1e-12)[0]
    uu = I(lambda r: ((1 + r) * math.exp(-r * r)) ** 2)
    best = math.inf
    for a in np.linspace(0.8 * cand.alpha, 1.2 * cand.alpha, 21):
        ug = I(lambda r: (1 + r) * math.exp(-r * r) * math.exp(-a * r * r))
        gg = I(lambda r: math.exp(-2 * a * r * r))
        for c in np.linspace(0.8 * cand.c, 1.2 * cand.c, 41):
            best = min(best, uu - 2 * c * ug + c * c * gg)
    assert d**2 <= best + 1e-10
    assert d**2 == pytest.approx(best, rel=1e-3, abs=1e-8)


def test_boundary_minimiser_is_flagged():
    d, cand = gaussian_distance(gaussian(5.0), "unit", 3, alpha_bracket=(0.01, 1.0))
    assert cand.at_boundary and cand.alpha == pytest.approx(1.0)
    with pytest.raises(ValueError):
        GaussianCandidate(1.0, 0.0)
    with pytest.raises(ValueError):
        gaussian_distance(gaussian(1.0), "unit", 3, alpha_bracket=(1.0, 0.5))


def test_in_A_beta_examples():
    u = gauss(1.0)
    assert in_A_beta(u, 2.0, 3)
    assert not in_A_beta(u, 0.5, 3)
    assert in_A_beta(gauss(3.0), 3.0, 3)
    with pytest.raises(UndefinedError):
        deficits(constant(0.0), 3, QuadratureSpec(5.0))


def test_chain_for_the_gaussian_holds_with_equality(k_table_n2):
    rep = verify_stability_chain(gauss(1.0), 2, 2.0, k_table_n2)
    assert rep.branch == "A_beta" and rep.passed
    for c in rep.checks:
        assert abs(c.lhs) < 1e-8 and abs(c.rhs) < 1e-6


def test_chain_for_perturbed_profile(k_table_n2):
    u = gaussian(1.0) + polygauss(2.0, 1.0)
    rep = verify_stability_chain(u, 2, 2.0, k_table_n2)
    assert rep.branch == "A_beta" and rep.passed
    assert all(c.K > 0 for c in rep.checks)


def test_chain_pass_fail_invariant_under_scaling(k_table_n2):
    u = shiftgauss(1.0, 1.0)
    a = verify_stability_chain(u, 2, 2.0, k_table_n2)
    b = verify_stability_chain(u.scale(7.0), 2, 2.0, k_table_n2)
    assert a.passed == b.passed
    assert b.deficits.delta1 == pytest.approx(49 * a.deficits.delta1, rel=1e-9)
    assert b.deficits.d1 ** 2 == pytest.approx(49 * a.deficits.d1 ** 2, rel=1e-7)
    for ca, cb in zip(a.checks, b.checks):
        factor = 49.0**2 if ca.name.endswith("delta2") else 49.0
        assert cb.lhs == pytest.approx(factor * ca.lhs, rel=1e-7, abs=1e-12)


def test_chain_needs_matching_table(k_table_n2):
    with pytest.raises(IncompleteScanError):
        verify_stability_chain(gauss(1.0), 3, 2.0, k_table_n2)


def test_scale_noninvariant_identity():
    rep = scale_noninvariant_check(gauss(1.0), 3, K=1.0)
    assert rep.terms["weighted_gradient"] < 1e-12
    u = polygauss(2.0, 1.0)
    rep = scale_noninvariant_check(u, 3)
    assert rep.rel_residual < 1e-8
    assert rep.extra["slack"] >= 0


def test_homogeneity_and_library_sign():
    for pid, u in library().items():
        rep = deficits(u, 3, with_distance=False)
        rep3 = deficits(u.scale(3.0), 3, with_distance=False)
        assert rep3.delta1 == pytest.approx(9 * rep.delta1, rel=1e-10, abs=1e-12), pid
        assert rep3.lambda_opt == pytest.approx(rep.lambda_opt, rel=1e-10), pid
        assert rep.delta1 >= -1e-10 * rep.A, pid
        is_gauss = pid.startswith("gauss")
        assert (abs(rep.delta1) < 1e-8 * rep.A) == is_gauss, pid


def test_chain_monotone_family():
    ts = np.linspace(0.0, 1.0, 6)
    d1s, dist2 = [], []
    for t in ts:
        u = gauss(1.0) + polygauss(2.0, 1.0).scale(float(t)) if t > 0 else gauss(1.0)
        rep = deficits(u, 3)
        d1s.append(rep.delta1)
        dist2.append(rep.d1**2)
    assert np.all(np.diff(d1s) > 0) and np.all(np.diff(dist2) > 0)
    ratio = np.array(d1s[1:]) / np.array(dist2[1:])
    assert np.all(ratio > 0) and ratio.max() / ratio.min() < 100


@settings(max_examples=10)
@given(st.floats(0.3, 3.0))
def test_lambda_opt_recovers_gaussian_width(mu):
    assert deficits(gauss(mu), 2, with_distance=False).lambda_opt == pytest.approx(mu, rel=1e-8)
