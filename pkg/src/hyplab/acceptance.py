"""Acceptance criteria 1 to 11 as executable checks.

Each ``criterion_k`` returns ``(passed, detail)``.  ``run_all`` executes them
in order and prints one line per criterion.
"""

from __future__ import annotations

import json
import math
import time
from typing import Callable, Dict, List, Tuple

import numpy as np

from .bessel import gaussian_pair, hardy_pair, integrate_bessel_system, solve_bessel_ode, verify_pair
from .entropy import ls_scan, make_measure, recentering_check, ubound_L1, ubound_L2
from .geometry import BallPoint, coordinate_hessian, jacobi_eigenvalues, metric_normalized_eigenvalues
from .identity import (RadialField, hardy_ratio, verify_bessel_identity, verify_ckn, verify_hup,
                       verify_master_identity)
from .integrate import MonteCarloSpec, QuadratureSpec, integrate_mc, integrate_radial, radial_nodes, sphere_area
from .profiles import (RadialProfile, bump, constant, gauss, gaussian, identity, library, parse_profile, polygauss,
                       log_bump, power, ramp_square, shiftgauss)
from .spectral import (WeightFamily, hessian_branches, hessian_eigen_bound, hessian_profile, locate_threshold,
                       poincare_constant_scan, potential_at_zero, potential_scan, potential_value,
                       sturm_liouville_gap)
from .stability import (build_k_table, deficits, gaussian_distance, mass_weight, scale_noninvariant_check,
                        verify_stability_chain)

__all__ = ["CRITERIA", "run_all"] + [f"criterion_{k}" for k in range(1, 12)]

Result = Tuple[bool, str]


def _fmt(x: float) -> str:
    return f"{x:.3g}"


# ---------------------------------------------------------------------------

def criterion_1() -> Result:
    """Weighted Lp identity with remainder on a grid of fields, profiles and scales."""
    t0 = time.perf_counter()
    # phi = e^{-rho^2/2} / (1 + rho): phi'/phi = -rho - 1/(1 + rho) never vanishes
    log_der = RadialProfile(lambda r: -np.asarray(r, dtype=float) - 1.0 / (1.0 + np.asarray(r, dtype=float)),
                            lambda r: -1.0 + 1.0 / (1.0 + np.asarray(r, dtype=float)) ** 2,
                            lambda r: -2.0 / (1.0 + np.asarray(r, dtype=float)) ** 3, name="phi'/phi")
    fields = {
        "neg_rho": (constant(1.0), -identity()),
        "log_derivative": (constant(1.0), log_der),
        "power": (power(-1.0), power(0.5)),      # A = rho^{-2b}, s = rho^{b-a} with b = 1/2, a = 0
    }
    profiles = {"gauss": gauss(1.0), "polygauss": polygauss(2.0, 1.0)}
    worst, count = 0.0, 0
    for N in (2, 3, 5):
        for p in (2.0, 3.0):
            for lam in (0.5, 1.0, 2.0):
                for u in profiles.values():
                    for A, s in fields.values():
                        rep = verify_master_identity(u, A, RadialField(s), p, lam, N)
                        worst = max(worst, rep.rel_residual)
                        count += 1
    dt = time.perf_counter() - t0
    ok = count >= 12 and worst < 1e-8 and dt < 10.0
    return ok, f"max rel_residual {_fmt(worst)} over {count} configurations"


def criterion_2() -> Result:
    worst_d, worst_lam, worst_res = 0.0, 0.0, 0.0
    for mu in (0.5, 1.0, 2.0):
        for N in (2, 3):
            rep, lam, d1 = verify_hup(gauss(mu), N)
            worst_d = max(worst_d, abs(d1))
            worst_lam = max(worst_lam, abs(lam - mu))
            worst_res = max(worst_res, rep.rel_residual)
    others = ["polygauss:k=1,alpha=1", "polygauss:k=3,alpha=0.5", "shiftgauss:c0=1,alpha=1",
              "shiftgauss:c0=0.5,alpha=0.7", "bump:r0=0.5,r1=2"]
    worst_other = 0.0
    for pid in others:
        for N in (2, 3):
            worst_other = max(worst_other, verify_hup(parse_profile(pid), N)[0].rel_residual)
    ok = worst_d < 1e-8 and worst_lam < 1e-8 and worst_other < 1e-8
    return ok, (f"Gaussian |delta1| {_fmt(worst_d)}, |lambda_opt - mu| {_fmt(worst_lam)}, "
                f"non-Gaussian residual {_fmt(worst_other)}")


def criterion_3() -> Result:
    t = np.geomspace(1e-6, 0.999, 4000)
    e_inf, e_lim = hessian_eigen_bound("euclidean_rho2", t)
    h_inf, _ = hessian_eigen_bound("hyperbolic_rho2", t)
    _, h_rad = hessian_branches("hyperbolic_rho2", t)
    h_min = float(np.min(h_rad))
    # Dense cross-check: P Id + Q x x^T has eigenvalues P (tangential) and P + t^2 Q (radial).
    rng = np.random.default_rng(3)
    worst = 0.0
    rho2 = power(2.0)
    for k in range(20):
        N = 3 if k % 2 else 4
        tt = float(rng.uniform(0.05, 0.95))
        d = rng.standard_normal(N)
        x = BallPoint(tt * d / np.linalg.norm(d))
        for model in ("euclidean_rho2", "hyperbolic_rho2"):
            hp = hessian_profile(model, N)
            P, Q = float(hp.P(tt)), float(hp.Q(tt))
            M = P * np.eye(N) + Q * np.outer(x.x, x.x)
            tang, rad = (float(v) for v in hessian_branches(model, np.array(tt)))
            if model == "euclidean_rho2":
                ev = jacobi_eigenvalues(M)
                closed = np.sort([tang] * (N - 1) + [rad])
            else:
                ev = metric_normalized_eigenvalues(M, x)
                closed = np.sort([tang] * (N - 1) + [rad])
                ref = metric_normalized_eigenvalues(coordinate_hessian(rho2, x), x)
                worst = max(worst, float(np.max(np.abs(ev - ref) / np.maximum(1.0, np.abs(ref)))))
            worst = max(worst, float(np.max(np.abs(ev - closed) / np.maximum(1.0, np.abs(closed)))))
    ok = e_inf >= 8 - 1e-9 and abs(e_lim - 8) <= 1e-6 and abs(h_min - 2) <= 1e-10 and h_inf >= 2 - 1e-10 \
        and worst < 1e-10
    return ok, (f"euclidean inf {e_inf:.12g} (t->0 limit {e_lim:.12g}), hyperbolic min {h_min:.12g}, "
                f"dense cross-check {_fmt(worst)} at 20 points")


def _wronskian_drift(pair, r0, r1, y1, y2) -> float:
    _, p1, s1 = integrate_bessel_system(pair, r0, y1[0], y1[1], r1, fixed_step=1e-3)
    _, p2, s2 = integrate_bessel_system(pair, r0, y2[0], y2[1], r1, fixed_step=1e-3)
    W = p1 * s2 - p2 * s1
    return float(np.max(np.abs(W - W[0])) / abs(W[0]))


def criterion_4() -> Result:
    grid = np.linspace(0.1, 5.0, 400)
    pair_res, solve_err, drift = 0.0, 0.0, 0.0
    for N in (3, 4, 5):
        for make in (hardy_pair, gaussian_pair):
            pair, phi = make(N)
            pair_res = max(pair_res, verify_pair(pair, phi, grid))
            # forward from 0.1; the Gaussian solution is recessive, so the step control is tight
            sol = solve_bessel_ode(pair, 0.1, float(phi(0.1)), float(phi.d(0.1)), 5.0, step_tol=1e-13)
            solve_err = max(solve_err, float(np.max(np.abs(sol.f(grid) - phi.f(grid)) / np.abs(phi.f(grid)))))
            drift = max(drift, _wronskian_drift(pair, 0.1, 5.0, (float(phi(0.1)), float(phi.d(0.1))), (0.0, 1.0)))
    ok = pair_res < 1e-10 and solve_err < 1e-6 and drift < 1e-6
    return ok, f"pair residual {_fmt(pair_res)}, ODE rel error {_fmt(solve_err)}, Wronskian drift {_fmt(drift)}"


def hardy_witness(N: int, k: int, cutoff: RadialProfile = None) -> RadialProfile:
    """rho^{(2-N)/2 + 1/k} times a smooth cutoff: near-extremal for the Hardy quotient.

    The default cutoff descends in log(rho) over [1e-6, 1] so that its own
    energy does not swamp the O(1/k) approach to the constant.
    """
    cutoff = cutoff or log_bump(1e-6, 1.0)
    return power((2.0 - N) / 2.0 + 1.0 / k) * cutoff


def criterion_5() -> Result:
    worst = math.inf
    for N in (3, 4, 5):
        c = (N - 2) ** 2 / 4.0
        for u in library().values():
            worst = min(worst, hardy_ratio(u, N) - c)
    sharp = {}
    for N in (3, 4, 5):
        c = (N - 2) ** 2 / 4.0
        sharp[N] = hardy_ratio(hardy_witness(N, 20), N) / c - 1.0
    ok = worst >= -1e-10 and all(0 <= v <= 0.05 for v in sharp.values())
    return ok, (f"min (ratio - (N-2)^2/4) {_fmt(worst)}; k=20 witness excess "
                + ", ".join(f"N={N}: {v:.2%}" for N, v in sharp.items()))


CKN_CONFIGS: Dict[str, List[Tuple[float, float, int]]] = {
    "ineq_c1": [(-1.0, 0.0, 3), (0.0, 0.5, 3), (-0.5, 0.2, 4), (0.5, 1.0, 4), (0.0, 1.0, 5), (-1.0, 1.5, 5)],
    "idt_c2": [(3.0, 1.5, 3), (4.0, 2.0, 5), (3.5, 1.0, 4), (4.0, 2.5, 5), (2.5, 0.5, 3), (5.0, 3.0, 6)],
    "idt_c3": [(3.0, 1.5, 3), (4.0, 2.0, 5), (3.5, 1.0, 4), (4.0, 2.5, 5), (2.5, 0.5, 3), (5.0, 3.0, 6)],
    "idt_c4": [(1.0, 1.0, 4), (2.0, 2.0, 5), (0.5, 0.5, 3), (1.0, 1.5, 5), (1.5, 2.0, 4), (0.0, 1.0, 3)],
}


def ckn_profile(a: float, b: float, N: int) -> RadialProfile:
    """rho^k e^{-rho^2} with k large enough for every CKN integral to converge at the origin."""
    k = max(2.0, math.ceil(max(a, b) + 2.0 - N / 2.0) + 1.0)
    return polygauss(k, 1.0)


def criterion_6() -> Result:
    worst, slack, n = 0.0, math.inf, {}
    for case, configs in CKN_CONFIGS.items():
        n[case] = 0
        for a, b, N in configs:
            for u in (ckn_profile(a, b, N), ckn_profile(a, b, N) * shiftgauss(1.0, 0.3)):
                rep = verify_ckn(case, a, b, u, N)
                worst = max(worst, rep.rel_residual)
                if case == "ineq_c1":
                    slack = min(slack, rep.extra["slack"])
            n[case] += 1
    for u in library().values():
        slack = min(slack, verify_ckn("ineq_c1", 0.0, 0.5, u, 3).extra["slack"])
    ok = worst < 1e-7 and slack >= -1e-10 and all(v >= 6 for v in n.values())
    return ok, f"max rel_residual {_fmt(worst)} over {sum(n.values())} configurations; min case-1 slack {_fmt(slack)}"


def criterion_7() -> Result:
    t0 = time.perf_counter()
    grid = np.geomspace(0.05, 1.0, 10)
    min_K, max_delta = math.inf, 0.0
    for N in (2, 3):
        scan = poincare_constant_scan("A", grid, N)
        if not all(e.valid for e in scan.entries):
            return False, f"weight A scan failed for N={N}: " + "; ".join(e.error for e in scan.entries if e.error)
        min_K = min(min_K, scan.inf_K)
        max_delta = max(max_delta, max(e.max_delta for e in scan.entries))
    fixed = min(sturm_liouville_gap(WeightFamily("fixed_beta", 1.0), N, l).gap for N in (2, 3) for l in range(3))
    b_margin, thresholds = math.inf, {}
    for N in (2, 3):
        beta_star = locate_threshold(N)
        thresholds[N] = beta_star
        scan = poincare_constant_scan("B", np.geomspace(beta_star, 10 * beta_star, 5), N)
        for e in scan.entries:
            if not e.valid:
                return False, f"weight B scan failed at lambda={e.lam:.4g}: {e.error}"
            vmin = potential_scan(e.lam, N)[0]
            b_margin = min(b_margin, e.K / (vmin / 2.0) - 1.0)
            max_delta = max(max_delta, e.max_delta)
    dt = time.perf_counter() - t0
    ok = min_K > 0 and max_delta < 0.01 and fixed > 0 and b_margin >= -0.01 and dt < 60
    return ok, (f"weight A min K {min_K:.4g}, fixed_beta(1) gap {fixed:.4g}, weight B min K/(minV/2)-1 "
                f"{b_margin:.3g} (beta* " + ", ".join(f"N={N}: {v:.6g}" for N, v in thresholds.items())
                + f"), max richardson delta {max_delta:.2g}")


def _series_vs_extrapolation(lam: float, N: int) -> float:
    """Fit V on small r as a polynomial in r^2 and compare the intercept with the series value."""
    r = np.array([0.01, 0.02, 0.03, 0.04])
    V = potential_value(r, lam, N)
    coeffs = np.polyfit(r * r, V, 3)
    return abs(coeffs[-1] - potential_at_zero(lam, N))


def criterion_8() -> Result:
    series = max(_series_vs_extrapolation(lam, N) for lam in (0.3, 1.0, 3.0) for N in (2, 3, 5))
    min_above, below_found = math.inf, {}
    for N in (2, 3, 5):
        beta_star = locate_threshold(N)
        for lam in beta_star * np.geomspace(1.0, 20.0, 12):
            min_above = min(min_above, potential_scan(lam, N)[0])
        below_found[N] = min(potential_scan(lam, N)[0] for lam in beta_star / 4 * np.geomspace(0.05, 1.0, 8))
    ok = series < 1e-6 and min_above > 0 and all(v < 0 for v in below_found.values())
    return ok, (f"series vs extrapolation {_fmt(series)}, min V above threshold {min_above:.4g}, "
                "min V below threshold/4 " + ", ".join(f"N={N}: {v:.3g}" for N, v in below_found.items()))


def stability_profiles() -> Dict[str, RadialProfile]:
    """The library plus eight further profiles (twenty in total)."""
    out = dict(library())
    extra = ["gauss:mu=0.7", "gauss:mu=3", "polygauss:k=4,alpha=2", "polygauss:k=1,alpha=0.3",
             "shiftgauss:c0=3,alpha=0.5", "shiftgauss:c0=0.2,alpha=2", "bump:r0=0,r1=1.5", "bump:r0=2,r1=4"]
    out.update({pid: parse_profile(pid) for pid in extra})
    return out


def _grid_distance_oracle(u: RadialProfile, N: int, tag: str, alphas: np.ndarray) -> Tuple[float, float, float]:
    """Brute-force min over a 200 x 200 (c, alpha) grid of int (u - c e^{-alpha rho^2})^2 w."""
    R = 40.0
    r, w, _ = radial_nodes(R, QuadratureSpec(R, 512, 16))
    vol = sphere_area(N) * np.sinh(r) ** (N - 1) * w
    if tag == "M":
        vol = vol * mass_weight(r, N)
    uf = u.f(r)
    G = np.exp(-np.outer(alphas, r * r))
    ug = G @ (uf * vol)
    gg = (G * G) @ vol
    uu = float(np.dot(uf * uf, vol))
    cmax = 2.0 * float(np.max(np.abs(ug / gg)))
    cs = np.linspace(-cmax, cmax, 200)
    # int (u - c g)^2 = uu - 2 c ug + c^2 gg, evaluated on the full grid
    D = uu - 2.0 * np.outer(ug, cs) + np.outer(gg, cs * cs)
    i, j = np.unravel_index(int(np.argmin(D)), D.shape)
    return float(D[i, j]), float(cs[j]), float(alphas[i])


def criterion_9() -> Result:
    profs = stability_profiles()
    d2_res, tilde_res, sni_res = 0.0, 0.0, 0.0
    for N in (2, 3):
        for u in profs.values():
            rep = deficits(u, N, with_distance=False)
            # delta2 + C^2/4 = A B on one side, (delta1 + C/2)^2 on the other
            d2_res = max(d2_res, abs(rep.delta2 - rep.delta1 * (rep.delta1 + rep.C))
                         / (rep.A * rep.B + (rep.delta1 + 0.5 * rep.C) ** 2))
            tilde_res = max(tilde_res, rep.delta1_tilde_residual / max(1.0, abs(rep.delta1_tilde_direct)))
            sni_res = max(sni_res, scale_noninvariant_check(u, N).rel_residual)
    # optimiser vs brute-force grid
    oracle_gap = 0.0
    for pid in ("shiftgauss:c0=1,alpha=1", "polygauss:k=2,alpha=1", "bump:r0=0.5,r1=2", "gauss:mu=1"):
        u = profs[pid]
        for tag in ("unit", "M"):
            d, cand = gaussian_distance(u, tag, 3)
            lo, hi = cand.alpha / 3.0, cand.alpha * 3.0
            grid_min, _, _ = _grid_distance_oracle(u, 3, tag, np.geomspace(lo, hi, 200))
            norm2 = float(integrate_radial(lambda r: u.f(r) ** 2 * (mass_weight(r, 3) if tag == "M" else 1.0), 3,
                                           QuadratureSpec(40.0)))
            oracle_gap = max(oracle_gap, abs(d * d - grid_min) / norm2)
    # chains on the library, at beta = 2 and at the threshold
    failures, chains = [], 0
    for N in (2, 3):
        for beta in (2.0, locate_threshold(N)):
            table = build_k_table(N, beta)
            for pid, u in library().items():
                ch = verify_stability_chain(u, N, beta, table)
                chains += 1
                if not ch.passed:
                    failures.append(f"{pid} N={N} beta={beta:.3g}")
    ok = d2_res < 1e-10 and tilde_res < 1e-7 and sni_res < 1e-8 and oracle_gap < 1e-4 and not failures
    detail = (f"delta2 identity {_fmt(d2_res)}, tilde identity {_fmt(tilde_res)}, scale identity {_fmt(sni_res)}, "
              f"distance vs grid oracle {_fmt(oracle_gap)}, chains passed {chains - len(failures)}/{chains}")
    if failures:
        detail += "; failing: " + ", ".join(failures[:4])
    return ok, detail


def _vanishing_profiles() -> Dict[str, RadialProfile]:
    """Profiles that vanish on the unit ball (the sharper U-bound case)."""
    return {"ramp_gauss": (ramp_square(1.0) * gaussian(0.5)).with_name("ramp_gauss"),
            "annulus_bump": (bump(2.0, 3.0) - bump(1.0, 1.5)).with_name("annulus_bump")}


def criterion_10() -> Result:
    mass_err, l1_first, l1_gen, l2, recenter = 0.0, math.inf, math.inf, math.inf, math.inf
    ls_vals = []
    profs = dict(library())
    profs.update(_vanishing_profiles())
    trial = {f"gauss:mu={mu:g}": gauss(mu) for mu in (0.3, 0.5, 0.8, 1.2, 2.0)}
    trial.update({f"shift:{c}": gaussian(0.5) * (constant(1.0) + power(1.0, c)) for c in (0.5, 1.0, 2.0)})
    n_first = 0
    for beta in (0.5, 1.0, 2.0):
        for N in (2, 3, 5):
            m = make_measure(beta, N)
            mass_err = max(mass_err, abs(m.mass - 1.0))
            for u in profs.values():
                reps = ubound_L1(u, m)
                l1_gen = min(l1_gen, reps["general"].margin)
                if "first" in reps:
                    l1_first = min(l1_first, reps["first"].margin)
                    n_first += 1
                l2 = min(l2, ubound_L2(u, m).margin)
            ls_vals.append(ls_scan(trial, m)[0])
    m = make_measure(1.0, 3)
    for u in stability_profiles().values():
        recenter = min(recenter, recentering_check(u, m)["margin"])
    ok = (mass_err <= 1e-9 and l1_first >= 0 and l1_gen >= 0 and l2 >= 0 and n_first > 0
          and all(math.isfinite(v) for v in ls_vals) and recenter >= -1e-10)
    return ok, (f"mass error {_fmt(mass_err)}, L1 margins first {l1_first:.3g} / general {l1_gen:.3g}, "
                f"L2 margin {l2:.3g}, max LS ratio {max(ls_vals):.4g}, recentering margin {recenter:.3g}")


def _mc_agreement() -> Tuple[float, int]:
    cases = [
        (3, lambda r: np.exp(-r * r)),
        (2, lambda r: r * r * np.exp(-1.5 * r * r)),
        (3, lambda r: np.exp(-r * r) / (1.0 + r)),
        (4, lambda r: np.cos(r) ** 2 * np.exp(-2.0 * r * r)),
        (5, lambda r: (1.0 + r) * np.exp(-r * r - r)),
    ]
    worst = 0.0
    for i, (N, g) in enumerate(cases):
        exact = integrate_radial(g, N, QuadratureSpec(12.0))
        est, err = integrate_mc(lambda x: g(2.0 * np.arctanh(np.linalg.norm(x, axis=1))), N,
                                MonteCarloSpec(200_000, 11 + i, 1.0))
        worst = max(worst, abs(est - exact) / err)
    return worst, len(cases)


def criterion_11() -> Result:
    from .cli import dumps_report, run_document
    from importlib import resources

    worst_sigma, n_mc = _mc_agreement()
    demo = json.loads(resources.files("hyplab").joinpath("data/demo_manifest.json").read_text("utf-8"))
    a, b = run_document(demo), run_document(demo)
    determinism = dumps_report(a.results) == dumps_report(b.results) and a.manifest_hash == b.manifest_hash
    text = dumps_report(a)
    roundtrip = dumps_report(json.loads(text)) == text
    ok = worst_sigma <= 3.0 and determinism and roundtrip and a.passed
    return ok, (f"MC max deviation {worst_sigma:.2f} sigma on {n_mc} integrands, manifest determinism "
                f"{determinism}, JSON round-trip {roundtrip}, demo manifest all-pass {a.passed}")


CRITERIA: List[Tuple[int, str, Callable[[], Result]]] = [
    (1, "master identity", criterion_1),
    (2, "uncertainty identity", criterion_2),
    (3, "Hessian constants", criterion_3),
    (4, "Bessel pairs", criterion_4),
    (5, "Hardy inequality", criterion_5),
    (6, "CKN identities", criterion_6),
    (7, "weighted Poincare gaps", criterion_7),
    (8, "ground-state potential", criterion_8),
    (9, "stability", criterion_9),
    (10, "entropy and U-bounds", criterion_10),
    (11, "infrastructure", criterion_11),
]


def format_line(k: int, name: str, ok: bool, detail: str, seconds: float) -> str:
    return f"criterion {k:2d} [{'PASS' if ok else 'FAIL'}] {name}: {detail} ({seconds:.1f}s)"


def run_all(verbose: bool = False) -> List[Tuple[int, bool, str]]:
    out = []
    for k, name, fn in CRITERIA:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        if verbose:
            print(format_line(k, name, ok, detail, time.perf_counter() - t0), flush=True)
        out.append((k, ok, detail))
    return out
