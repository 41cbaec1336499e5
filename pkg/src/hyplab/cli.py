"""Manifest runner and command-line driver.

A manifest is a JSON document

    {"global": {"dim": 3, "seed": 0, "quadrature": {...}},
     "jobs": [{"kind": "identity_hup", "profile_id": "gauss:mu=1", "tol": 1e-8, "params": {}}]}

Every field is validated strictly; unknown keys are errors.  Jobs run on a
thread pool bounded by ``HYP_LAB_THREADS`` and results are assembled in
manifest order, so the payload depends only on the manifest and its seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .bessel import gaussian_pair, hardy_pair
from .entropy import (UBoundConfig, entropy_ratio, make_measure, recentering_check, ubound_L1, ubound_L2)
from .identity import (DEFAULT_TOL, RadialField, verify_bessel_identity, verify_ckn, verify_hup,
                       verify_master_identity)
from .integrate import MonteCarloSpec, QuadratureSpec, integrate_mc
from .profiles import ProfileError, RadialProfile, identity, parse_profile, power
from .spectral import (SpectralConfig, WeightFamily, hessian_eigen_bound, locate_threshold, poincare_constant_scan,
                       potential_at_zero, potential_scan, sturm_liouville_gap)
from .stability import build_k_table, deficits, scale_noninvariant_check, verify_stability_chain

__all__ = [
    "ManifestError",
    "Job",
    "RunManifest",
    "ReportDocument",
    "parse_manifest",
    "load_manifest",
    "manifest_hash",
    "run_manifest",
    "run_document",
    "dumps_report",
    "results_payload",
    "emit_report",
    "csv_rows",
    "main",
]

JOB_KINDS = ("identity_master", "identity_bessel", "identity_ckn", "identity_hup", "spectral_hessian",
             "spectral_gap", "spectral_scan", "potential", "stability", "entropy")
_PROFILE_KINDS = {"identity_master", "identity_bessel", "identity_ckn", "identity_hup", "stability", "entropy"}
_SPECTRAL_KEYS = {f.name for f in fields(SpectralConfig)}
_QUAD_KEYS = {f.name for f in fields(QuadratureSpec)}


class ManifestError(ValueError):
    """The manifest does not parse or does not validate."""


# ---------------------------------------------------------------------------
# Parameter schemas
# ---------------------------------------------------------------------------

_F, _I, _S, _B, _LF = "float", "int", "str", "bool", "list[float]"
_REQUIRED = object()

_SCHEMAS: Dict[str, Dict[str, Tuple[str, Any]]] = {
    "identity_master": {"p": (_F, 2.0), "lam": (_F, 1.0), "field": (_S, "neg_rho"), "phi": (_S, "gauss:mu=1"),
                        "exponent": (_F, 1.0), "weight_exponent": (_F, 0.0)},
    "identity_bessel": {"pair": (_S, "hardy"), "R": (_F, None)},
    "identity_ckn": {"case": (_S, _REQUIRED), "a": (_F, _REQUIRED), "b": (_F, _REQUIRED),
                     "enforce_regime": (_B, True)},
    "identity_hup": {},
    "spectral_hessian": {"model": (_S, "euclidean_rho2"), "t_min": (_F, 1e-4), "t_max": (_F, 0.999),
                         "points": (_I, 2000), "expected": (_F, None)},
    "spectral_gap": {"weight": (_S, "A"), "param": (_F, 1.0), "l": (_I, 0), "R": (_F, None)},
    "spectral_scan": {"weight": (_S, "A"), "grid": (_LF, None), "lo": (_F, 0.05), "hi": (_F, 1.0),
                      "points": (_I, 10)},
    "potential": {"lam": (_F, None), "K": (_F, 0.0), "locate_threshold": (_B, False)},
    "stability": {"mode": (_S, "deficits"), "beta": (_F, 2.0), "points": (_I, 12)},
    "entropy": {"check": (_S, "ubound_L1"), "beta": (_F, 1.0), "samples": (_I, 200_000)},
}
_CHOICES = {
    ("identity_master", "field"): ("neg_rho", "log_derivative", "power"),
    ("identity_bessel", "pair"): ("hardy", "gaussian"),
    ("identity_ckn", "case"): ("ineq_c1", "idt_c2", "idt_c3", "idt_c4"),
    ("spectral_hessian", "model"): ("euclidean_rho2", "hyperbolic_rho2"),
    ("spectral_gap", "weight"): ("A", "B", "fixed_beta", "A_tanh"),
    ("spectral_scan", "weight"): ("A", "B", "fixed_beta", "A_tanh"),
    ("stability", "mode"): ("deficits", "chain", "scale_noninvariant"),
    ("entropy", "check"): ("entropy", "ubound_L1", "ubound_L2", "recentering", "mass", "mc_mass"),
}
_USES_SPECTRAL = {"spectral_gap", "spectral_scan", "stability"}
_USES_QUAD = _PROFILE_KINDS


def _coerce(value: Any, typ: str, where: str) -> Any:
    bad = ManifestError(f"{where}: expected {typ}, got {type(value).__name__} {value!r}")
    if typ == _F:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad
        if not math.isfinite(value):
            raise ManifestError(f"{where}: value must be finite")
        return float(value)
    if typ == _I:
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad
        return int(value)
    if typ == _S:
        if not isinstance(value, str):
            raise bad
        return value
    if typ == _B:
        if not isinstance(value, bool):
            raise bad
        return value
    if typ == _LF:
        if not isinstance(value, list):
            raise bad
        return [_coerce(v, _F, f"{where}[{i}]") for i, v in enumerate(value)]
    raise AssertionError(typ)


def _strict_keys(obj: Any, allowed: set, where: str, required: Sequence[str] = ()) -> None:
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ManifestError(f"{where}: unknown field(s) {unknown}; allowed {sorted(allowed)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ManifestError(f"{where}: missing required field(s) {missing}")


# ---------------------------------------------------------------------------
# Manifest types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Job:
    index: int
    kind: str
    params: Dict[str, Any]
    profile_id: Optional[str]
    tol: float
    dim: int
    quadrature: QuadratureSpec
    spectral: SpectralConfig
    seed: int


@dataclass
class RunManifest:
    dim: int
    seed: int
    quadrature: QuadratureSpec
    jobs: List[Job]
    raw: Dict[str, Any] = field(repr=False, default_factory=dict)


@dataclass
class ReportDocument:
    tool_version: str
    manifest_hash: str
    results: List[Dict[str, Any]]
    timing: List[float]

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.results)

    def to_dict(self) -> dict:
        return {"tool_version": self.tool_version, "manifest_hash": self.manifest_hash,
                "results": self.results, "timing": self.timing}


def _parse_quad(obj: Any, where: str, base: QuadratureSpec) -> QuadratureSpec:
    _strict_keys(obj, _QUAD_KEYS, where)
    kw = {}
    for k, v in obj.items():
        typ = _I if k in ("panels", "nodes_per_panel", "grading_levels") else _F
        kw[k] = _coerce(v, typ, f"{where}.{k}")
    try:
        return replace(base, **kw)
    except ValueError as exc:
        raise ManifestError(f"{where}: {exc}") from exc


def _parse_spectral(obj: Any, where: str, base: SpectralConfig) -> SpectralConfig:
    _strict_keys(obj, _SPECTRAL_KEYS, where)
    kw = {}
    for k, v in obj.items():
        typ = _I if k in ("mesh_nodes", "max_doublings", "l_max") else _F
        kw[k] = _coerce(v, typ, f"{where}.{k}")
    return replace(base, **kw)


def _parse_job(i: int, obj: Any, dim: int, seed: int, quad: QuadratureSpec,
               spectral: SpectralConfig) -> Job:
    where = f"jobs[{i}]"
    _strict_keys(obj, {"kind", "params", "profile_id", "tol", "dim", "quadrature", "spectral"}, where, ["kind"])
    kind = obj["kind"]
    if kind not in JOB_KINDS:
        raise ManifestError(f"{where}.kind: unknown job kind {kind!r}; allowed {list(JOB_KINDS)}")
    pid = obj.get("profile_id")
    if kind in _PROFILE_KINDS:
        if pid is None and not (kind == "entropy" and (obj.get("params") or {}).get("check") in ("mass", "mc_mass")):
            raise ManifestError(f"{where}.profile_id: required for kind {kind!r}")
    elif pid is not None:
        raise ManifestError(f"{where}.profile_id: not applicable to kind {kind!r}")
    if pid is not None:
        if not isinstance(pid, str):
            raise ManifestError(f"{where}.profile_id: expected a string")
        try:
            parse_profile(pid)
        except ProfileError as exc:
            raise ManifestError(f"{where}.profile_id: {exc}") from exc
    tol = _coerce(obj.get("tol", DEFAULT_TOL), _F, f"{where}.tol")
    if not tol > 0:
        raise ManifestError(f"{where}.tol: must be positive")
    jdim = _coerce(obj.get("dim", dim), _I, f"{where}.dim")
    if jdim < 2:
        raise ManifestError(f"{where}.dim: must be >= 2")
    if "quadrature" in obj and kind not in _USES_QUAD:
        raise ManifestError(f"{where}.quadrature: not applicable to kind {kind!r}")
    if "spectral" in obj and kind not in _USES_SPECTRAL:
        raise ManifestError(f"{where}.spectral: not applicable to kind {kind!r}")
    jquad = _parse_quad(obj["quadrature"], f"{where}.quadrature", quad) if "quadrature" in obj else quad
    jspec = _parse_spectral(obj["spectral"], f"{where}.spectral", spectral) if "spectral" in obj else spectral
    schema = _SCHEMAS[kind]
    raw = obj.get("params", {})
    _strict_keys(raw, set(schema), f"{where}.params")
    params: Dict[str, Any] = {}
    for k, (typ, default) in schema.items():
        if k in raw:
            params[k] = _coerce(raw[k], typ, f"{where}.params.{k}")
            choices = _CHOICES.get((kind, k))
            if choices and params[k] not in choices:
                raise ManifestError(f"{where}.params.{k}: {params[k]!r} not in {list(choices)}")
        elif default is _REQUIRED:
            raise ManifestError(f"{where}.params.{k}: required for kind {kind!r}")
        else:
            params[k] = default
    if kind == "identity_master" and params["field"] == "log_derivative":
        try:
            parse_profile(params["phi"])
        except ProfileError as exc:
            raise ManifestError(f"{where}.params.phi: {exc}") from exc
    return Job(i, kind, params, pid, tol, jdim, jquad, jspec, seed)


def parse_manifest(doc: Any) -> RunManifest:
    """Validate a decoded manifest document."""
    _strict_keys(doc, {"global", "jobs"}, "manifest", ["jobs"])
    g = doc.get("global", {})
    _strict_keys(g, {"dim", "seed", "quadrature", "spectral"}, "global")
    dim = _coerce(g.get("dim", 3), _I, "global.dim")
    if dim < 2:
        raise ManifestError("global.dim: must be >= 2")
    seed = _coerce(g.get("seed", 0), _I, "global.seed")
    if not 0 <= seed < 2**64:
        raise ManifestError("global.seed: must be a 64-bit unsigned integer")
    quad = _parse_quad(g.get("quadrature", {}), "global.quadrature", QuadratureSpec())
    spectral = _parse_spectral(g.get("spectral", {}), "global.spectral", SpectralConfig())
    if not isinstance(doc["jobs"], list):
        raise ManifestError("jobs: expected a list")
    jobs = [_parse_job(i, j, dim, seed, quad, spectral) for i, j in enumerate(doc["jobs"])]
    return RunManifest(dim, seed, quad, jobs, doc)


def load_manifest(path: str) -> RunManifest:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ManifestError(f"{path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_manifest(doc)


def manifest_hash(doc: Any) -> str:
    """SHA-256 of the canonical (sorted-key, compact) JSON form of the manifest."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Job runners: each returns (passed, result dict)
# ---------------------------------------------------------------------------

def _profile(job: Job) -> RadialProfile:
    return parse_profile(job.profile_id)


def _run_master(job: Job):
    p = job.params
    if p["field"] == "neg_rho":
        s = -identity()
    elif p["field"] == "log_derivative":
        phi = parse_profile(p["phi"])
        s = RadialProfile(lambda r: phi.df(r) / phi.f(r),
                          lambda r: phi.ddf(r) / phi.f(r) - (phi.df(r) / phi.f(r)) ** 2,
                          lambda r: np.full_like(np.asarray(r, dtype=float), np.nan),
                          name=f"log_derivative({p['phi']})")
    else:
        s = power(p["exponent"])
    A = power(p["weight_exponent"])
    rep = verify_master_identity(_profile(job), A, RadialField(s), p["p"], p["lam"], job.dim, job.quadrature, job.tol)
    return rep.passed, rep.to_dict()


def _run_bessel(job: Job):
    pair, phi = (hardy_pair if job.params["pair"] == "hardy" else gaussian_pair)(job.dim)
    rep = verify_bessel_identity(pair.V, pair.W, phi, _profile(job), job.dim, job.params["R"], job.quadrature,
                                 job.tol)
    return rep.passed, rep.to_dict()


def _run_ckn(job: Job):
    p = job.params
    rep = verify_ckn(p["case"], p["a"], p["b"], _profile(job), job.dim, job.quadrature, job.tol,
                     p["enforce_regime"])
    ok = rep.passed and (p["case"] != "ineq_c1" or rep.extra["slack"] >= -1e-10)
    return ok, rep.to_dict()


def _run_hup(job: Job):
    rep, lam, d1 = verify_hup(_profile(job), job.dim, job.quadrature, job.tol)
    return rep.passed, rep.to_dict()


def _run_hessian(job: Job):
    p = job.params
    t = np.geomspace(p["t_min"], p["t_max"], p["points"])
    inf_est, limit = hessian_eigen_bound(p["model"], t)
    expected = p["expected"] if p["expected"] is not None else (8.0 if p["model"] == "euclidean_rho2" else 2.0)
    ok = inf_est >= expected - job.tol and abs(limit - expected) <= max(job.tol, 1e-6)
    return ok, {"model": p["model"], "grid_infimum": inf_est, "limit_t0": limit, "expected": expected,
                "points": p["points"]}


def _run_gap(job: Job):
    p = job.params
    g = sturm_liouville_gap(WeightFamily(p["weight"], p["param"]), job.dim, p["l"], p["R"],
                            job.spectral.mesh_nodes, job.spectral)
    return g.gap > 0, g.to_dict()


def _run_scan(job: Job):
    p = job.params
    grid = p["grid"] if p["grid"] is not None else list(np.geomspace(p["lo"], p["hi"], p["points"]))
    res = poincare_constant_scan(p["weight"], grid, job.dim, job.spectral.l_max, job.spectral.mesh_nodes,
                                 job.spectral)
    ok = all(e.valid for e in res.entries) and res.inf_K > 0
    return ok, res.to_dict()


def _run_potential(job: Job):
    p = job.params
    out: Dict[str, Any] = {"N": job.dim, "K": p["K"]}
    if p["locate_threshold"]:
        out["threshold"] = locate_threshold(job.dim, 1.0)
    lam = p["lam"] if p["lam"] is not None else out.get("threshold")
    if lam is None:
        raise ValueError("potential job needs params.lam or params.locate_threshold = true")
    vmin, arg = potential_scan(lam, job.dim)
    out.update(lam=lam, min_V=vmin, argmin_r=arg, V0=potential_at_zero(lam, job.dim))
    return vmin >= p["K"] - job.tol, out


def _run_stability(job: Job):
    p = job.params
    u = _profile(job)
    if p["mode"] == "deficits":
        rep = deficits(u, job.dim, job.quadrature)
        scale = rep.A * rep.B + (rep.delta1 + 0.5 * rep.C) ** 2
        ok = abs(rep.delta2 - rep.delta1 * (rep.delta1 + rep.C)) <= job.tol * scale
        return ok, rep.to_dict()
    if p["mode"] == "scale_noninvariant":
        rep = scale_noninvariant_check(u, job.dim, job.quadrature, tol=job.tol)
        return rep.passed and rep.extra["slack"] >= -job.tol, rep.to_dict()
    table = build_k_table(job.dim, p["beta"], p["points"], job.spectral)
    chain = verify_stability_chain(u, job.dim, p["beta"], table, job.quadrature)
    return chain.passed, chain.to_dict()


def _run_entropy(job: Job):
    p = job.params
    m = make_measure(p["beta"], job.dim, job.quadrature)
    check = p["check"]
    if check == "mass":
        return abs(m.mass - 1.0) <= max(job.tol, 1e-9), {"G": m.G, "mass": m.mass, "R": m.R}
    if check == "mc_mass":
        beta = p["beta"]
        f = lambda x: np.exp(-beta * (2.0 * np.arctanh(np.linalg.norm(x, axis=1))) ** 2) / m.G
        est, err = integrate_mc(f, job.dim, MonteCarloSpec(p["samples"], job.seed, beta))
        return abs(est - m.mass) <= 3.0 * err, {"estimate": est, "stderr": err, "quadrature": m.mass,
                                                 "seed": job.seed, "samples": p["samples"]}
    u = _profile(job)
    if check == "entropy":
        ent, dir_, ratio = entropy_ratio(u, m)
        return ent >= -job.tol and math.isfinite(ent), {"entropy": ent, "dirichlet": dir_, "ratio": ratio}
    if check == "recentering":
        out = recentering_check(u, m)
        return bool(out["passed"]), out
    if check == "ubound_L1":
        reps = ubound_L1(u, m)
        return all(r.passed for r in reps.values()), {k: r.to_dict() for k, r in reps.items()}
    rep = ubound_L2(u, m, config=UBoundConfig())
    return rep.passed, rep.to_dict()


_RUNNERS: Dict[str, Callable[[Job], Tuple[bool, dict]]] = {
    "identity_master": _run_master,
    "identity_bessel": _run_bessel,
    "identity_ckn": _run_ckn,
    "identity_hup": _run_hup,
    "spectral_hessian": _run_hessian,
    "spectral_gap": _run_gap,
    "spectral_scan": _run_scan,
    "potential": _run_potential,
    "stability": _run_stability,
    "entropy": _run_entropy,
}


def _execute(job: Job) -> Tuple[Dict[str, Any], float]:
    t0 = time.perf_counter()
    entry: Dict[str, Any] = {"index": job.index, "kind": job.kind, "profile_id": job.profile_id, "N": job.dim,
                             "tol": job.tol, "params": dict(job.params)}
    try:
        ok, result = _RUNNERS[job.kind](job)
        entry.update(passed=bool(ok), result=result, error=None)
    except Exception as exc:  # job failures are collected, the run continues
        entry.update(passed=False, result={}, error=f"{type(exc).__name__}: {exc}")
    return entry, time.perf_counter() - t0


def _pool_size() -> int:
    raw = os.environ.get("HYP_LAB_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ManifestError(f"HYP_LAB_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ManifestError("HYP_LAB_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


def run_document(doc: Any) -> ReportDocument:
    """Validate and execute an already decoded manifest."""
    man = parse_manifest(doc)
    workers = min(_pool_size(), max(1, len(man.jobs)))
    if workers == 1:
        pairs = [_execute(j) for j in man.jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(_execute, man.jobs))
    return ReportDocument(__version__, manifest_hash(doc), [_plain(p[0]) for p in pairs], [p[1] for p in pairs])


def run_manifest(path: str) -> ReportDocument:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ManifestError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return run_document(doc)


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def _plain(obj: Any) -> Any:
    """Convert numpy scalars and tuples into plain JSON-compatible Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj: Any, out: List[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, k in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(":")
            _encode(obj[k], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _encode(v, out)
        out.append("]")
    else:
        _encode(_plain(obj), out) if isinstance(obj, (np.generic,)) else out.append(json.dumps(str(obj)))


def dumps_report(obj: Any) -> str:
    """Sorted keys, floats with 17 significant digits, non-finite floats as strings."""
    if isinstance(obj, ReportDocument):
        obj = obj.to_dict()
    buf: List[str] = []
    _encode(_plain(obj), buf)
    return "".join(buf) + "\n"


def results_payload(doc: ReportDocument) -> dict:
    """The deterministic part of a report: everything except wall-clock timings."""
    return {"tool_version": doc.tool_version, "manifest_hash": doc.manifest_hash, "results": doc.results}


def _flatten(prefix: str, obj: Any, out: Dict[str, Any]) -> None:
    if isinstance(obj, dict):
        for k in obj:
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list):
        return
    else:
        out[prefix] = obj


def csv_rows(doc: ReportDocument, include_timing: bool = False) -> Tuple[List[str], List[Dict[str, Any]]]:
    """Header and one flattened row per job (scalar fields only)."""
    lead = ["index", "kind", "profile_id", "N", "passed", "error"]
    rows = []
    for res, t in zip(doc.results, doc.timing):
        flat: Dict[str, Any] = {k: res.get(k) for k in lead}
        _flatten("params", res.get("params", {}), flat)
        _flatten("result", res.get("result", {}), flat)
        if include_timing:
            flat["wall_seconds"] = t
        rows.append(flat)
    rest = sorted({k for r in rows for k in r} - set(lead))
    return lead + rest, rows


def _csv_text(doc: ReportDocument) -> str:
    header, rows = csv_rows(doc)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (_fmt_float(v).strip('"') if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def emit_report(doc: ReportDocument, fmt: str, out: str) -> None:
    """Write ``doc`` as JSON or CSV to ``out`` ('-' is stdout)."""
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    text = dumps_report(doc) if fmt == "json" else _csv_text(doc)
    if out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc.strerror}") from exc


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

def _kv(text: str) -> Tuple[str, Any]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k.strip(), json.loads(v)
    except json.JSONDecodeError:
        return k.strip(), v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, help="dimension N (default 3)")
    p.add_argument("--tol", type=float, help="pass tolerance for the job")
    p.add_argument("--truncate", type=float, help="radial truncation R for quadrature")
    p.add_argument("--mesh", type=int, help="initial mesh nodes for the spectral solver")
    p.add_argument("--seed", type=int, help="seed for Monte Carlo jobs")
    p.add_argument("--json", metavar="PATH", help="write the JSON report ('-' for stdout)")
    p.add_argument("--csv", metavar="PATH", help="write the CSV summary ('-' for stdout)")
    p.add_argument("--param", "-p", action="append", type=_kv, default=[], metavar="KEY=VALUE",
                   help="job parameter; VALUE is parsed as JSON when possible")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyplab", description="Verify identities and inequalities on H^N.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="identity checks on one profile")
    v.add_argument("identity", choices=["master", "bessel", "ckn", "hup"])
    v.add_argument("--profile", required=True, help='profile id, e.g. "gauss:mu=1"')
    _common(v)

    s = sub.add_parser("spectral", help="Hessian bounds, spectral gaps, scans and the potential")
    s.add_argument("task", choices=["hessian", "gap", "scan", "potential"])
    _common(s)

    st = sub.add_parser("stability", help="uncertainty deficits and stability chains")
    st.add_argument("--profile", required=True)
    _common(st)

    e = sub.add_parser("entropy", help="Gaussian-measure entropy and U-bounds")
    e.add_argument("--profile")
    _common(e)

    su = sub.add_parser("suite", help="run a manifest, or the acceptance suite when no manifest is given")
    su.add_argument("--manifest", help="manifest JSON file")
    _common(su)
    return ap


def _single_job_doc(args) -> dict:
    kind = {"verify": f"identity_{getattr(args, 'identity', '')}",
            "spectral": {"hessian": "spectral_hessian", "gap": "spectral_gap", "scan": "spectral_scan",
                         "potential": "potential"}.get(getattr(args, "task", ""), ""),
            "stability": "stability", "entropy": "entropy"}[args.command]
    job: Dict[str, Any] = {"kind": kind, "params": dict(args.param)}
    if getattr(args, "profile", None):
        job["profile_id"] = args.profile
    if args.tol is not None:
        job["tol"] = args.tol
    return {"global": _global_overrides(args), "jobs": [job]}


def _global_overrides(args) -> dict:
    g: Dict[str, Any] = {}
    if args.dim is not None:
        g["dim"] = args.dim
    if args.seed is not None:
        g["seed"] = args.seed
    if args.truncate is not None:
        g["quadrature"] = {"truncation_R": args.truncate}
    if args.mesh is not None:
        g["spectral"] = {"mesh_nodes": args.mesh}
    return g


def _apply_overrides(doc: dict, args) -> dict:
    """Command-line flags override the manifest's global section."""
    g = _global_overrides(args)
    if not g and args.tol is None and not args.param:
        return doc
    if not isinstance(doc, dict):
        return doc
    doc = json.loads(json.dumps(doc))
    glob = doc.setdefault("global", {})
    for k, v in g.items():
        if isinstance(v, dict) and isinstance(glob.get(k), dict):
            glob[k].update(v)
        else:
            glob[k] = v
    for job in doc.get("jobs", []) if isinstance(doc.get("jobs"), list) else []:
        if isinstance(job, dict):
            if args.tol is not None:
                job["tol"] = args.tol
            if args.param:
                job.setdefault("params", {}).update(dict(args.param))
    return doc


def _summary(doc: ReportDocument) -> str:
    lines = []
    for r, t in zip(doc.results, doc.timing):
        tag = "PASS" if r["passed"] else "FAIL"
        what = r["kind"] + (f" [{r['profile_id']}]" if r.get("profile_id") else "")
        res = r.get("result") or {}
        detail = r["error"] or ", ".join(f"{k}={_short(res[k])}" for k in
                                         ("rel_residual", "gap", "inf_K", "min_V", "margin", "grid_infimum",
                                          "delta1", "mass", "estimate", "entropy", "passed") if k in res)
        lines.append(f"[{tag}] job {r['index']}: {what} N={r['N']} ({t:.2f}s) {detail}")
    lines.append(f"{sum(r['passed'] for r in doc.results)}/{len(doc.results)} jobs passed; "
                 f"manifest {doc.manifest_hash[:12]}")
    return "\n".join(lines)


def _short(v: Any) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "suite" and not args.manifest:
            from .acceptance import run_all
            results = run_all(verbose=True)
            return 0 if all(ok for _, ok, _ in results) else 1
        if args.command == "suite":
            try:
                with open(args.manifest, encoding="utf-8") as fh:
                    raw = json.load(fh)
            except OSError as exc:
                raise ManifestError(f"{args.manifest}: {exc.strerror}") from exc
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{args.manifest}: JSON parse error at line {exc.lineno}, "
                                    f"column {exc.colno}: {exc.msg}") from exc
            doc = run_document(_apply_overrides(raw, args))
        else:
            doc = run_document(_single_job_doc(args))
    except ManifestError as exc:
        print(f"hyplab: error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        emit_report(doc, "json", args.json)
    if args.csv:
        emit_report(doc, "csv", args.csv)
    if args.json != "-" and args.csv != "-":
        print(_summary(doc))
    return 0 if doc.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
