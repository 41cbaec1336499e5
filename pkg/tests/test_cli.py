import csv
import io
import json
import math
from importlib import resources

import pytest
from hypothesis import given, strategies as st

from hyplab import cli
from hyplab.cli import (ManifestError, _fmt_float, csv_rows, dumps_report, emit_report, main, manifest_hash,
                        parse_manifest, results_payload, run_document, run_manifest)


def _demo_path():
    return str(resources.files("hyplab") / "data" / "demo_manifest.json")


def _write(tmp_path, obj, name="m.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def test_single_hup_job_reports_zero_deficit():
    doc = run_document({"global": {"dim": 3}, "jobs": [{"kind": "identity_hup", "profile_id": "gauss:mu=1"}]})
    assert doc.passed
    assert abs(doc.results[0]["result"]["extra"]["deficit1"]) < 1e-8


def test_empty_manifest(tmp_path, capsys):
    path = _write(tmp_path, {"jobs": []})
    doc = run_manifest(path)
    assert doc.results == [] and doc.passed
    assert main(["suite", "--manifest", path]) == 0


@pytest.mark.parametrize("doc,field", [
    ({"jobs": [], "extra": 1}, "extra"),
    ({"jobs": [{"kind": "identity_hup", "profile_id": "gauss:mu=1", "colour": 1}]}, "colour"),
    ({"jobs": [{"kind": "identity_hup", "profile_id": "nope:x=1"}]}, "jobs[0].profile_id"),
    ({"jobs": [{"kind": "identity_hup"}]}, "jobs[0].profile_id"),
    ({"jobs": [{"kind": "spectral_gap", "profile_id": "gauss:mu=1"}]}, "jobs[0].profile_id"),
    ({"jobs": [{"kind": "identity_master", "profile_id": "gauss:mu=1", "params": {"lam": "x"}}]},
     "jobs[0].params.lam"),
    ({"jobs": [{"kind": "spectral_gap", "params": {"weight": "Z"}}]}, "jobs[0].params.weight"),
    ({"global": {"dim": 1}, "jobs": []}, "global.dim"),
    ({"global": {"quadrature": {"panels": 4, "oops": 1}}, "jobs": []}, "global.quadrature"),
    ({"jobs": [{"kind": "teleport"}]}, "jobs[0].kind"),
    ([], "manifest"),
])
def test_strict_validation_names_the_field(doc, field):
    with pytest.raises(ManifestError) as exc:
        parse_manifest(doc)
    assert field in str(exc.value)


def test_parse_error_reports_position_and_exit_code(tmp_path, capsys):
    path = _write(tmp_path, '{"jobs": [\n  {"kind": }\n]}')
    with pytest.raises(ManifestError, match="line 2"):
        run_manifest(path)
    assert main(["suite", "--manifest", path]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["suite", "--manifest", str(tmp_path / "missing.json")]) == 2


def test_job_failure_is_collected_and_exit_is_one(tmp_path):
    path = _write(tmp_path, {"jobs": [
        {"kind": "identity_ckn", "profile_id": "gauss:mu=1", "params": {"case": "idt_c2", "a": 0.0, "b": 0.0}},
        {"kind": "identity_hup", "profile_id": "gauss:mu=1"}]})
    doc = run_manifest(path)
    assert not doc.results[0]["passed"] and "RegimeError" in doc.results[0]["error"]
    assert doc.results[1]["passed"]
    assert main(["suite", "--manifest", path]) == 1


def test_usage_errors_exit_two(capsys):
    assert main(["bogus"]) == 2
    assert main(["verify", "hup"]) == 2
    assert main(["verify", "hup", "--profile", "gauss:mu=1", "--dim", "x"]) == 2


def test_subcommands_run(capsys):
    assert main(["verify", "hup", "--profile", "gauss:mu=1"]) == 0
    assert main(["verify", "bessel", "--profile", "polygauss:k=2,alpha=1", "-p", "pair=\"gaussian\""]) == 0
    assert main(["spectral", "hessian", "-p", "model=hyperbolic_rho2"]) == 0
    assert main(["stability", "--profile", "gauss:mu=1", "--dim", "2"]) == 0
    assert main(["entropy", "-p", "check=mass"]) == 0
    assert "jobs passed" in capsys.readouterr().out


def test_demo_manifest_matches_golden_file(monkeypatch):
    monkeypatch.setenv("HYP_LAB_THREADS", "1")
    doc = run_manifest(_demo_path())
    assert doc.passed
    golden = (resources.files("hyplab") / "data" / "demo_golden.json").read_text(encoding="utf-8")
    assert dumps_report(results_payload(doc)) == golden


def test_results_do_not_depend_on_pool_size(monkeypatch):
    monkeypatch.setenv("HYP_LAB_THREADS", "1")
    a = results_payload(run_manifest(_demo_path()))
    monkeypatch.setenv("HYP_LAB_THREADS", "4")
    b = results_payload(run_manifest(_demo_path()))
    assert dumps_report(a) == dumps_report(b)
    monkeypatch.setenv("HYP_LAB_THREADS", "0")
    with pytest.raises(ManifestError):
        run_manifest(_demo_path())


def test_json_round_trip_and_csv_shape(tmp_path, monkeypatch):
    monkeypatch.setenv("HYP_LAB_THREADS", "2")
    doc = run_manifest(_demo_path())
    out = tmp_path / "r.json"
    emit_report(doc, "json", str(out))
    text = out.read_text(encoding="utf-8")
    assert dumps_report(json.loads(text)) == text
    assert list(json.loads(text)) == sorted(json.loads(text))
    emit_report(doc, "csv", str(tmp_path / "r.csv"))
    rows = list(csv.reader(io.StringIO((tmp_path / "r.csv").read_text())))
    assert len(rows) == len(doc.results) + 1
    header, dict_rows = csv_rows(doc)
    assert header == rows[0] and len(dict_rows) == len(doc.results)
    with pytest.raises(OSError, match="cannot write"):
        emit_report(doc, "json", str(tmp_path / "no" / "such" / "dir.json"))


def test_manifest_hash_ignores_key_order():
    a = {"global": {"dim": 3, "seed": 1}, "jobs": []}
    b = {"jobs": [], "global": {"seed": 1, "dim": 3}}
    assert manifest_hash(a) == manifest_hash(b)
    assert manifest_hash(a) != manifest_hash({"global": {"dim": 3, "seed": 2}, "jobs": []})


def test_monte_carlo_job_depends_only_on_seed():
    job = {"kind": "entropy", "params": {"check": "mc_mass", "beta": 1.0, "samples": 20000}}
    a = run_document({"global": {"seed": 5}, "jobs": [job]}).results
    b = run_document({"global": {"seed": 5}, "jobs": [job]}).results
    c = run_document({"global": {"seed": 6}, "jobs": [job]}).results
    assert a == b and a != c


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(_fmt_float(x)) == x
    assert json.loads(dumps_report({"x": x}))["x"] == x


def test_non_finite_floats_are_encoded_as_strings():
    assert _fmt_float(math.nan) == '"NaN"'
    assert _fmt_float(-math.inf) == '"-Infinity"'
    assert json.loads(dumps_report({"v": [math.inf, 1.0]})) == {"v": ["Infinity", 1.0]}
    assert cli.dumps_report({"b": True, "n": None, "s": "é"}).endswith("\n")
