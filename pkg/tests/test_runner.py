import json

import pytest

from lorentz_verify.cli import main
from lorentz_verify.errors import ConfigParse, UnknownCheck, UnresolvedReference, UnsupportedFormat
from lorentz_verify.fixtures import SUITES, builtin_scenario
from lorentz_verify.runner import CHECKS, emit_report, list_builtins, load_scenario, run_scenario, thread_cap


def small():
    return {"schema_version": 1, "id": "small", "seed": 4, "ambient": {"model": "de-sitter-grw", "n": 2},
            "fields": [{"name": "V", "kind": "canonical"}], "immersions": [],
            "checks": [{"name": "sectional_curvature", "params": {"npts": 20}, "tol": 1e-7},
                       {"name": "levi_civita", "params": {"npts": 5}, "tol": 1e-10},
                       {"name": "conformal_certificate", "params": {"field": "V", "label": "closed_conformal",
                                                                    "psi_of_t": "sinh"}, "tol": 1e-8}]}


def test_pass_and_checks_in_declaration_order():
    rep = run_scenario(small())
    assert rep.exit_code == 0
    assert [c["name"] for c in rep.checks] == ["sectional_curvature", "levi_civita", "conformal_certificate"]


def test_threads_do_not_change_report():
    a = emit_report(run_scenario(small(), threads=1), "json", include_volatile=False)
    b = emit_report(run_scenario(small(), threads=3), "json", include_volatile=False)
    assert a == b


def test_seed_changes_samples_not_verdict():
    a = json.loads(emit_report(run_scenario(small(), seed=1), "json", include_volatile=False))
    b = json.loads(emit_report(run_scenario(small(), seed=2), "json", include_volatile=False))
    assert a["verdict"] == b["verdict"] == "pass"
    assert a["seed"] == 1 and b["seed"] == 2


def test_tolerance_override_fails():
    assert run_scenario(small(), tol=1e-30).exit_code == 1


def test_expectation_failure():
    sc = small()
    sc["checks"][2]["params"]["label"] = "killing"
    rep = run_scenario(sc)
    assert rep.checks[2]["status"] == "fail" and rep.exit_code == 1


def test_geometry_error_becomes_failed_check():
    sc = small()
    sc["immersions"] = [{"name": "eq", "kind": "leaf-circle", "field": "V", "t0": 0.0}]
    sc["checks"] = [{"name": "simons_flow", "params": {"base": "eq", "field": "V"}}]
    rep = run_scenario(sc)
    assert rep.checks[0]["status"] == "fail"
    assert "ConformalFactorVanishes" in rep.checks[0]["error"]


def test_config_errors():
    sc = small()
    sc["checks"].append({"name": "no_such_check"})
    with pytest.raises(UnknownCheck):
        run_scenario(sc)
    sc = small()
    sc["checks"][2]["params"]["field"] = "missing"
    with pytest.raises(UnresolvedReference):
        run_scenario(sc)
    sc = small()
    sc["ambient"] = {"model": "gödel"}
    with pytest.raises(UnresolvedReference):
        run_scenario(sc)
    with pytest.raises(UnsupportedFormat):
        emit_report(run_scenario(small()), "xml")


def test_bad_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigParse):
        load_scenario(str(p))


def test_empty_checks_warns(caplog):
    sc = small()
    sc["checks"] = []
    rep = run_scenario(sc)
    assert rep.exit_code == 0 and rep.warnings
    assert any("no checks" in r.message for r in caplog.records)


def test_json_round_trip_and_number_format():
    text = emit_report(run_scenario(small()), "json")
    d = json.loads(text)
    assert set(d) >= {"schema_version", "scenario", "seed", "verdict", "checks", "fingerprint"}
    res = d["checks"][0]["residuals"]["sectional_error"]
    assert isinstance(res, str) and float(res) < 1e-7
    assert "runtime" in d["checks"][0]
    stable = json.loads(emit_report(run_scenario(small()), "json", include_volatile=False))
    assert "fingerprint" not in stable and "runtime" not in stable["checks"][0]


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("LORENTZ_VERIFY_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("LORENTZ_VERIFY_THREADS", "many")
    with pytest.raises(ConfigParse):
        thread_cap()


def test_builtins_are_valid_and_listed():
    cat = list_builtins()
    assert {k for k, _ in cat["checks"]} == set(CHECKS)
    assert {k for k, _ in cat["suites"]} == set(SUITES)
    for name in SUITES:
        assert load_scenario(name) == builtin_scenario(name)


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", "newton-suite", "--format", "json", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["verdict"] == "pass"
    assert main(["run", "newton-suite", "--tol", "1e-30"]) == 1
    assert main(["run", "no-such-suite"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["verify-ambient", "--model", "anti-de-sitter-grw", "--c", "-1", "--npts", "10"]) == 0
    assert main(["verify-conformal", "--model", "minkowski", "--field", "position", "--label", "homothetic",
                 "--psi", "1"]) == 0
    assert main(["curvature", "--t0", "0.8"]) == 0
    assert main(["list", "--format", "json"]) == 0
    capsys.readouterr()


def test_cli_stability_and_flow():
    assert main(["stability", "--expect", "leaf"]) == 0
    assert main(["flow", "--theta", "1.2", "--eps", "0.2"]) == 0
