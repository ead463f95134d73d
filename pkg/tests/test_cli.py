import json
import math

import pytest

from convint.cli import main

EQUAL = {"system": "isen", "left": {"rho": 1.0, "v": 0.2}, "right": {"rho": 1.0, "v": 0.2}, "eos": {"a": 1.0, "gamma": 2.0}}
TWO_SHOCK = {"system": "isen", "left": {"rho": 1.0, "v": 1.0}, "right": {"rho": 2.0, "v": -1.0}, "eos": {"a": 1.0, "gamma": 2.0}}
FULL = {"system": "full", "left": {"rho": 1.0, "v": 1.0, "p": 1.0}, "right": {"rho": 1.0, "v": -1.0, "p": 1.0}, "eos": {"gamma": 1.4}}


def sr(rho_plus):
    rm, rM = 1.0, 3.0
    vM = -math.sqrt((rM**2 - rm**2) * (rM - rm) / (rM * rm))
    vp = vM + 2 * math.sqrt(2) * (math.sqrt(rho_plus) - math.sqrt(rM))
    return {"system": "isen", "left": {"rho": rm, "v": 0.0}, "right": {"rho": rho_plus, "v": vp}, "eos": {"a": 1.0, "gamma": 2.0}}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_riemann_equal_states(capsys, tmp_path):
    csv_path = tmp_path / "fan.csv"
    code, out, _ = run(capsys, "riemann", "--input", json.dumps(EQUAL), "--csv", str(csv_path), "--grid", "11")
    assert code == 0
    rep = json.loads(out)
    assert rep["fan"]["waves"] == [None, None, None]
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "xi,rho,u,v" and len(lines) == 12


def test_classify_two_shock(capsys):
    code, out, _ = run(capsys, "classify", "--input", json.dumps(TWO_SHOCK))
    assert code == 0
    rep = json.loads(out)
    assert rep["row"] == 5 and rep["verdict"] == "non-unique"


def test_full_search_then_verify(capsys, tmp_path):
    path = tmp_path / "cand.json"
    code, _, _ = run(capsys, "fan-search", "--system", "full", "--input", json.dumps(FULL), "--out", str(path))
    assert code == 0
    assert json.loads(path.read_text())["status"] == "found"
    code, out, _ = run(capsys, "fan-verify", "--system", "full", "--input", str(path))
    assert code == 0 and json.loads(out)["report"]["passed"]


def test_shifted_full_round_trip(capsys, tmp_path):
    data = json.loads(json.dumps(FULL))
    for side in ("left", "right"):
        data[side]["u"] = 0.3
        data[side]["v"] += 0.5
    path = tmp_path / "cand.json"
    assert main(["fan-search", "--input", json.dumps(data), "--out", str(path)]) == 0
    assert main(["fan-verify", "--input", str(path)]) == 0


def test_isen_search_and_corrupted_verify(capsys, tmp_path):
    path = tmp_path / "cand.json"
    code, _, _ = run(capsys, "fan-search", "--input", json.dumps(sr(3.003)), "--out", str(path))
    assert code == 0
    obj = json.loads(path.read_text())
    obj["candidate"]["beta1"] += 1e-3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(obj))
    code, out, _ = run(capsys, "fan-verify", "--input", str(bad))
    assert code == 4 and not json.loads(out)["report"]["passed"]


def test_isen_search_infeasible(capsys):
    code, out, _ = run(capsys, "fan-search", "--input", json.dumps(sr(12.0)))
    assert code == 4
    rep = json.loads(out)
    assert rep["status"] == "infeasible" and rep["log"]["aux_patch"]["feasible"]


def test_parse_and_domain_errors(capsys, tmp_path):
    assert run(capsys, "riemann", "--input", "{not json")[0] == 2
    assert run(capsys, "riemann")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "riemann", "--input", str(tmp_path / "missing.json"))[0] == 2
    neg = json.loads(json.dumps(EQUAL))
    neg["left"]["rho"] = -1.0
    code, _, err = run(capsys, "riemann", "--input", json.dumps(neg))
    assert code == 3 and "domain error" in err
    assert run(capsys, "fan-search", "--input", json.dumps(TWO_SHOCK))[0] == 3
    assert run(capsys, "fan-verify", "--input", json.dumps(EQUAL))[0] == 2
    assert run(capsys, "check", "--input", str(tmp_path / "nope.py"))[0] == 2


def test_output_is_deterministic(capsys):
    a = run(capsys, "riemann", "--input", json.dumps(TWO_SHOCK))[1]
    b = run(capsys, "riemann", "--input", json.dumps(TWO_SHOCK))[1]
    assert a == b
    rep = json.loads(a)
    assert rep["report"]["residuals"] and list(rep) == sorted(rep)


def test_oscillate(capsys, tmp_path):
    csv_path = tmp_path / "field.csv"
    code, out, _ = run(capsys, "oscillate", "--input", json.dumps(sr(3.003)), "--csv", str(csv_path), "--grid", "4")
    assert code == 0
    rep = json.loads(out)
    assert rep["max_sampled_e"] <= rep["e_bound"]
    ks = [row["k"] for row in rep["I_trace"]]
    assert ks[-1] == rep["k_min"]
    assert rep["I_base"] < rep["I_trace"][-1]["I"] < 0
    assert rep["certified_lower_bound"] <= rep["I_trace"][-1]["I"]
    assert len(csv_path.read_text().splitlines()) == 1 + 4**3
    assert run(capsys, "oscillate", "--input", json.dumps(sr(3.003)), "--k", "2")[0] == 4
