import json

import pytest
from click.testing import CliRunner

from hpsig.cli import main


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, [str(a) for a in args])

    return invoke


def doc(result):
    return json.loads(result.stdout)


def test_circle_validates(run):
    assert run("model-gen", "--sigma", "id", "--out", "c.json").exit_code == 0
    res = run("validate", "c.json", "--samples", 64)
    assert res.exit_code == 0
    out = doc(res)
    assert out["command"] == "validate" and out["pass"] is True
    assert set(out) == {"command", "inputs_digest", "pass", "checks", "notes", "results"}
    assert "PASS" in res.stderr


def test_corrupted_model_fails(run):
    run("model-gen", "--sigma", "id", "--out", "c.json")
    data = json.loads(open("c.json").read())
    data["T"] = data["T"][::-1]
    data["T"][0] = data["b"][0]
    open("bad.json", "w").write(json.dumps(data))
    assert run("validate", "bad.json", "--samples", 32).exit_code == 1


def test_malformed_input_is_exit_two(run):
    open("junk.json", "w").write("{not json")
    assert run("validate", "junk.json").exit_code == 2
    open("wrong.json", "w").write(json.dumps({"kind": "chain-map"}))
    assert run("validate", "wrong.json").exit_code == 2
    assert run("validate", "missing.json").exit_code == 2


def test_signature_and_winding(run):
    run("model-gen", "--sigma", "id", "--out", "c.json")
    res = run("signature", "c.json", "--samples", 64, "--unitary-out", "u.json")
    assert res.exit_code == 0
    assert doc(res)["results"]["winding"] == 0
    res = run("winding", "u.json")
    assert res.exit_code == 0 and doc(res)["results"]["winding"] == 0


def test_signature_needs_odd_length(run):
    run("model-gen", "--random", "--ranks", "1,2,1", "--out", "e.json")
    res = run("signature", "e.json")
    assert res.exit_code == 1 and "odd dimension required" in res.stderr


def test_winding_of_z(run):
    z = {"kind": "loop", "dim": 1, "entries": [[{"band": 1, "coeffs": [[0, 0], [0, 0], [1, 0]]}]]}
    open("z.json", "w").write(json.dumps(z))
    res = run("winding", "z.json")
    assert res.exit_code == 0
    assert doc(res)["results"]["winding"] == 1


def test_homotopy_verify_subdivision(run):
    assert run("chainmap-gen", "--sigma", "(1 2)", "--subdivide", 2, "--source-out", "a.json",
               "--target-out", "b.json", "--out", "m.json").exit_code == 0
    res = run("homotopy-verify", "a.json", "b.json", "m.json", "--samples", 32)
    assert res.exit_code == 0, res.stderr
    names = {c["check"] for c in doc(res)["checks"]}
    assert "direct-sum-winding-zero" in names


def test_homotopy_verify_rejects_non_chain_map(run):
    run("chainmap-gen", "--sigma", "id", "--subdivide", 2, "--source-out", "a.json", "--target-out", "b.json",
        "--out", "m.json")
    m = json.loads(open("m.json").read())
    for row in m["A"][1]["entries"]:
        for e in row:
            e["coeffs"] = [[2 * re, 2 * im] for re, im in e["coeffs"]]
    open("m2.json", "w").write(json.dumps(m))
    res = run("homotopy-verify", "a.json", "b.json", "m2.json", "--samples", 16)
    assert res.exit_code == 1 and "not a chain map" in res.stderr


def test_pullback_round_trip(run):
    run("chainmap-gen", "--sigma", "(1 2)", "--subdivide", 2, "--source-out", "a.json", "--target-out", "b.json",
        "--out", "up.json")
    run("chainmap-gen", "--sigma", "(1 2)", "--coarsen", 2, "--out", "down.json")
    res = run("pullback-verify", "a.json", "b.json", "up.json", "--back", "down.json", "--phi", "1-x",
              "--phi", "1-x/8", "--samples", 32)
    assert res.exit_code == 0, res.stderr
    names = [c["check"] for c in doc(res)["checks"]]
    assert "negated-sign-rejected" in names and "poincare-identity" in names


def test_morita_verify(run):
    open("g.json", "w").write(json.dumps({"kind": "finite", "objects": [1, 2]}))
    open("f.json", "w").write(json.dumps({"morphisms": [
        {"name": "id", "object_map": [1, 2], "gamma": {"1": [1, 1], "2": [2, 2]}},
        {"name": "swap", "object_map": [2, 1], "gamma": {"1": [2, 1], "2": [1, 2]}},
    ]}))
    res = run("morita-verify", "g.json", "f.json", "--trials", 5)
    assert res.exit_code == 0, res.stderr
    open("f2.json", "w").write(json.dumps({"morphisms": [
        {"name": "swap", "object_map": [2, 1], "gamma": {"1": [1, 1], "2": [2, 2]}}]}))
    assert run("morita-verify", "g.json", "f2.json", "--trials", 5).exit_code == 1


def test_suite_section_is_deterministic(run):
    a = run("suite", "--only", "4,6")
    b = run("suite", "--only", "4,6")
    assert a.exit_code == 0 and a.stdout == b.stdout
    assert [s["section"] for s in doc(a)["results"]["sections"]] == [4, 6]
