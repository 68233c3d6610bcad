import io
import json
from pathlib import Path

import pytest

from semireg.cli import main, run

INSTANCES = Path(__file__).resolve().parent.parent / "demos" / "instances"


def report(command, name, *extra):
    return run([command, "--input", str(INSTANCES / f"{name}.json"), *extra])


def test_cohomology_examples():
    code, rep = report("cohomology", "sl2")
    assert code == 0 and rep["result"]["dims"] == [1, 0, 0, 1]
    code, rep = report("cohomology", "abelian2")
    assert code == 0 and rep["result"]["dims"] == [1, 2, 1]


@pytest.mark.parametrize("name,identity", [("jacobi_failure", "jacobi"), ("asymmetric_bracket", "antisymmetry")])
def test_malformed_brackets_exit_3(name, identity):
    code, rep = report("cohomology", name)
    assert code == 3 and rep["status"] == "error"
    assert rep["reason"]["kind"] == "invariant" and rep["reason"]["identity"] == identity


def test_pair_examples():
    code, rep = report("pair", "sl2_full_pair")
    assert code == 0 and rep["result"]["columns"] == 1 and rep["result"]["degenerates-at-E1"]
    code, rep = report("pair", "aff1_x")
    res = rep["result"]
    assert code == 0 and res["columns"] == 2
    grid = {(e["p"], e["q"]): e["dim"] for e in res["E1"]}
    assert grid == {(0, 0): 1, (0, 1): 1, (1, 0): 0, (1, 1): 0}
    assert res["total"] == {"0": 1, "1": 1, "2": 0}
    code, rep = report("pair", "nonclosed_pair")
    assert code == 3 and rep["reason"]["kind"] == "invariant"


def test_atiyah_examples():
    code, rep = report("atiyah", "gl2_sl2_standard")
    assert code == 0 and rep["result"]["is-zero"] and rep["result"]["witness"]["curvature-in-G2"]
    code, rep = report("atiyah", "fixture")
    assert code == 0 and not rep["result"]["is-zero"] and "nonvanishing-certificate" in rep["result"]
    code, rep = report("atiyah", "line_3")
    assert code == 0 and rep["result"]["residue"] == "3"
    code, rep = report("atiyah", "aff1_y_nonflat")
    assert code == 3


def test_deform_examples():
    code, rep = report("deform", "deform_abelian_gl2")
    res = rep["result"]
    assert code == 0 and res["obstructed-at"] == "u^3"
    assert res["tower"][-1]["obstruction"]["class"] == ["1", "0", "0", "-1"]
    k0 = res["semiregularity"][0]
    assert k0["k"] == 0 and k0["pass"] and k0["tau-zero"] and k0["asserted"]
    code, rep = report("deform", "deform_sl2")
    assert code == 0 and rep["result"]["message"] == "lifts to full order"
    assert rep["result"]["lifts-to-order"] == 4
    code, rep = report("deform", "deform_exploratory")
    (entry,) = rep["result"]["exploratory"]
    assert code == 0 and not entry["asserted"] and not entry["pass"] and entry["tau"] == ["1"]
    code, rep = report("deform", "deform_fixture")
    assert code == 0 and all(s["pass"] for s in rep["result"]["semiregularity"])


def test_tot_examples():
    code, rep = report("tot", "line_m2")
    res = rep["result"]
    assert code == 0 and res["cech"] == {"0": 0, "1": 1} and res["stable"]
    assert res["whitney"]["I-after-E-identity"] and res["whitney"]["chain-map"] and res["whitney"]["iota-restriction"]
    code, rep = report("tot", "line_0")
    assert code == 0 and rep["result"]["cech"]["0"] == 1
    code, rep = report("tot", "line_narrow")
    assert code == 4 and rep["reason"]["kind"] == "unstable-window"
    assert rep["reason"]["suggested-window"] == [-3, 3]
    code, rep = report("tot", "line_narrow", "--window=-8:8")
    assert code == 0


def test_schema_errors(monkeypatch):
    for doc in ({"schema-version": 1}, {"schema-version": 2, "rationals-as-strings": True}):
        monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(doc)))
        code, rep = run(["cohomology", "--input", "-"])
        assert code == 2 and rep["reason"]["kind"] == "schema"
    monkeypatch.setattr("sys.stdin", io.StringIO("not json"))
    assert run(["cohomology", "--input", "-"])[0] == 2
    bad = {"schema-version": 1, "rationals-as-strings": True, "algebroid": {"names": ["x"], "brackets": []},
           "module": {"dim": 1, "matrices": {"x": [[0.5]]}}}
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(bad)))
    assert run(["cohomology", "--input", "-"])[0] == 2
    assert run(["cohomology", "--input", str(INSTANCES / "missing.json")])[0] == 2


def test_bad_window_is_a_schema_error():
    assert report("tot", "line_0", "--window", "3")[0] == 2


def test_reports_are_deterministic(tmp_path, capsys):
    for command, name in (("atiyah", "fixture"), ("deform", "deform_fixture"), ("tot", "line_3"), ("pair", "aff1_x")):
        outs = []
        for i in range(2):
            target = tmp_path / f"{name}-{i}.json"
            assert main([command, "--input", str(INSTANCES / f"{name}.json"), "--format", "json",
                         "--output", str(target)]) == 0
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]
    assert main(["cohomology", "--input", str(INSTANCES / "sl2.json")]) == 0
    text = capsys.readouterr().out
    assert "dims" in text


def test_every_instance_runs_with_a_known_exit_code():
    commands = {"line": "tot", "deform": "deform"}
    for path in sorted(INSTANCES.glob("*.json")):
        command = commands.get(path.stem.split("_")[0], "cohomology")
        code, rep = run([command, "--input", str(path)])
        assert code in (0, 2, 3, 4)
        if code:
            assert rep["status"] == "error" and "kind" in rep["reason"]
