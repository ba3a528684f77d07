import json
import subprocess
import sys

import numpy as np
import pytest

from ymsym import cli, liealg, report
from ymsym.report import strip_volatile


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = cli.main(list(argv) + ["--out", str(out)])
    data = json.loads(out.read_text()) if out.exists() else None
    return code, data


def verdicts(data):
    return {f"{c['section']}/{c['name']}": c["verdict"] for c in data["checks"]}


def test_algebra_analyze(tmp_path):
    code, data = run(tmp_path, "algebra", "analyze", "--builtin", "sl2c_r")
    assert code == 0
    v = {c["name"]: c for c in data["checks"]}
    assert v["dimension"]["values"]["value"] == 6
    assert v["centralizer_dim"]["values"]["value"] == 2
    assert v["ideal0.J_squared_is_minus_identity"]["verdict"] == "PASS"
    assert data["tool"] == "ymsym" and data["command"] == "algebra analyze"


def test_algebra_from_file_and_bad_file(tmp_path):
    path = tmp_path / "g.json"
    liealg.save_algebra(liealg.su2(), path)
    code, data = run(tmp_path, "algebra", "analyze", "--algebra", str(path))
    assert code == 0 and {c["name"]: c for c in data["checks"]}["killing_form"]["values"]["matrix"][0][0] == "-2"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dim": 2, "c": [[["1", "0"], ["0", "0"]], [["0", "0"], ["0", "0"]]]}))
    assert cli.main(["algebra", "analyze", "--algebra", str(bad)]) == 2
    assert cli.main(["algebra", "analyze", "--algebra", str(tmp_path / "missing.json")]) == 2


def test_non_semisimple_analyze(tmp_path):
    code, data = run(tmp_path, "algebra", "analyze", "--builtin", "abelian3")
    assert code == 0
    assert {c["name"]: c for c in data["checks"]}["semisimple"]["values"]["value"] is False


def test_symmetry_verify_exit_codes(tmp_path):
    spec = tmp_path / "dil.json"
    spec.write_text(json.dumps({"type": "conformal", "ckv": "dilation"}))
    code, data = run(tmp_path, "symmetry", "verify", "--builtin", "su2", "--spec", str(spec), "--samples", "3")
    assert code == 0 and verdicts(data)["symmetry/determining_equations"] == "PASS"
    bad = '{"type": "custom", "Q": [["x0*a[0,1]", "0", "0", "0"], ["0", "0", "0", "0"], ["0", "0", "0", "0"]]}'
    code, data = run(tmp_path, "symmetry", "verify", "--spec", bad, "--samples", "3")
    assert code == 1 and verdicts(data)["symmetry/determining_equations"] == "FAIL"
    assert cli.main(["symmetry", "verify", "--spec", '{"type": "jconformal", "ckv": "t0"}']) == 2
    assert cli.main(["symmetry", "verify", "--spec", '{"type": "custom", "Q": [["a[7,0]"]]}']) == 2
    assert cli.main(["symmetry", "verify"]) == 2
    assert cli.main(["symmetry", "verify", "--spec", "[1, 2]"]) == 2


def test_usage_errors():
    assert cli.main([]) == 2
    assert cli.main(["algebra", "analyze", "--builtin", "e8"]) == 2
    assert cli.main(["algebra", "analyze", "--builtin", "su2", "--algebra", "x.json"]) == 2
    assert cli.main(["algebra", "analyze", "--jobs", "0"]) == 2
    assert cli.main(["identity", "suite", "--depth", "1"]) == 2
    assert cli.main(["identity", "suite", "--depth", "9"]) == 2


def test_identity_suite(tmp_path):
    code, data = run(tmp_path, "identity", "suite", "--builtin", "su2", "--samples", "2")
    assert code == 0
    v = verdicts(data)
    assert v["off_shell/wave_phi_off_shell_control"] == "EXPECTED_FAIL"
    assert v["on_shell/wave_phi"] == "PASS" and v["structure/derasymm_p2"] == "PASS"
    assert data["summary"]["FAIL"] == 0


def test_classify_and_killing(tmp_path):
    code, data = run(tmp_path, "classify", "--builtin", "su2", "--degree", "1")
    assert code == 0
    c = {x["name"]: x for x in data["checks"]}
    assert c["first_order_ansatz_nullity"]["values"]["nullity"] == 11
    assert c["conformal_killing_degree2"]["values"]["dimension"] == 15
    code, data = run(tmp_path, "killing", "solve", "--r", "1", "--s", "1", "--degree", "2")
    assert code == 0 and data["checks"][0]["values"]["complex_dim"] == 15
    code, data = run(tmp_path, "killing", "solve", "--r", "2", "--degree", "1")
    assert code == 0 and data["checks"][0]["values"]["warnings"]
    code, data = run(tmp_path, "killing", "solve", "--degree", "1")
    assert data["checks"][0]["values"]["dimension"] == 11


@pytest.mark.parametrize("argv", [
    ["symmetry", "verify", "--builtin", "sl2r", "--spec", '{"type": "conformal", "ckv": "sc1"}', "--samples", "4"],
    ["classify", "--builtin", "su2", "--degree", "2"],
])
def test_reports_independent_of_jobs(tmp_path, argv):
    _, a = run(tmp_path, *argv, "--jobs", "1", name="a.json")
    _, b = run(tmp_path, *argv, "--jobs", "2", name="b.json")
    assert "timestamp" in a and "timing" in a
    assert strip_volatile(a) == strip_volatile(b)


def test_floats_reload_bit_exact(tmp_path):
    _, data = run(tmp_path, "symmetry", "verify", "--spec", '{"type": "conformal", "ckv": "t3"}', "--samples", "2")
    vals = data["checks"][0]["values"]["tensor"]
    for text in vals:
        x = report.decode_float(text)
        assert format(x, ".17g") == text
    x = np.float64(0.1) + np.float64(0.2)
    assert report.decode_float(report.encode(x)) == x


def test_report_helpers():
    rep = report.Report("t", {})
    rep.check("s", "low", 1e-12, 1e-10)
    rep.check("s", "control", 0.5, 1e-3, below=False)
    assert rep.passed
    rep.check("s", "control2", 1e-6, 1e-3, below=False)
    assert not rep.passed and [c["name"] for c in rep.failed] == ["control2"]
    with pytest.raises(TypeError):
        report.encode(object())


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ymsym", "killing", "solve", "--r", "0", "--s", "0",
                           "--degree", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and "killing_spinors_type_0_0" in proc.stdout
