import dataclasses
import json
import math
import shutil
import subprocess
import sys

import pytest

from crmorse import cli, morse
from crmorse.integrate import MCEstimate


def _run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _csv_body(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def _header(text):
    return dict(ln[2:].split("=", 1) for ln in text.splitlines() if ln.startswith("# "))


def test_models(capsys):
    code, out, _ = _run(capsys, "models")
    doc = json.loads(out)
    assert code == 0
    assert [m["spec"] for m in doc["models"]][:3] == ["sphere", "sphere:w=1,2", "ellipsoid"]
    assert doc["config"]["command"] == "models"


def test_dims_bundle_negative_range(capsys):
    code, out, err = _run(capsys, "dims", "--model", "bundle:d=1,c=3", "--m", "-10..10")
    assert code == 0
    rows = _csv_body(out)
    assert rows[0] == "q,m,dim,method"
    assert "1,-5,4,duality" in rows
    assert "euler_slope=1" in err
    assert _header(out)["m"] == "-10..10"


def test_dims_ellipsoid(capsys):
    code, out, _ = _run(capsys, "dims", "--model", "ellipsoid", "--m", "0..6", "--q", "0")
    assert code == 0
    assert [r.split(",")[2] for r in _csv_body(out)[1:]] == ["1", "1", "2", "2", "3", "3", "4"]


def test_integrate_csv(capsys, tmp_path):
    path = tmp_path / "i.csv"
    code, out, _ = _run(capsys, "integrate", "--model", "sphere", "--samples", "2e3", "--seed", "4",
                        "--csv", str(path))
    assert code == 0 and out == ""
    txt = path.read_text()
    hdr = _header(txt)
    assert hdr["samples"] == "2000" and hdr["seed"] == "4" and "version" in hdr and "backend" in hdr
    rows = _csv_body(txt)
    assert rows[0] == "model,q,N,seed,value,stderr" and len(rows) == 3


def test_szego_csv(capsys):
    code, out, _ = _run(capsys, "szego", "--model", "sphere", "--m", "1,2,3")
    assert code == 0
    rows = _csv_body(out)
    assert rows[0] == "m,probe,scaled_value,error" and len(rows) == 4


def test_model_space_json(capsys):
    code, out, _ = _run(capsys, "model-space", "--lambdas", "-1,2", "--q", "1", "--bruteforce")
    doc = json.loads(out)
    assert code == 0
    assert doc["model_density"] == pytest.approx(2 / math.pi ** 2, rel=1e-12)
    assert doc["extremal"]["J"] == [0]
    assert abs(doc["bruteforce"]["value"] - doc["model_density"]) < 0.01 * doc["model_density"]


def test_scaling_json(capsys):
    code, out, _ = _run(capsys, "scaling", "--model", "bundle:d=1,c=0", "--anchor", "origin",
                        "--m", "100,10000")
    doc = json.loads(out)
    assert code == 0
    gaps = [r["weight_gap"] for r in doc["rows"]]
    assert gaps[0] == pytest.approx(1.974, abs=0.01) and gaps[1] < gaps[0]
    assert doc["rows"][1]["operator_residual"] * 5 <= doc["rows"][0]["operator_residual"]


def test_verify_pass(capsys):
    code, out, _ = _run(capsys, "verify", "--model", "sphere", "--m-max", "60", "--samples", "1e4")
    doc = json.loads(out)
    assert code == 0 and doc["status"] == "pass"
    assert doc["config"]["samples"] == 10000 and doc["config"]["m_max"] == 60


def test_verify_fail_exit_code(capsys, monkeypatch):
    def shrunk(model, T, N, seed, workers=None):
        return [MCEstimate(0.1, 1e-6, N, seed)] + [MCEstimate(0.0, 0.0, N, seed)] * (T.shape[0] - 1)

    monkeypatch.setattr(morse, "functionals", shrunk)
    code, out, _ = _run(capsys, "verify", "--model", "sphere", "--m-max", "40", "--samples", "100")
    assert code == 1 and json.loads(out)["status"] == "fail"


def test_verify_inconclusive_exit_code(capsys, monkeypatch):
    real = morse.functionals

    def flaky(*a, **kw):
        return [dataclasses.replace(e, rejected=e.n_samples) for e in real(*a, **kw)]

    monkeypatch.setattr(morse, "functionals", flaky)
    code, _, _ = _run(capsys, "verify", "--model", "sphere", "--m-max", "40", "--samples", "1000")
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["verify", "--model", "nosuch"],
    ["verify", "--model", "sphere", "--bogus"],
    ["dims", "--model", "sphere", "--m", "5..1"],
    ["integrate", "--model", "sphere", "--samples", "0.5"],
    ["model-space", "--lambdas", "1,0", "--q", "0"],
    ["verify", "--model", "sphere", "--m-max", "3"],
    ["scaling", "--model", "sphere", "--anchor", "origin"],
    [],
])
def test_usage_errors(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 64 and "error" in err


def test_outputs_byte_identical(tmp_path):
    paths = []
    for k in range(2):
        p = tmp_path / f"r{k}.json"
        assert cli.run(["verify", "--model", "bundle:d=1,c=3", "--m-max", "40", "--samples", "3e4",
                        "--seed", "11", "--workers", "2", "--out", str(p)]) == 0
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]


def test_workers_do_not_change_output(tmp_path):
    outs = []
    for w in ("1", "3"):
        p = tmp_path / f"w{w}.csv"
        cli.run(["integrate", "--model", "ellipsoid", "--samples", "70000", "--seed", "2",
                 "--workers", w, "--csv", str(p)])
        outs.append(_csv_body(p.read_text()))
    assert outs[0] == outs[1]


def test_console_script():
    exe = shutil.which("crmorse")
    cmd = [exe] if exe else [sys.executable, "-m", "crmorse.cli"]
    r = subprocess.run(cmd + ["dims", "--model", "sphere", "--m", "0..3", "--q", "0"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert _csv_body(r.stdout)[1:] == ["0,0,1,lattice", "0,1,2,lattice", "0,2,3,lattice", "0,3,4,lattice"]
    r = subprocess.run(cmd + ["nope"], capture_output=True, text=True)
    assert r.returncode == 64
