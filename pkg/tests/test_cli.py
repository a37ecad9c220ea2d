import json

import numpy as np
import pytest

from freehull import cli
from freehull.moments import moments_from_representation
from freehull.ncpoly import MatrixTuple
from freehull.scenarios import malicious_point
from freehull.service import handlers

TV = "1 - x1^2 - x2^4"


def _point_file(tmp_path, mats, name="pt.json"):
    mats = [np.atleast_2d(np.asarray(M, dtype=float)) for M in mats]
    path = tmp_path / name
    path.write_text(json.dumps({"g": len(mats), "n": mats[0].shape[0],
                                "matrices": [M.tolist() for M in mats]}))
    return str(path)


def _run(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out


def test_member_feasible_and_report_file(tmp_path, capsys):
    pt = _point_file(tmp_path, [0.6, 0.5])
    out_path = tmp_path / "verdict.json"
    code, out = _run(capsys, ["member", "--poly", TV, "--point", pt, "--level", "0",
                              "--json", str(out_path)])
    assert code == 0
    data = json.loads(out.out)
    assert data["status"] == "StrictlyFeasible" and data["margin"] > 0
    assert json.loads(out_path.read_text()) == data


def test_member_infeasible_exit_one(tmp_path, capsys):
    pt = _point_file(tmp_path, [1.05, 0.0])
    code, out = _run(capsys, ["member", "--poly", TV, "--point", pt])
    assert code == 1
    data = json.loads(out.out)
    assert data["status"] == "Infeasible" and data["certificate"]["verified"]


def test_poly_from_file_and_witness(tmp_path, capsys):
    poly = tmp_path / "p.txt"
    poly.write_text(TV + "\n")
    pt = _point_file(tmp_path, [0.2, 0.1])
    wit = tmp_path / "w.json"
    code, out = _run(capsys, ["member", "--poly", str(poly), "--point", pt,
                              "--witness", str(wit)])
    assert code == 0
    assert json.loads(out.out)["witness_file"] == str(wit)
    assert json.loads(wit.read_text())["g"] == 2


def test_usage_errors(tmp_path, capsys):
    pt = _point_file(tmp_path, [0.6, 0.5])
    cases = [["member", "--poly", "1 - x1^^2", "--point", pt],
             ["member", "--poly", TV, "--point", str(tmp_path / "missing.json")],
             ["member", "--poly", TV, "--point", pt, "--n", "3"],
             ["member", "--poly", TV],
             ["member", "--poly", "1 - x3^2", "--point", pt],
             ["bogus"]]
    for argv in cases:
        code, out = _run(capsys, argv)
        assert code == 2, argv
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"g": 1, "n": 2, "matrices": [[[0, 1], [0, 0]]]}))
    assert _run(capsys, ["eval", "--poly", "x1", "--point", str(bad)])[0] == 2


def test_numerical_failure_exit_three(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise np.linalg.LinAlgError("factorization broke down")
    monkeypatch.setattr(handlers, "membership", boom)
    pt = _point_file(tmp_path, [0.6, 0.5])
    code, out = _run(capsys, ["member", "--poly", TV, "--point", pt])
    assert code == 3 and "numerical failure" in out.err


def test_eval(tmp_path, capsys):
    pt = _point_file(tmp_path, [0.6, 0.5])
    code, out = _run(capsys, ["eval", "--poly", TV, "--point", pt])
    data = json.loads(out.out)
    assert code == 0
    assert data["value"][0][0] == pytest.approx(0.5775, abs=1e-12)
    assert data["psd"] and data["canonical"]


def test_separate(tmp_path, capsys):
    X, Y, _ = malicious_point()
    pt = _point_file(tmp_path, [X, Y])
    argv = ["separate", "--poly", TV, "--point", pt, "--level", "1"]
    # without the archimedean box (R = 1e3) the certificate cannot be verified: Marginal
    assert _run(capsys, argv)[0] == 2
    code, out = _run(capsys, argv + ["--arch", str(5 ** 0.5 / 2)])
    assert code == 0
    data = json.loads(out.out)
    assert data["value_at_point"] < 0 and len(data["provenance"]) == 16
    feasible = _point_file(tmp_path, [0.1, 0.1], "f.json")
    assert _run(capsys, ["separate", "--poly", TV, "--point", feasible])[0] == 2


def test_gns(tmp_path, capsys):
    Y = moments_from_representation(MatrixTuple.scalar([0.6, 0.5]), [[1.0]], 6)
    path = tmp_path / "m.json"
    Y.dump(path)
    code, out = _run(capsys, ["gns", "--moments", str(path), "--degree", "3", "--poly", TV])
    assert code == 0
    data = json.loads(out.out)
    assert data["dim"] == 1 and data["Z"][0][0][0] == pytest.approx(0.6, abs=1e-12)
    # non-flat data is a usage error
    assert _run(capsys, ["gns", "--moments", str(path), "--degree", "9"])[0] == 2


def test_soscheck(capsys):
    code, out = _run(capsys, ["soscheck", "--target", "1.25 - x1^2 - x2^2", "--poly", TV,
                              "--alpha", "2", "--beta", "0"])
    assert code == 0 and json.loads(out.out)["found"]
    code, out = _run(capsys, ["soscheck", "--target", "x1", "--poly", TV,
                              "--alpha", "2", "--beta", "0"])
    assert code == 1 and not json.loads(out.out)["found"]


def test_arch_verify(capsys):
    argv = ["arch-verify", "--poly", TV, "--sos", "x2^2 - 0.5", "--loc", "1"]
    code, out = _run(capsys, argv + ["--k2", "1.25"])
    assert code == 0 and json.loads(out.out) == {"valid": True, "residual_terms": 0}
    code, out = _run(capsys, argv + ["--k2", "1.3"])
    assert code == 1 and not json.loads(out.out)["valid"]


def test_scenario(tmp_path, capsys):
    out_path = tmp_path / "out.json"
    code, out = _run(capsys, ["scenario", "tv-archimedean", "--json", str(out_path)])
    assert code == 0
    data = json.loads(out_path.read_text())
    assert data["pass"] and data["scenario"] == "tv-archimedean"
    assert all({"name", "expected", "observed", "pass"} <= set(c) for c in data["checks"])
    assert _run(capsys, ["scenario", "nope"])[0] == 2
