import json
import subprocess
import sys

import pytest

from conftest import BOW, IV, graph, iv_point
from scmid.cli import run
from scmid.identify import sample_parameters
from scmid.scm import phi


@pytest.fixture
def files(tmp_path):
    (tmp_path / "iv.graph").write_text(IV + "\n")
    (tmp_path / "bow.graph").write_text(BOW + "\n")
    (tmp_path / "iv_sigma.json").write_text(json.dumps(phi(graph(IV), iv_point()).to_json()))
    g = graph(BOW)
    (tmp_path / "bow_sigma.json").write_text(json.dumps(phi(g, sample_parameters(g, 0)).to_json()))
    (tmp_path / "square.txt").write_text("x^2 - 1\n")
    return tmp_path


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_generic_iv_exit_zero(files, capsys):
    code, out, _ = call(capsys, "check-generic", files / "iv.graph")
    report = json.loads(out)
    assert code == 0
    assert report["exit_code"] == 0
    assert report["report"]["result"]["verdict"] == "GenericallyIdentifiable"
    assert "defaults" in report and "config" in report


def test_check_numeric_exit_codes(files, capsys):
    code, out, _ = call(capsys, "check-numeric", files / "iv.graph", files / "iv_sigma.json")
    assert code == 0
    assert json.loads(out)["report"]["result"]["verdict"] == "Unique"
    code, out, _ = call(capsys, "check-numeric", files / "bow.graph", files / "bow_sigma.json")
    assert code == 1


def test_feasible_and_text_format(files, capsys):
    code, out, _ = call(capsys, "feasible", files / "iv.graph", files / "iv_sigma.json", "--format", "text")
    assert code == 0
    assert "verdict: Feasible" in out
    assert out.rstrip().endswith("exit: 0")


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["no-such-command"],
        ["check-numeric"],
        ["check-generic", "missing.graph"],
        ["check-generic", "{g}", "--budget", "-3"],
        ["check-edge", "{g}"],
        ["export-formula", "--kind", "pd"],
        ["reduce", "{sq}"],
    ],
)
def test_usage_errors_exit_64(files, capsys, argv):
    argv = [a.format(g=files / "iv.graph", sq=files / "square.txt") for a in argv]
    code, out, err = call(capsys, *argv)
    assert code == 64
    assert out == ""
    assert err


def test_bad_graph_exit_64(files, capsys):
    (files / "bad.graph").write_text("1 -> 2; 2 -> 1\n")
    code, _, err = call(capsys, "check-generic", files / "bad.graph")
    assert code == 64
    assert "cycle" in err


def test_reduce_plant_bundle(files, capsys):
    out_dir = files / "out"
    code, out, _ = call(capsys, "reduce", "--plant", files / "square.txt", "-o", out_dir)
    report = json.loads(out)
    assert code == 0
    cert = report["report"]["certificate"]
    assert cert["ok"]
    names = {c["name"] for c in cert["checks"]}
    assert any("domin" in n for n in names)
    assert any("cholesky" in n.lower() for n in names)
    assert (out_dir / "bundle.json").exists()
    assert json.loads((out_dir / "report.json").read_text()) == report


def test_verify_fresh_and_corrupted_bundle(files, capsys):
    out_dir = files / "out"
    call(capsys, "reduce", files / "square.txt", "-o", out_dir)
    bundle = out_dir / "bundle.json"
    code, out, _ = call(capsys, "verify-reduction", bundle)
    assert code == 0

    data = json.loads(bundle.read_text())
    entries = data["sigma"]["entries"]
    entries[0][1] = "1/7"
    bad = files / "bad_bundle.json"
    bad.write_text(json.dumps(data))
    code, out, _ = call(capsys, "verify-reduction", bad)
    report = json.loads(out)
    assert code != 0
    assert not report["report"]["certificate"]["ok"]
    failed = [c["name"] for c in report["report"]["certificate"]["checks"] if not c["ok"]]
    assert failed


def test_verify_with_witness(files, capsys):
    out_dir = files / "out"
    call(capsys, "reduce", "--plant", files / "square.txt", "-o", out_dir)
    (files / "w.json").write_text(json.dumps({"values": [1]}))
    code, out, _ = call(capsys, "verify-reduction", out_dir / "bundle.json", "--witness", files / "w.json")
    report = json.loads(out)["report"]
    assert code == 0
    assert report["witness_lifted_from_original"]
    embed = [c for c in report["certificate"]["checks"] if "witness" in c["name"]]
    assert embed and all(c["ok"] for c in embed)

    (files / "w_bad.json").write_text("[2]")
    code, out, _ = call(capsys, "verify-reduction", out_dir / "bundle.json", "--witness", files / "w_bad.json")
    assert code != 0


def test_json_reports_byte_identical(files, capsys):
    argv = ["check-generic", files / "iv.graph", "--seeds", "3,4"]
    _, first, _ = call(capsys, *argv)
    _, second, _ = call(capsys, *argv)
    assert first == second
    assert json.loads(first)["config"]["solver"]["seeds"] == [3, 4]


def test_simulate_and_fiber(files, capsys):
    code, out, _ = call(capsys, "simulate", files / "iv.graph")
    assert code == 0
    sigma = json.loads(out)["report"]["sigma"]
    assert sigma["rows"] == 3
    code, out, _ = call(capsys, "fiber", files / "iv.graph", files / "iv_sigma.json")
    assert code == 0
    assert json.loads(out)["report"]["fiber"]["variables"]


def test_check_edge(files, capsys):
    code, out, _ = call(capsys, "check-edge", files / "iv.graph", files / "iv_sigma.json", "--edge", "2,3")
    assert code == 0
    code, out, _ = call(capsys, "check-edge", files / "bow.graph", "--edge", "1,2")
    assert code == 1


def test_export_formula_files(files, capsys):
    stem = files / "f" / "iv_numeric"
    code, out, _ = call(capsys, "export-formula", "--kind", "numeric", files / "iv.graph", files / "iv_sigma.json", "-o", stem)
    assert code == 0
    assert out == ""
    smt = (files / "f" / "iv_numeric.smt2").read_text()
    assert smt.startswith(";") and "(check-sat)" in smt
    assert (files / "f" / "iv_numeric.txt").read_text().startswith("#")

    code, out, _ = call(capsys, "export-formula", "--kind", "pd", "--n", "2", "--pattern", "1,2", "--format", "text")
    assert code == 0
    assert "a_1_1" in out


def test_module_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "scmid", "check-generic", str(files / "iv.graph"), "--format", "text"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "GenericallyIdentifiable" in proc.stdout
