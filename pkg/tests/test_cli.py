import json

import pytest

from fsmguard import cli
from tests.conftest import REF14_DOC, TOGGLE_DOC


@pytest.fixture()
def fsm_file(tmp_path):
    p = tmp_path / "ref14.json"
    p.write_text(json.dumps(REF14_DOC))
    return p


@pytest.fixture()
def hardened_dir(tmp_path, fsm_file):
    out = tmp_path / "out"
    rc = cli.main(
        ["harden", "--fsm", str(fsm_file), "--level", "2", "--seed", "7", "--out", str(out)]
    )
    assert rc == cli.EXIT_OK
    return out


def test_harden_writes_artifacts(hardened_dir):
    for name in ("netlist.json", "netlist.v", "codebook.json", "hardening_report.json"):
        assert (hardened_dir / name).exists(), name
    report = json.loads((hardened_dir / "hardening_report.json").read_text())
    assert report["protection_level"] == 2
    assert "module" in (hardened_dir / "netlist.v").read_text()


def test_harden_missing_file(tmp_path, capsys):
    rc = cli.main(["harden", "--fsm", str(tmp_path / "nope.json"), "--level", "2", "--out", str(tmp_path)])
    assert rc == cli.EXIT_IO


def test_harden_bad_fsm(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"name": "x", "states": [], "reset": "A", "transitions": []}))
    rc = cli.main(["harden", "--fsm", str(p), "--level", "2", "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_FAIL


def test_harden_level_one_rejected(fsm_file, tmp_path):
    rc = cli.main(["harden", "--fsm", str(fsm_file), "--level", "1", "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_FAIL


def test_harden_kiss2_autodetect(tmp_path):
    p = tmp_path / "m.kiss2"
    p.write_text(".i 1\n.o 1\n.r A\n1 A B 0\n1 B A 1\n")
    rc = cli.main(["harden", "--fsm", str(p), "--level", "2", "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_OK


def test_inject_autocover_no_hijack(hardened_dir, tmp_path, capsys):
    report_path = tmp_path / "report.json"
    rc = cli.main(
        [
            "inject",
            "--netlist",
            str(hardened_dir / "netlist.json"),
            "--scope",
            "inputs",
            "--out",
            str(report_path),
        ]
    )
    assert rc == cli.EXIT_OK
    doc = json.loads(report_path.read_text())
    assert doc["totals"]["hijack"] == 0
    assert doc["totals"]["total"] > 0
    out = capsys.readouterr().out
    assert "masked" in out and "detected" in out


def test_inject_diffusion_scope(hardened_dir, tmp_path):
    report_path = tmp_path / "dr.json"
    rc = cli.main(
        [
            "inject",
            "--netlist",
            str(hardened_dir / "netlist.json"),
            "--scope",
            "diffusion",
            "--out",
            str(report_path),
        ]
    )
    doc = json.loads(report_path.read_text())
    assert rc == (cli.EXIT_FAIL if doc["totals"]["hijack"] else cli.EXIT_OK)
    assert doc["metadata"]["scope"] == "diffusion_only"


def test_inject_sampled_mode(hardened_dir, tmp_path):
    report_path = tmp_path / "sr.json"
    rc = cli.main(
        [
            "inject",
            "--netlist",
            str(hardened_dir / "netlist.json"),
            "--scope",
            "inputs",
            "--sample",
            "50",
            "--seed",
            "3",
            "--out",
            str(report_path),
        ]
    )
    assert rc in (cli.EXIT_OK, cli.EXIT_FAIL)
    doc = json.loads(report_path.read_text())
    assert doc["totals"]["total"] == 50
    assert "hijack_rate_ci95" in doc


def test_inject_explicit_trace_file(hardened_dir, tmp_path):
    netlist_doc = json.loads((hardened_dir / "netlist.json").read_text())
    words = netlist_doc["meta"]["autocover_trace"][:4]
    trace = tmp_path / "trace.json"
    trace.write_text(json.dumps(words))
    rc = cli.main(
        [
            "inject",
            "--netlist",
            str(hardened_dir / "netlist.json"),
            "--scope",
            "inputs",
            "--trace",
            str(trace),
            "--out",
            str(tmp_path / "r.json"),
        ]
    )
    assert rc == cli.EXIT_OK


def test_inject_missing_netlist(tmp_path):
    rc = cli.main(
        ["inject", "--netlist", str(tmp_path / "none.json"), "--out", str(tmp_path / "r.json")]
    )
    assert rc == cli.EXIT_IO


def test_simulate_fsm(tmp_path, capsys):
    p = tmp_path / "toggle.json"
    p.write_text(json.dumps(TOGGLE_DOC))
    trace = tmp_path / "trace.json"
    trace.write_text(json.dumps([{"t": 1}, {"t": 0}, {"t": 1}]))
    rc = cli.main(["simulate", "--target", str(p), "--trace", str(trace)])
    assert rc == cli.EXIT_OK
    out = capsys.readouterr().out.split()
    assert "S1" in out and "S0" in out


def test_simulate_netlist_autocover(hardened_dir, capsys):
    rc = cli.main(["simulate", "--target", str(hardened_dir / "netlist.json")])
    assert rc == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "S0" in out and "alert=0" in out


def test_entry_point_installed():
    import subprocess

    proc = subprocess.run(["fsmguard", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "harden" in proc.stdout and "inject" in proc.stdout
