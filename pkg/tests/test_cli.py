"""Command-line interface: exit codes, JSON/CSV output shapes, and the
batch sweep."""

import json

import numpy as np
import pytest

import geoflow.cli as cli

MARTINET = {"name": "martinet", "dim": 3, "rank": 2,
            "X0": ["0", "0", "0"],
            "frame": [["1", "0", "0"], ["0", "1", "x1^2"]],
            "Q": "0", "density": "1"}


def run(argv):
    """main() returns an int, argparse usage errors raise SystemExit."""
    try:
        return cli.main(argv)
    except SystemExit as stop:
        return int(stop.code or 0)


def test_analyze_flat_plane(capsys):
    rc = run(["analyze", "euclidean:2", "--covector", "1,0"])
    out = capsys.readouterr().out
    assert rc == 0
    report = json.loads(out)
    assert report["flag"]["geodesic_dimension"] == 2
    assert report["flag"]["leading_constant"]["float"] == pytest.approx(1.0)
    assert report["status"] == "ok"


def test_analyze_heisenberg_full_pipeline(capsys):
    rc = run(["analyze", "heisenberg3", "--covector", "1,0,1"])
    report = json.loads(capsys.readouterr().out)
    assert rc == 0
    flag = report["flag"]
    assert flag["growth"] == [2, 3]
    assert flag["geodesic_dimension"] == 5
    assert flag["leading_constant"]["rational"] == "1/12"
    assert report["equiregular"] is True
    assert report["rho"]["gap"] <= 1e-5
    assert report["checks"] and all(report["checks"].values())
    assert report["fit"]["constant_rel_gap"] <= 1e-3


def test_analyze_stationary_covector_exits_degenerate(capsys):
    rc = run(["analyze", "heisenberg3", "--covector", "0,0,1"])
    report = json.loads(capsys.readouterr().out)
    assert rc == 2
    assert report["status"].startswith("degenerate covector")
    assert "flag" not in report


def test_analyze_structure_file_nonequiregular(tmp_path, capsys):
    path = tmp_path / "mart.json"
    path.write_text(json.dumps(MARTINET))
    rc = run(["analyze", "--file", str(path), "--covector", "1,1,0.7"])
    report = json.loads(capsys.readouterr().out)
    assert rc == 2
    assert report["status"] == "growth vector changes along the flow"
    assert report["equiregular"] is False
    assert report["growth_along_flow"][0] == [2, 2, 3]


def test_analyze_numerical_failure_exit(capsys):
    rc = run(["analyze", "euclidean:2", "--covector", "1,0",
              "--drift", "20*x1^2,0"])
    capsys.readouterr()
    assert rc == 3


def test_analyze_no_fit_skips_the_expansion(capsys):
    rc = run(["analyze", "heisenberg3", "--covector", "1,0,1", "--no-fit"])
    report = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert "fit" not in report
    assert set(report["checks"]) == {"rho_two_path"}


def test_analyze_weight_shows_up_in_rho(capsys):
    rc = run(["analyze", "euclidean:2:psi=0.3*x1", "--covector", "1,0",
              "--base", "0.1,-0.2"])
    report = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert report["base"] == [0.1, -0.2]
    assert report["rho"]["gram"] == pytest.approx(0.3, abs=1e-9)


def test_usage_errors_exit_one(capsys):
    cases = [
        [],
        ["bogus"],
        ["analyze", "nosuchspace", "--covector", "1"],
        ["analyze", "euclidean:2"],
        ["analyze", "euclidean:2", "--covector", "a,b"],
        ["analyze", "euclidean:2", "--covector", "1,0", "--window", "0.2"],
        ["analyze", "euclidean:2", "--covector", "1,0,0"],
        ["sweep", "euclidean:2", "/no/such/file.txt"],
    ]
    for argv in cases:
        assert run(argv) == 1, argv
        capsys.readouterr()


def test_verify_identities_all_pass(capsys):
    rc = run(["verify-identities", "--nmax", "6"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.strip().splitlines()
    assert len(lines) == 8
    assert all(line.startswith("PASS") for line in lines)


def test_list_builtins_names(capsys):
    rc = run(["list-builtins"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "heisenberg3" in out
    assert "engel" in out
    assert "heisenberg5" in out


def test_sweep_statuses_in_input_order(tmp_path, capsys, monkeypatch):
    batch = tmp_path / "covs.txt"
    batch.write_text("1,0,1\n0,0,1\n1,0\n")
    monkeypatch.setenv("GEOFLOW_THREADS", "2")
    rc = run(["sweep", "heisenberg3", str(batch)])
    threaded = capsys.readouterr().out
    assert rc == 0
    monkeypatch.setenv("GEOFLOW_THREADS", "1")
    rc = run(["sweep", "heisenberg3", str(batch)])
    serial = capsys.readouterr().out
    # worker count must never change the rows or their order
    assert threaded == serial
    lines = threaded.strip().splitlines()
    assert lines[0].rstrip() == ("covector,growth,dimension,rho,C_fit,"
                                 "trR_fit,residual,status")
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == '"1'  # quoted because the covector contains commas
    assert lines[1].rstrip().endswith("ok")
    assert "degenerate" in lines[2]
    assert "bad-input" in lines[3]
    ok_fields = lines[1].rsplit(",", 5)
    assert float(ok_fields[2]) == pytest.approx(1.0 / 12.0, rel=1e-3)


def test_sweep_empty_file_emits_header_only(tmp_path, capsys):
    batch = tmp_path / "empty.txt"
    batch.write_text("")
    rc = run(["sweep", "heisenberg3", str(batch)])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.strip().splitlines() == ["covector,growth,dimension,rho,"
                                        "C_fit,trR_fit,residual,status"]


def test_expansion_table_matches_flat_square_law(capsys):
    rc = run(["expansion", "euclidean:2", "--covector", "1,0",
              "--samples", "12"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.strip().splitlines()
    assert lines[0].rstrip() == "t,ratio,h,model"
    assert len(lines) == 13
    for line in lines[1:]:
        t, ratio, h, model = (float(v) for v in line.split(","))
        assert ratio == pytest.approx(t * t, rel=1e-8)
        assert abs(h) <= 1e-8


def test_out_flag_writes_files_not_stdout(tmp_path, capsys):
    target = tmp_path / "report.json"
    rc = run(["analyze", "heisenberg3", "--covector", "1,0,1",
              "--out", str(target)])
    assert rc == 0
    assert capsys.readouterr().out == ""
    report = json.loads(target.read_text())
    assert report["flag"]["leading_constant"]["rational"] == "1/12"

    listing = tmp_path / "identities.txt"
    rc = run(["verify-identities", "--nmax", "4", "--out", str(listing)])
    assert rc == 0
    assert capsys.readouterr().out == ""
    assert all(line.startswith("PASS")
               for line in listing.read_text().strip().splitlines())


def test_report_json_is_stable_under_roundtrip(capsys):
    rc = run(["analyze", "engel", "--covector", "0.8,0.6,0.5,-0.4"])
    out = capsys.readouterr().out
    assert rc == 0
    report = json.loads(out)
    assert json.loads(json.dumps(report)) == report
    assert report["flag"]["growth"] == [2, 3, 4]
    assert report["flag"]["geodesic_dimension"] == 10
