"""
Tests for the germlab command line
"""
import json

import pytest

from germlab.cli import main
from germlab.services import InvariantService


def _read(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_build_pair_writes_labelled_files(tmp_path):
    out = tmp_path / "ex1.json"
    assert main(["build", "example1", "--k", "6", "--out", str(out)]) == 0
    x1, x2 = _read(tmp_path / "ex1.X1.json"), _read(tmp_path / "ex1.X2.json")
    assert [s["name"] for s in x1["sheets"]] == ["U1", "U2", "U3"]
    assert x2["metadata"]["k"] == "6/1"


def test_build_single_model_to_stdout(capsys):
    assert main(["build", "bridge", "--q", "4", "--beta", "2"]) == 0
    document = json.loads(capsys.readouterr().out)
    assert document["bridges"][0]["p"] == "3/1"


@pytest.mark.parametrize("argv", [
    ["build", "example1", "--k", "4"],
    ["build", "family", "--i", "-1"],
    ["build", "bridge", "--q", "2", "--beta", "2"],
    ["invariants", "does-not-exist.json"],
])
def test_bad_input_exits_with_two(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "out.json")]) == 2


def test_unknown_command_is_a_usage_error():
    with pytest.raises(SystemExit) as caught:
        main(["verify", "nonsense"])
    assert caught.value.code == 2


def test_empty_model_has_empty_report(tmp_path):
    model = tmp_path / "empty.json"
    model.write_text(json.dumps({"dimension": 3}), encoding="utf-8")
    report_path = tmp_path / "report.json"
    assert main(["invariants", str(model), "--out", str(report_path)]) == 0
    report = _read(report_path)
    assert report["link"]["closed"] == 0
    assert report["link"]["open"] == 0
    assert report["knots"] == [] and report["linking"] == []


def test_invariants_are_deterministic(tmp_path):
    model = tmp_path / "bridge.json"
    assert main(["build", "bridge", "--out", str(model)]) == 0
    reports = []
    for run in ("a", "b"):
        path = tmp_path / f"{run}.json"
        argv = ["invariants", str(model), "--skip-tangent-cone", "--resolution", "64", "--t", "0.25", "--out", str(path)]
        assert main(argv) == 0
        reports.append(path.read_bytes())
    assert reports[0] == reports[1]
    report = json.loads(reports[0])
    assert report["link"]["open"] == 2
    assert report["exponents"][0]["slope"] == pytest.approx(3.0, abs=1e-9)
    assert "runtime_seconds" not in report["parameters"]


def test_surgery_and_link_export(tmp_path):
    model = tmp_path / "bridge.json"
    main(["build", "bridge", "--out", str(model)])
    report_path, link_path = tmp_path / "report.json", tmp_path / "link.csv"
    argv = [
        "invariants", str(model), "--surgery", "break-bridge", "--skip-tangent-cone", "--resolution", "64",
        "--t", "0.25", "--link-out", str(link_path), "--format", "csv", "--out", str(report_path), "--timings",
    ]
    assert main(argv) == 0
    assert _read(report_path)["parameters"]["surgery"] == "break-bridge"
    assert "runtime_seconds" in _read(report_path)["parameters"]
    assert link_path.read_text(encoding="utf-8").startswith("component,index,x,y,z,closed")


def test_seed_from_environment(tmp_path, monkeypatch):
    model = tmp_path / "empty.json"
    model.write_text(json.dumps({"dimension": 4}), encoding="utf-8")
    monkeypatch.setenv("GERMLAB_SEED", "17")
    report_path = tmp_path / "report.json"
    assert main(["invariants", str(model), "--seed", "3", "--out", str(report_path)]) == 0
    assert _read(report_path)["parameters"]["seed"] == 17


def test_corrupted_knot_table_fails_verification(tmp_path, knot_table_copy):
    table = knot_table_copy(trefoil=[1, -2, 1])
    report_path = tmp_path / "verify.json"
    argv = ["verify", "properties", "--knot-table", str(table), "--resolution", "64", "--out", str(report_path)]
    assert main(argv) == 1
    report = _read(report_path)
    assert not report["passed"]
    assert any(not check["passed"] for check in report["checks"])


def test_verdict_line(tmp_path, knot_table_copy, capsys):
    table = knot_table_copy(trefoil=[1, -2, 1])
    argv = ["verify", "properties", "--knot-table", str(table), "--resolution", "64", "--out", str(tmp_path / "verify.json")]
    assert main(argv) == 1
    lines = capsys.readouterr().err.splitlines()
    assert any(line.startswith("FAILED ") for line in lines)
    assert lines[-1].startswith("FAIL properties: ")
    assert lines[-1].endswith(" checks passed")


def test_distortion_reports_are_exported(tmp_path, capsys):
    argv = [
        "verify", "example1", "--samples", "220", "--resolution", "64",
        "--out", str(tmp_path / "verify.json"), "--distortion-out", str(tmp_path / "distortion.json"),
    ]
    assert main(argv) in (0, 1)
    document = _read(tmp_path / "distortion.example1-map.json")
    assert document["label"] == "example1-map"
    assert document["samples"] == 220
    err = capsys.readouterr().err
    assert "example1-map: max/min" in err
    assert err.splitlines()[-1].split()[0] in ("PASS", "FAIL")


def test_diagram_export(tmp_path):
    model = tmp_path / "x1.json"
    assert main(["build", "family", "--i", "1", "--out", str(model)]) == 0
    diagram_path = tmp_path / "diagram.json"
    argv = [
        "invariants", str(model), "--skip-tangent-cone", "--resolution", "64",
        "--out", str(tmp_path / "report.json"), "--diagram-out", str(diagram_path),
    ]
    assert main(argv) == 0
    document = _read(diagram_path)
    assert len(document["components"]) == 1
    assert len(document["gauss_code"].split()) == 2 * len(document["crossings"])


def test_diagram_export_needs_closed_components(tmp_path):
    model = tmp_path / "bridge.json"
    assert main(["build", "bridge", "--out", str(model)]) == 0
    argv = [
        "invariants", str(model), "--skip-tangent-cone", "--resolution", "64", "--t", "0.25",
        "--out", str(tmp_path / "report.json"), "--diagram-out", str(tmp_path / "diagram.json"),
    ]
    assert main(argv) == 2


def test_unexpected_errors_exit_with_two(tmp_path, monkeypatch, capsys):
    def broken(*args, **kwargs):
        raise IndexError("component 3 out of range")

    monkeypatch.setattr(InvariantService, "compute", staticmethod(broken))
    model = tmp_path / "empty.json"
    model.write_text(json.dumps({"dimension": 3}), encoding="utf-8")
    assert main(["invariants", str(model)]) == 2
    assert "unexpected IndexError" in capsys.readouterr().err
