"""
Tests for model files, link exports, diagrams and distortion reports
"""
import json

import numpy as np
import pytest
import sympy as sp

from germlab.constructions import break_bridge, build_example1, build_family_Zi
from germlab.exceptions import InvalidInputError
from germlab.knots import project_generic, table_knot
from germlab.metrics import DistortionReport
from germlab.models import parse_polynomial
from germlab.sectioning import section_at
from germlab.storage import (
    diagram_to_file,
    dumps,
    labelled_path,
    link_to_csv,
    link_to_obj,
    load_diagram,
    load_distortion,
    load_model,
    model_to_file,
    polynomial_from_map,
    polynomial_to_map,
    save_diagram,
    save_distortion,
    save_link,
    save_model,
)


def test_polynomial_map_keeps_rational_exponents():
    expression = parse_polynomial("x**4 - 3*t**(9/2) + y**2*t/2")
    mapping = polynomial_to_map(expression)
    assert mapping == {"0,0,9/2": "-3/1", "0,2,1": "1/2", "4,0,0": "1/1"}
    assert sp.expand(polynomial_from_map(mapping) - expression) == 0


def test_example1_file_round_trip(tmp_path):
    x1, _ = build_example1("9/2")
    path = tmp_path / "x1.json"
    save_model(x1, path)
    loaded = load_model(path)
    assert loaded.sheet_names == x1.sheet_names
    assert sp.expand(loaded.sheet("U1").polynomial - x1.sheet("U1").polynomial) == 0
    assert loaded.sheet("U2") == x1.sheet("U2")
    np.testing.assert_allclose(loaded.arc("gamma+").evaluate([0.25]), x1.arc("gamma+").evaluate([0.25]))
    assert loaded.metadata == x1.metadata


def test_broken_bridge_file_round_trip(tmp_path, bridge):
    broken = break_bridge(bridge)
    path = tmp_path / "broken.json"
    save_model(broken, path)
    loaded = load_model(path)
    assert loaded.bridges == broken.bridges
    assert loaded.sheets == broken.sheets
    assert dumps(model_to_file(loaded)) == dumps(model_to_file(broken))


def test_horn_survives_the_file(tmp_path):
    model = build_family_Zi(1)
    path = tmp_path / "z1.json"
    save_model(model, path)
    assert load_model(path).sheet("braid-A").horn == model.sheet("braid-A").horn


def test_dumps_is_stable(bridge):
    text = dumps(model_to_file(bridge))
    assert text == dumps(model_to_file(bridge))
    assert text.endswith("}\n")


@pytest.mark.parametrize("document", [
    "not json",
    json.dumps({"dimension": 5}),
    json.dumps({"dimension": 3, "schema_version": 2}),
    json.dumps({"dimension": 3, "sheets": [
        {"name": "A", "kind": "cone", "payload": {"vertices": [[1, 0, 0], [2, 0, 0]], "closed": False}},
        {"name": "A", "kind": "cone", "payload": {"vertices": [[1, 1, 0], [2, 1, 0]], "closed": False}},
    ]}),
    json.dumps({"dimension": 3, "sheets": [
        {"name": "S", "kind": "implicit", "payload": {"polynomial": {"1,0,0": "1", "0,1,0": "-1"}, "constraints": [{"0,0,1": "x"}]}},
    ]}),
    json.dumps({"dimension": 4, "sheets": [
        {"name": "T", "kind": "holder", "payload": {"beta": "2", "q": "3", "sign": 2, "template": [[], [], []]}},
    ]}),
])
def test_malformed_files_are_rejected(tmp_path, document):
    path = tmp_path / "model.json"
    path.write_text(document, encoding="utf-8")
    with pytest.raises(InvalidInputError):
        load_model(path)


def test_missing_file_is_rejected(tmp_path):
    with pytest.raises(InvalidInputError):
        load_model(tmp_path / "absent.json")


# ============= Link Exports =============

@pytest.fixture
def link(example1, resolution):
    return section_at(example1[0], 0.125, resolution)


def test_obj_export(link):
    lines = link_to_obj(link).splitlines()
    assert lines[0].startswith("# link section")
    assert sum(line.startswith("v ") for line in lines) == sum(len(c.points) for c in link.components)
    assert sum(line.startswith("l ") for line in lines) == len(link.components)


def test_csv_export(link):
    rows = link_to_csv(link).splitlines()
    assert rows[0] == "component,index,x,y,z,closed"
    assert len(rows) == 1 + sum(len(c.points) for c in link.components)
    assert rows[1].startswith("0,0,")


def test_save_link_formats(tmp_path, link):
    save_link(link, tmp_path / "link.json")
    document = json.loads((tmp_path / "link.json").read_text(encoding="utf-8"))
    assert len(document["components"]) == 3
    with pytest.raises(InvalidInputError):
        save_link(link, tmp_path / "link.ply", fmt="ply")


# ============= Diagrams and Distortion Reports =============

def test_diagram_file_round_trip(tmp_path):
    diagram = project_generic([table_knot("trefoil")], seed=0)
    path = tmp_path / "trefoil.json"
    save_diagram(diagram, path)
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["gauss_code"] == diagram.gauss_code()
    loaded = load_diagram(path)
    assert loaded.crossings == diagram.crossings
    assert loaded.gauss_code() == diagram.gauss_code()
    np.testing.assert_allclose(loaded.components[0], diagram.components[0])


@pytest.mark.parametrize("change", [
    {"sign": 2},
    {"over": [0, 1]},
    {"under": [3, 0, 0.5]},
])
def test_malformed_diagrams_are_rejected(tmp_path, change):
    document = diagram_to_file(project_generic([table_knot("trefoil")], seed=0)).model_dump(mode="json")
    document["crossings"][0].update(change)
    path = tmp_path / "diagram.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    with pytest.raises(InvalidInputError):
        load_diagram(path)


def test_diagram_gauss_code_must_match(tmp_path):
    document = diagram_to_file(project_generic([table_knot("trefoil")], seed=0)).model_dump(mode="json")
    document["gauss_code"] = "O1+ U1+"
    path = tmp_path / "diagram.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    with pytest.raises(InvalidInputError):
        load_diagram(path)


def test_distortion_file_round_trip(tmp_path):
    report = DistortionReport(per_scale=[(0.5, 0.9, 1.1), (0.25, 0.95, 1.05)], global_min=0.9, global_max=1.1, samples=400, seed=3)
    path = tmp_path / "map.json"
    save_distortion(report, path, label="example1-map")
    assert json.loads(path.read_text(encoding="utf-8"))["label"] == "example1-map"
    assert load_distortion(path) == report


def test_labelled_path():
    assert labelled_path("out/report.json", "X1").name == "report.X1.json"
    assert labelled_path("report", "X1").name == "report.X1.json"
