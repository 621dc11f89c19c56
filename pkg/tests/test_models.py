"""
Tests for sheets, arcs, unions, validation and piece maps
"""
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from germlab.constructions import break_bridge
from germlab.exceptions import InvalidInputError
from germlab.models import (
    AffinePiece,
    ConicalPiece,
    GermModel,
    HornCut,
    ImplicitArc,
    PLMap,
    as_rational,
    compile_polynomial,
    leading_form,
    make_cone_sheet,
    make_holder_triangle,
    make_implicit_sheet,
    parse_polynomial,
    power_arc,
    t,
    union,
    validate,
    x,
    y,
)
from germlab.sectioning import link_distance, section_at


# ============= Rationals and Polynomials =============

@pytest.mark.parametrize("value, expected", [
    (3, Fraction(3)),
    ("5/2", Fraction(5, 2)),
    (0.5, Fraction(1, 2)),
    (sp.Rational(7, 3), Fraction(7, 3)),
])
def test_as_rational(value, expected):
    assert as_rational(value) == expected


@pytest.mark.parametrize("value", [True, "abc", "1/0"])
def test_as_rational_rejects(value):
    with pytest.raises(InvalidInputError):
        as_rational(value)


def test_leading_form_drops_higher_degrees():
    polynomial = parse_polynomial("((x - t)**2 + y**2 - t**2)*((x + t)**2 + y**2 - t**2) - t**5")
    lead = leading_form(polynomial)
    assert sp.expand(lead - ((x**2 + y**2)**2 - 4 * x**2 * t**2)) == 0


def test_leading_form_with_rational_degree():
    assert leading_form(parse_polynomial("x**2 - t**(5/2)")) == x**2


def test_compile_polynomial_broadcasts():
    evaluate = compile_polynomial(parse_polynomial("x*y - t"))
    values = evaluate(np.array([1.0, 2.0]), 3.0, 0.5)
    assert values.tolist() == [2.5, 5.5]


def test_parse_polynomial_rejects_garbage():
    with pytest.raises(InvalidInputError):
        parse_polynomial("x +* y")


# ============= Arcs =============

def test_power_arc_rejects_nonpositive_exponent():
    with pytest.raises(InvalidInputError):
        power_arc("bad", ys=[(1.0, 0)])


def test_implicit_arc_solves_branch():
    polynomial = parse_polynomial("((x - t)**2 + y**2 - t**2)*((x + t)**2 + y**2 - t**2) - t**5")
    upper = ImplicitArc(name="up", polynomial=polynomial, coefficient=0.0, exponent=Fraction(1), branch=1)
    lower = ImplicitArc(name="down", polynomial=polynomial, coefficient=0.0, exponent=Fraction(1), branch=-1)
    assert upper.evaluate([0.5])[0, 1] == pytest.approx(0.5 ** 1.25, rel=1e-9)
    assert lower.evaluate([0.5])[0, 1] == pytest.approx(-(0.5 ** 1.25), rel=1e-9)


def test_implicit_arc_branch_must_be_a_sign():
    with pytest.raises(InvalidInputError):
        ImplicitArc(name="a", polynomial=x - y, coefficient=0.0, exponent=Fraction(1), branch=0)


# ============= Sheets =============

def test_cone_sheet_detects_closed_curve():
    sheet = make_cone_sheet([(1, 0), (2, 0), (2, 1), (1, 0)], name="loop")
    assert sheet.closed
    assert len(sheet.curve) == 3


def test_cone_sheet_needs_two_vertices():
    with pytest.raises(InvalidInputError):
        make_cone_sheet([(1, 0)], name="dot")


def test_cone_section_scales_and_stops_at_reach():
    sheet = make_cone_sheet([(1, 0), (2, 0)], name="ray", reach=0.5)
    (points, closed), = sheet.section(0.25)
    assert not closed
    np.testing.assert_allclose(points, [[0.25, 0, 0], [0.5, 0, 0]])
    assert sheet.section(0.75) == []


def test_horn_cut_removes_a_shrinking_window():
    sheet = make_cone_sheet([(1, 0), (5, 0)], name="ray")
    cut = replace(sheet, horn=HornCut(position=0.5, width=0.5, beta=Fraction(2)))
    pieces = cut.section(0.5)
    assert len(pieces) == 2
    lengths = [np.linalg.norm(p[-1] - p[0]) for p, _ in pieces]
    np.testing.assert_allclose(lengths, [0.875, 0.875])


def test_holder_triangle_section_endpoints():
    triangle = make_holder_triangle(2, 3, -1)
    (points, _), = triangle.section(0.5, 8)
    np.testing.assert_allclose(points[0], [-0.25, -0.125, 0.0])
    np.testing.assert_allclose(points[-1], [0.25, -0.125, 0.0])
    assert triangle.name == "T-"


@pytest.mark.parametrize("beta, q, sign", [(3, 3, 1), (0.5, 3, 1), (2, 3, 0)])
def test_holder_triangle_rejects(beta, q, sign):
    with pytest.raises(InvalidInputError):
        make_holder_triangle(beta, q, sign)


def test_implicit_sheet_rejects_zero_polynomial():
    with pytest.raises(InvalidInputError):
        make_implicit_sheet("x - x")


# ============= Unions and Validation =============

def test_union_renames_colliding_sheets():
    a = make_cone_sheet([(1, 0), (2, 0)], name="C")
    b = make_cone_sheet([(1, 1), (2, 1)], name="C")
    model = union(a, b)
    assert model.sheet_names == ["C", "C~2"]


def test_union_rejects_mixed_dimensions():
    a = make_cone_sheet([(1, 0), (2, 0)], name="A", dimension=3)
    b = make_cone_sheet([(1, 0), (2, 0)], name="B", dimension=4)
    with pytest.raises(InvalidInputError):
        union(a, b)


def test_union_is_associative():
    a = make_cone_sheet([(1, 0), (2, 0)], name="A")
    b = make_cone_sheet([(1, 1), (2, 1)], name="B")
    c = make_cone_sheet([(-1, 1), (-2, 1)], name="C")
    left, right = union(union(a, b), c), union(a, union(b, c))
    assert left.sheet_names == right.sheet_names == ["A", "B", "C"]
    assert link_distance(section_at(left, 0.25, 64), section_at(right, 0.25, 64)) < 1e-12


def test_germ_model_rejects_dimension():
    with pytest.raises(InvalidInputError):
        GermModel(dimension=5)


def test_built_models_validate_cleanly(example1, family, bridge):
    for model in (*example1, family(1), bridge, break_bridge(bridge)):
        assert validate(model) == []


def test_validate_reports_missing_upper_bound():
    sheet = make_implicit_sheet("y - x", constraints=["t"], name="S")
    found = validate(GermModel(dimension=3, sheets=(sheet,)))
    assert [(d.sheet, d.message) for d in found] == [("S", "constraints lack the bound t <= 1")]


def test_validate_reports_duplicate_names():
    a = make_cone_sheet([(1, 0), (2, 0)], name="C")
    found = validate(GermModel(dimension=3, sheets=(a, a)))
    assert any(d.message == "duplicate sheet name" for d in found)


def test_validate_is_repeatable():
    a = make_cone_sheet([(1, 0), (2, 0)], name="C")
    model = GermModel(dimension=3, sheets=(a, a))
    first = validate(model)
    assert validate(model) == first
    assert model.sheet_names == ["C", "C"]


def test_validate_reports_axis_crossing_cone():
    sheet = make_cone_sheet([(-1, 0), (0, 0), (1, 1)], name="through")
    found = validate(GermModel(dimension=3, sheets=(sheet,)))
    assert [d.severity for d in found] == ["error"]


# ============= Piece Maps =============

def test_affine_piece_shifts_with_scale():
    piece = AffinePiece(source="U2", target="V2", t_shift=(0.0, -0.5, 0.0))
    image = piece.apply(np.array([[0.5, 0.25, 0.0]]), np.array([0.5]))
    np.testing.assert_allclose(image, [[0.5, 0.0, 0.0]])


def test_conical_piece_matches_arclength():
    piece = ConicalPiece(
        source="a", target="b",
        source_curve=((1.0, 0.0, 0.0), (1.0, 1.0, 0.0)),
        target_curve=((2.0, 0.0, 0.0), (2.0, 2.0, 0.0)),
    )
    image = piece.apply(np.array([[0.5, 0.25, 0.0]]), np.array([0.5]))
    np.testing.assert_allclose(image, [[1.0, 0.5, 0.0]])


def test_map_cover_must_be_exact(example1):
    x1, _ = example1
    partial = PLMap(pieces=(AffinePiece(source="U1", target="U1"),))
    with pytest.raises(InvalidInputError):
        partial.check_cover(x1)
    stray = PLMap(pieces=tuple(AffinePiece(source=n, target=n) for n in x1.sheet_names + ["W"]))
    with pytest.raises(InvalidInputError):
        stray.check_cover(x1)
