"""
Tests for projections, linking numbers, Alexander polynomials and knot placement
"""
import numpy as np
import pytest

from germlab.exceptions import InvalidInputError, ProjectionError
from germlab.knots import (
    LaurentPoly,
    alexander_polynomial,
    anchor_knot,
    compare_nesting,
    connected_sum,
    gauss_linking_sum,
    knot_alexander,
    linking_number_gauss,
    load_knot_table,
    project_generic,
    table_knot,
)
from germlab.sectioning import NestingTree

TREFOIL = LaurentPoly.normalized([1, -1, 1])
FIGURE_EIGHT = LaurentPoly.normalized([1, -3, 1])

SQUARE = np.array([[-1, -1, 0], [1, -1, 0], [1, 1, 0], [-1, 1, 0]], float)


def _hoop(offset):
    """Square in the xz-plane crossing z = 0 at x = offset and x = offset + 2"""
    return np.array([[offset, 0, -1], [offset, 0, 1], [offset + 2, 0, 1], [offset + 2, 0, -1]], float)


@pytest.fixture(scope="module")
def table():
    return load_knot_table()


# ============= Laurent Polynomials =============

def test_normal_form():
    assert LaurentPoly.normalized([0, -1, 1, -1, 0]).coefficients == (1, -1, 1)
    assert str(LaurentPoly.one()) == "1"


def test_product():
    assert (TREFOIL * FIGURE_EIGHT).coefficients == (1, -4, 5, -4, 1)


# ============= Alexander Polynomials =============

@pytest.mark.parametrize("name", ["unknot", "trefoil", "figure-eight"])
def test_table_entries_match_their_polynomials(table, name):
    entry = table[name]
    assert knot_alexander(entry.vertices, seed=0) == entry.alexander


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_alexander_ignores_projection_direction(table, seed):
    assert knot_alexander(table["trefoil"].vertices, seed=seed) == TREFOIL


def test_connected_sum_multiplies(table):
    polygon = connected_sum(table["trefoil"].vertices, table["figure-eight"].vertices)
    assert knot_alexander(polygon) == TREFOIL * FIGURE_EIGHT
    assert knot_alexander(connected_sum(table["trefoil"].vertices, table["unknot"].vertices)) == TREFOIL


def test_alexander_needs_one_component():
    with pytest.raises(InvalidInputError):
        alexander_polynomial(project_generic([SQUARE, _hoop(0.0)]))


# ============= Linking Numbers =============

def test_hopf_link():
    assert abs(gauss_linking_sum(SQUARE, _hoop(0.0))) == pytest.approx(1.0, abs=1e-6)
    assert abs(linking_number_gauss([SQUARE, _hoop(0.0)], 0, 1)) == 1


def test_separated_loops_do_not_link():
    assert linking_number_gauss([SQUARE, _hoop(3.0)], 0, 1) == 0


def test_linking_needs_two_components():
    with pytest.raises(InvalidInputError):
        linking_number_gauss([SQUARE, _hoop(0.0)], 1, 1)


def test_gauss_code_lists_every_crossing_twice():
    diagram = project_generic([SQUARE, _hoop(0.0)], seed=5)
    tokens = diagram.gauss_code().replace("|", " ").split()
    assert len(tokens) == 2 * len(diagram.crossings)


def test_hopf_diagram_has_two_crossings_of_one_sign():
    diagram = project_generic([SQUARE, _hoop(0.0)], direction=(0.3, 0.2, 1.0))
    crossings = diagram.inter_component(0, 1)
    assert len(crossings) == len(diagram.crossings) == 2
    assert crossings[0].sign == crossings[1].sign


def test_fixed_direction_must_be_generic():
    with pytest.raises(ProjectionError):
        project_generic([SQUARE, _hoop(0.0)], direction=(0.0, 0.0, 1.0))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_trefoil_diagram_needs_three_crossings(table, seed):
    assert len(project_generic([table["trefoil"].vertices], seed=seed).crossings) >= 3


def test_reversing_a_component_negates_linking():
    forward = linking_number_gauss([SQUARE, _hoop(0.0)], 0, 1)
    assert linking_number_gauss([SQUARE[::-1], _hoop(0.0)], 0, 1) == -forward
    assert linking_number_gauss([_hoop(0.0), SQUARE], 0, 1) == forward


def test_linking_rejects_missing_component():
    with pytest.raises(InvalidInputError):
        linking_number_gauss([SQUARE, _hoop(0.0)], 0, 2)


# ============= Placement =============

def test_anchor_knot_lands_on_the_splice_edge(table):
    start, end = np.array([1.0, 1.0, 0.0]), np.array([1.0, -1.0, 0.0])
    arc = anchor_knot(table["trefoil"].vertices, start, end, (1.0, 0.0, 0.0)).arc
    np.testing.assert_allclose(arc[0], start, atol=1e-12)
    np.testing.assert_allclose(arc[-1], end, atol=1e-12)
    assert np.all(arc[1:-1, 0] > 1.0)


def test_unknown_table_knot(tmp_path):
    with pytest.raises(InvalidInputError):
        table_knot("cinquefoil")
    with pytest.raises(InvalidInputError):
        load_knot_table(tmp_path / "missing.json")


# ============= Nesting Comparison =============

def test_compare_nesting():
    two_leaves = NestingTree(parents={0: None, 1: 0, 2: 0})
    relabelled = NestingTree(parents={0: 1, 1: None, 2: 1})
    chain = NestingTree(parents={0: None, 1: 0, 2: 1})
    assert compare_nesting(two_leaves, relabelled)
    assert not compare_nesting(two_leaves, chain)
    assert compare_nesting(NestingTree(parents={}), NestingTree(parents={}))
