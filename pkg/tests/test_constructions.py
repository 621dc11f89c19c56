"""
Tests for the example builders, bridge surgery and the braid family
"""
from fractions import Fraction

import numpy as np
import pytest

from germlab.config import settings
from germlab.constructions import (
    BraidSpec,
    attach_connected_sum,
    break_bridge,
    build_example1,
    build_example3,
    build_example4,
    build_family_Yi,
    build_family_Zi,
    example1_map,
    example3_map,
    family_map,
    remove_holder_triangle,
    restore_bridge,
    surgery_linking_number,
)
from germlab.exceptions import DegeneracyError, InvalidInputError
from germlab.knots import LaurentPoly, knot_alexander
from germlab.models import ConicalPiece, validate
from germlab.sectioning import component_analysis, link_distance, section_at

TREFOIL = LaurentPoly.normalized([1, -1, 1])
FIGURE_EIGHT = LaurentPoly.normalized([1, -3, 1])


# ============= Example 1 =============

@pytest.mark.parametrize("k", [4, 3, "7/2"])
def test_example1_needs_k_above_four(k):
    with pytest.raises(InvalidInputError):
        build_example1(k)


def test_example1_sheets(example1):
    x1, x2 = example1
    assert x1.sheet_names == ["U1", "U2", "U3"]
    assert x2.sheet_names == ["U1", "V2", "V3"]
    assert x1.metadata == {"construction": "example1", "k": "5/1", "surface": "X1"}
    assert [arc.name for arc in x1.arcs] == ["gamma+", "gamma-"]


def test_example1_map_moves_centers():
    plmap = example1_map()
    t = 0.25
    u3_center = np.array([[t * 1.0, t * -0.5, 0.0]])
    np.testing.assert_allclose(plmap.piece_for("U3").apply(u3_center, np.array([t])), [[-t, 0.0, 0.0]])
    u2_center = np.array([[t * 1.0, t * 0.5, 0.0]])
    np.testing.assert_allclose(plmap.piece_for("U2").apply(u2_center, np.array([t])), [[t, 0.0, 0.0]])


# ============= Example 3 =============

@pytest.fixture(scope="module")
def example3():
    return build_example3()


def test_example3_sheets(example3):
    x1, x2 = example3
    assert x1.sheet_names == ["K1", "H", "K2"]
    assert x2.sheet_names == ["K3", "H", "K4"]
    assert x1.dimension == x2.dimension == 4


def test_example3_links_are_knots_with_equal_polynomials(example3, resolution):
    for model in example3:
        link = section_at(model, 0.125, resolution)
        assert (len(link.closed_components), len(link.open_components)) == (1, 0)
        assert knot_alexander(link.components[0].vertices) == TREFOIL * FIGURE_EIGHT


def test_example3_map_uses_conical_pieces(example3):
    plmap = example3_map(*example3)
    assert isinstance(plmap.piece_for("K1"), ConicalPiece)
    assert plmap.piece_for("K1").target == "K3"
    assert plmap.piece_for("H").target == "H"


# ============= Bridges =============

def test_bridge_defaults(bridge):
    spec = bridge.bridge()
    assert (spec.q, spec.beta, spec.p) == (Fraction(3), Fraction(2), Fraction(5, 2))
    assert bridge.sheet_names == ["T+", "T-"]


@pytest.mark.parametrize("p", [2, 3, "7/2"])
def test_break_bridge_checks_the_cut_exponent(bridge, p):
    with pytest.raises(InvalidInputError):
        break_bridge(bridge, p=p)


def test_break_and_restore(bridge, resolution):
    broken = break_bridge(bridge)
    assert broken.sheet_names == ["T+", "T-", "T+:right", "T-:right", "bridge:wall-", "bridge:wall+"]
    assert broken.bridge().broken
    with pytest.raises(InvalidInputError):
        break_bridge(broken)

    restored = restore_bridge(broken)
    assert not restored.bridge().broken
    assert restored.sheet_names == ["T+", "T-"]
    assert restored == bridge
    summary = component_analysis(section_at(restored, 0.25, resolution))
    assert (summary.closed, summary.open) == (0, 2)
    with pytest.raises(InvalidInputError):
        restore_bridge(restored)


def test_second_break_matches_the_first(bridge, resolution):
    once = break_bridge(bridge)
    twice = break_bridge(restore_bridge(once))
    assert validate(twice) == []
    assert twice.sheet_names == once.sheet_names
    gap = link_distance(section_at(once, 0.25, resolution), section_at(twice, 0.25, resolution))
    assert gap == pytest.approx(0.0, abs=1e-12)


def test_restore_implicit_bridge(family):
    model = family(1)
    assert restore_bridge(break_bridge(model, "A"), "A") == model


def test_surgery_needs_a_bridge(example1):
    with pytest.raises(InvalidInputError):
        surgery_linking_number(example1[0])


# ============= Braid Family =============

@pytest.mark.parametrize("twists", [-1, True, 1.5])
def test_braid_twists_must_be_counts(twists):
    with pytest.raises(InvalidInputError):
        BraidSpec(twists=twists)


def test_braid_strands_join_the_corner_points():
    braid = BraidSpec(twists=2)
    strand_a, strand_b = braid.strands()
    np.testing.assert_allclose(strand_a[[0, -1]], [braid.m_prime, braid.m])
    np.testing.assert_allclose(strand_b[[0, -1]], [braid.n_prime, braid.n])


def test_example4_pair():
    x0, x1 = build_example4()
    assert (x0.metadata["surface"], x1.metadata["surface"]) == ("X0", "X1")
    assert x0.sheet_names == x1.sheet_names == ["G", "braid-A", "braid-B"]
    assert all(isinstance(piece, ConicalPiece) for piece in family_map(x0, x1).pieces[1:])


@pytest.mark.parametrize("i", [0, 1, 2])
def test_surgery_linking_counts_twists(family, i):
    assert surgery_linking_number(family(i)) == i


@pytest.mark.parametrize("i", [0, 1])
def test_surgery_closes_the_horn_gap(i):
    assert surgery_linking_number(build_family_Zi(i)) == i


def test_surgery_rejects_long_gaps(monkeypatch):
    monkeypatch.setattr(settings, "CHORD_FRACTION", 1e-6)
    with pytest.raises(DegeneracyError):
        surgery_linking_number(build_family_Zi(1))


def test_family_members_are_unknots(family, resolution):
    for i in (0, 2):
        link = section_at(family(i), 0.125, resolution)
        assert knot_alexander(link.components[0].vertices) == LaurentPoly.one()


def test_knotted_member(resolution):
    model = build_family_Yi(1)
    assert model.metadata["knot"] == "trefoil"
    assert model.metadata["splice"].startswith("braid-B:")
    link = section_at(model, 0.125, resolution)
    assert len(link.closed_components) == 1
    assert knot_alexander(link.components[0].vertices) == TREFOIL


def test_splice_needs_a_cone(family):
    with pytest.raises(InvalidInputError):
        attach_connected_sum(family(0), "trefoil", sheet="G")


def test_segment_member_metadata():
    model = build_family_Zi(2, beta="3/2")
    assert model.metadata["removed"] == "braid-A:beta=3/2"
    assert model.sheet("braid-A").horn is not None


@pytest.mark.parametrize("kwargs", [{"beta": 1}, {"sheet": "G"}, {"width": 100.0}])
def test_remove_holder_triangle_rejects(family, kwargs):
    with pytest.raises(InvalidInputError):
        remove_holder_triangle(family(0), **kwargs)
