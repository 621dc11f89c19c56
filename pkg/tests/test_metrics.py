"""
Tests for exponent fits, distances to sheets and distortion certificates
"""
import logging

import pytest

from germlab.constructions import build_example1, example1_map
from germlab.exceptions import DegeneracyError, DisconnectedError, InvalidInputError, NotAMapError
from germlab.metrics import (
    DistortionReport,
    certify_bilipschitz,
    distance_to_sheet,
    dyadic_ladder,
    fit_exponent,
    inner_distance_exponent,
    interval_contains,
    tangency_order,
)
from germlab.models import (
    AffinePiece,
    GermModel,
    PLMap,
    circle_polygon,
    identity_map,
    make_cone_sheet,
    make_implicit_sheet,
    power_arc,
)


def _circle_model(name, center):
    cone = make_cone_sheet(circle_polygon(center, 0.25), name=name, closed=True)
    return GermModel(dimension=3, sheets=(cone,))


# ============= Exponent Fits =============

def test_fit_recovers_a_power_law():
    ladder = dyadic_ladder(2, 8)
    fit = fit_exponent(ladder, [3.0 * s ** 2.5 for s in ladder])
    assert fit.slope == pytest.approx(2.5, abs=1e-9)
    assert fit.r2 == pytest.approx(1.0)
    assert not fit.coincident
    assert max(abs(r) for r in fit.residuals) < 1e-9


def test_fit_needs_five_rungs():
    with pytest.raises(InvalidInputError):
        fit_exponent(dyadic_ladder(1, 4), [1.0, 0.5, 0.25, 0.125])


def test_coincident_arcs_are_signalled():
    ladder = dyadic_ladder(2, 8)
    fit = fit_exponent(ladder, [0.0] * len(ladder))
    assert fit.coincident
    assert fit.slope == float("inf")
    assert fit.residuals == []


def test_partial_coincidence_is_degenerate():
    ladder = dyadic_ladder(2, 8)
    with pytest.raises(DegeneracyError):
        fit_exponent(ladder, [1.0] * (len(ladder) - 1) + [0.0])


def test_tangency_of_power_arcs():
    upper = power_arc("up", ys=[(1.0, 3)], dimension=4)
    lower = power_arc("down", ys=[(-1.0, 3)], dimension=4)
    assert tangency_order(upper, lower).slope == pytest.approx(3.0, abs=1e-9)


def test_tangency_needs_matching_dimensions():
    with pytest.raises(InvalidInputError):
        tangency_order(power_arc("a", ys=[(1.0, 2)], dimension=3), power_arc("b", ys=[(1.0, 3)], dimension=4))


@pytest.mark.parametrize("k, expected", [(5, 1.25), (6, 1.5), (8, 2.0), ("9/2", 1.125)])
def test_example1_tangency_is_k_over_four(k, expected):
    x1, _ = build_example1(k)
    fit = tangency_order(x1.arc("gamma+"), x1.arc("gamma-"))
    assert fit.slope == pytest.approx(expected, abs=1e-3)


def test_family_tangency_is_three(family):
    model = family(0)
    fit = tangency_order(model.arc("gamma+"), model.arc("gamma-"), ladder=dyadic_ladder(4, 10))
    assert fit.slope == pytest.approx(3.0, abs=0.05)


# ============= Inner Distance =============

def test_inner_distance_across_a_bridge_is_linear(bridge):
    upper, lower = bridge.arc("gamma+"), bridge.arc("gamma-")
    inner = inner_distance_exponent(bridge, upper, lower)
    outer = tangency_order(upper, lower)
    assert inner.slope == pytest.approx(1.0, abs=0.1)
    assert inner.slope <= outer.slope + 0.1


def test_inner_distance_on_a_smooth_sheet():
    arcs = (power_arc("right", xs=[(1.0, 1)], ys=[(1.0, 2)]), power_arc("left", xs=[(-1.0, 1)], ys=[(1.0, 2)]))
    model = GermModel(dimension=3, sheets=(make_implicit_sheet("y - x**2", name="P"),), arcs=arcs)
    fit = inner_distance_exponent(model, model.arc("right"), model.arc("left"))
    assert fit.slope == pytest.approx(1.0, abs=0.1)


def test_inner_distance_needs_a_mesh():
    model = GermModel(dimension=4, arcs=(power_arc("a", ys=[(1.0, 2)], dimension=4),))
    with pytest.raises(DisconnectedError):
        inner_distance_exponent(model, model.arc("a"), model.arc("a"))


# ============= Distances =============

def test_distance_to_cone_sheet():
    sheet = _circle_model("C", (1.0, 0.5)).sheet("C")
    t = 0.125
    assert distance_to_sheet([1.25 * t, 0.5 * t, t], sheet, 64) < 1e-12
    off = distance_to_sheet([t, 0.5 * t, t], sheet, 64)
    assert 0 < off <= 0.25 * t


# ============= Distortion =============

def test_distortion_report_verdict():
    report = DistortionReport(
        per_scale=[(1.0, 1.0, 2.0), (0.0625, 1.0, 2.0), (0.03125, 1.0, 2.1)],
        global_min=1.0, global_max=2.1, samples=30, seed=0,
    )
    assert report.stability() == pytest.approx(0.05)
    assert report.ratio == pytest.approx(2.1)
    assert report.certified()
    assert not report.certified(limit=2.0)


def test_stability_judges_every_rung():
    report = DistortionReport(
        per_scale=[(1.0, 1.0, 3.0), (0.5, 1.0, 2.0), (0.0625, 1.0, 2.0), (0.03125, 1.0, 2.1)],
        global_min=1.0, global_max=3.0, samples=40, seed=0,
    )
    assert report.stability() == pytest.approx(0.5)
    assert report.stability(1.0) == report.stability()
    assert report.stability(0.0625) == pytest.approx(0.05)
    assert not report.certified()


def test_example1_map_stability_covers_the_coarse_scales(example1):
    x1, x2 = example1
    report = certify_bilipschitz(example1_map(), x1, x2, samples=400, scales=dyadic_ladder(0, 4), resolution=64)
    assert [row[0] for row in report.per_scale] == dyadic_ladder(0, 4)
    assert report.stability() == report.stability(1.0)
    assert report.stability() >= report.stability(0.25)
    assert report.global_min > 0


def test_interval_contains_has_no_slack():
    coarse = [0.25, 0.5, 0.75]
    assert interval_contains(coarse, [0.25, 0.6, 0.75])
    assert not interval_contains(coarse, [0.2499, 0.5])
    assert not interval_contains(coarse, [0.5, 0.7501])
    assert not interval_contains([0.0, 0.5], [0.25])


def test_identity_has_unit_distortion(caplog):
    model = _circle_model("C", (1.0, 0.5))
    with caplog.at_level(logging.WARNING, logger="germlab.metrics"):
        report = certify_bilipschitz(identity_map(model), model, model, samples=200, scales=dyadic_ladder(0, 4), resolution=64)
    assert report.global_min == pytest.approx(1.0)
    assert report.global_max == pytest.approx(1.0)
    assert report.certified()
    assert "200 distortion samples" in caplog.text


def test_translated_cone_is_certified():
    source, target = _circle_model("A", (1.0, 0.5)), _circle_model("B", (1.0, 0.0))
    plmap = PLMap(pieces=(AffinePiece(source="A", target="B", t_shift=(0.0, -0.5, 0.0)),))
    report = certify_bilipschitz(plmap, source, target, samples=200, scales=dyadic_ladder(0, 4), resolution=64)
    assert report.global_min == pytest.approx(1.0)


def test_map_off_target_is_rejected():
    source, target = _circle_model("A", (1.0, 0.5)), _circle_model("B", (1.0, 0.0))
    plmap = PLMap(pieces=(AffinePiece(source="A", target="B"),))
    with pytest.raises(NotAMapError) as caught:
        certify_bilipschitz(plmap, source, target, samples=200, scales=dyadic_ladder(0, 4), resolution=64)
    assert caught.value.sheet == "A"
