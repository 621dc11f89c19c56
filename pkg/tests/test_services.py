"""
Tests for the verification suites run end to end
"""
import pytest

from germlab.exceptions import InvalidInputError
from germlab.knots import LaurentPoly
from germlab.metrics import dyadic_ladder
from germlab.services import SuiteContext, VerificationService, check_main_theorem

TREFOIL = LaurentPoly.normalized([1, -1, 1])
FIGURE_EIGHT = LaurentPoly.normalized([1, -3, 1])


def _by_name(report):
    return {record.name: record for record in report.checks}


def test_unknown_suite():
    with pytest.raises(InvalidInputError):
        VerificationService.run("example2")


def test_example1_suite():
    report = VerificationService.run("example1", t=0.125, resolution=64, samples=220)
    checks = _by_name(report)
    assert list(checks)[:3] == ["example1 tangency order k=5", "example1 tangency order k=6", "example1 tangency order k=8"]
    for name in ("example1 tangency order k=5", "example1 X1 link components", "example1 X2 link components", "example1 link nesting"):
        assert checks[name].passed, checks[name].observed
    assert {"example1 map distortion", "example1 map stability", "example1 distance to U1"} <= set(checks)
    assert report.passed == all(record.passed for record in report.checks)
    assert report.parameters["samples"] == 220

    [distortion] = report.distortion
    assert distortion.label == "example1-map"
    assert len(distortion.per_scale) == len(dyadic_ladder(0, 10))
    assert distortion.global_min > 0


def test_example3_suite():
    checks = _by_name(VerificationService.run("example3", t=0.125, resolution=64))
    for name in ("example3 X1 link", "example3 X2 link", "example3 link knot type"):
        assert checks[name].passed, checks[name].observed
    assert checks["example3 link knot type"].expected == str(TREFOIL * FIGURE_EIGHT)


def test_example4_suite():
    report = VerificationService.run("example4", t=0.125)
    checks = _by_name(report)
    for name in ("example4 X0 link", "example4 broken bridge linking X0", "example4 broken bridge linking X1", "bridge rerouting"):
        assert checks[name].passed, checks[name].observed
    assert checks["example4 broken bridge linking X1"].observed == "1"
    assert report.distortion == []


def test_main_theorem_checks():
    ctx = SuiteContext(t=0.125, resolution=256, seed=0, samples=220)
    checks = {record.name: record for record in check_main_theorem(ctx, twists=(0, 1))}
    assert checks["family linking numbers"].passed
    assert checks["family linking numbers"].observed == "[0, 1]"
    assert checks["family X0 link"].passed
    assert {"family Y1 knot attachment", "family Z1 triangle removal", "family map X0 to X1"} <= set(checks)
    assert [label for label, _ in ctx.distortions] == ["family-X0-X1"]
