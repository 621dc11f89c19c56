"""
Invariant and Verification Services
Computes invariant reports for germ models and runs the end-to-end verification suites
"""
import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import settings
from .constructions import (
    break_bridge,
    build_bridge,
    build_example1,
    build_example3,
    build_family_Xi,
    build_family_Yi,
    build_family_Zi,
    example1_map,
    family_map,
    restore_bridge,
    surgery_linking_number,
)
from .exceptions import GermlabError, InvalidInputError
from .knots import (
    LaurentPoly,
    compare_nesting,
    connected_sum,
    knot_alexander,
    linking_number_gauss,
    load_knot_table,
    subdivide,
)
from .metrics import (
    DistortionReport,
    ExponentFit,
    certify_bilipschitz,
    distances_to_sheet,
    inner_distance_exponent,
    interval_contains,
    tangency_order,
)
from .models import GermModel, ambient_points, as_rational, point_at_arclength, polyline_ring
from .schemas import (
    CheckRecord,
    ExponentReport,
    InvariantReport,
    KnotRecord,
    LinkingRecord,
    LinkSummaryRecord,
    ScaleRecord,
    TangentConeRecord,
    VerificationReport,
)
from .sectioning import (
    PolyLink,
    component_analysis,
    gluing_tolerance,
    limit_link,
    link_distance,
    nesting_tree,
    section_at,
    tangent_cone_link,
)
from .storage import distortion_to_file, dumps

logger = logging.getLogger(__name__)

SURGERIES = ("break-bridge",)
EXPONENT_KINDS = ("tangency", "inner")


# ============= Report Helpers =============

def summary_record(link: PolyLink) -> LinkSummaryRecord:
    summary = component_analysis(link)
    return LinkSummaryRecord(
        closed=summary.closed,
        open=summary.open,
        pinched=summary.pinched,
        endpoints=summary.endpoints,
        total_length=round(summary.total_length, 12),
    )


def exponent_report(kind: str, fit: ExponentFit, inputs: Dict[str, str]) -> ExponentReport:
    finite = np.isfinite(fit.slope)
    return ExponentReport(
        kind=kind,
        inputs=inputs,
        ladder=list(fit.ladder),
        slope=float(fit.slope) if finite else None,
        intercept=float(fit.intercept) if finite else None,
        r2=float(fit.r2) if finite else None,
        coincident=fit.coincident,
        per_scale=[
            ScaleRecord(t=scale, value=value, residual=residual)
            for scale, value, residual in zip(fit.ladder, fit.values, fit.residuals or [None] * len(fit.ladder))
        ],
    )


def try_nesting(link: PolyLink) -> Optional[str]:
    """Nesting description, or None when the components are not closed coplanar curves"""
    try:
        return nesting_tree(link).describe()
    except InvalidInputError:
        return None


def component_alexanders(link: PolyLink, seed: int = 0) -> List[LaurentPoly]:
    return [knot_alexander(c.vertices, seed=seed) for c in link.closed_components]


# ============= Invariants =============

class InvariantService:
    @staticmethod
    def compute(
        model: GermModel,
        t: Optional[float] = None,
        resolution: Optional[int] = None,
        seed: int = 0,
        surgery: Optional[str] = None,
        exponents: Sequence[str] = ("tangency",),
        tangent_cone: bool = True,
    ) -> InvariantReport:
        """Link summary, nesting, tangent cone, exponents, knot types and linking numbers"""
        t = t if t is not None else settings.DEFAULT_SCALE
        resolution = resolution or settings.DEFAULT_RESOLUTION
        if surgery is not None and surgery not in SURGERIES:
            raise InvalidInputError(detail=f"unknown surgery {surgery!r}")
        unknown = [kind for kind in exponents if kind not in EXPONENT_KINDS]
        if unknown:
            raise InvalidInputError(detail=f"unknown exponent kind {unknown[0]!r}")

        report = InvariantReport(
            version=settings.APP_VERSION,
            parameters={
                "t": t,
                "resolution": resolution,
                "seed": seed,
                "surgery": surgery,
                "exponents": list(exponents),
                "metadata": dict(model.metadata),
            },
        )
        if not model.sheets:
            logger.info("empty model, nothing to compute")
            return report

        working = model
        if surgery == "break-bridge":
            for bridge in model.bridges:
                working = break_bridge(working, bridge.name)

        link = section_at(working, t, resolution)
        report.link = summary_record(link)
        report.nesting = try_nesting(link) if link.components and not link.open_components else None

        if tangent_cone:
            last, convergence = tangent_cone_link(working, resolution=resolution)
            limit = limit_link(working, resolution)
            report.tangent_cone = TangentConeRecord(
                converged=convergence.converged,
                converged_at=convergence.converged_at,
                distances=[float(d) for d in convergence.distances],
                limit_distance=float(convergence.limit_distance),
                last_iterate=summary_record(last),
                limit=summary_record(limit),
                limit_nesting=try_nesting(limit) if limit.components and not limit.open_components else None,
            )

        if len(model.arcs) >= 2:
            first, second = model.arcs[0], model.arcs[1]
            inputs = {"arc1": first.name, "arc2": second.name}
            for kind in exponents:
                if kind == "tangency":
                    fit = tangency_order(first, second)
                else:
                    fit = inner_distance_exponent(working, first, second)
                report.exponents.append(exponent_report(kind, fit, inputs))

        if model.dimension == 4:
            for index, component in enumerate(link.components):
                if component.closed:
                    poly = knot_alexander(component.vertices, seed=seed)
                    report.knots.append(KnotRecord(component=index, alexander=list(poly.coefficients), text=str(poly)))

        closed = [i for i, c in enumerate(link.components) if c.closed]
        for a, b in combinations(closed, 2):
            value = linking_number_gauss(link, a, b, seed=seed)
            report.linking.append(LinkingRecord(a=a, b=b, value=abs(value) if surgery else value))
        return report


# ============= Verification =============

@dataclass
class SuiteContext:
    """Parameters and memoized models shared by the checks of one run"""
    t: float
    resolution: int
    seed: int
    k: object = 5
    knot_table: Optional[str] = None
    samples: Optional[int] = None
    cache: Dict[Tuple, object] = field(default_factory=dict)
    distortions: List[Tuple[str, DistortionReport]] = field(default_factory=list)

    def memo(self, key: Tuple, build: Callable[[], object]):
        if key not in self.cache:
            self.cache[key] = build()
        return self.cache[key]

    def example1(self, k=None):
        k = self.k if k is None else k
        return self.memo(("example1", str(k)), lambda: build_example1(k))

    def example3(self, k1=None, k2=None):
        return self.memo(("example3", k1, k2), lambda: build_example3(k1, k2, knot_table=self.knot_table))

    def family(self, i: int) -> GermModel:
        return self.memo(("family", i), lambda: build_family_Xi(i))

    def section(self, model: GermModel, key: Tuple, t: Optional[float] = None) -> PolyLink:
        t = self.t if t is None else t
        return self.memo(("section", t) + key, lambda: section_at(model, t, self.resolution))


def check(name: str, anchor: str, expected: str, observed: str, passed: bool, tolerance: Optional[float] = None) -> CheckRecord:
    return CheckRecord(name=name, anchor=anchor, expected=expected, observed=observed, tolerance=tolerance, passed=bool(passed))


def _alexander_text(polys: Sequence[LaurentPoly]) -> str:
    return "{" + ", ".join(sorted(str(p) for p in polys)) + "}"


# ----- Example 1 -----

def check_example1_tangency(ctx: SuiteContext) -> List[CheckRecord]:
    records = []
    for k in dict.fromkeys([as_rational(ctx.k), as_rational(6), as_rational(8)]):
        x1, _ = ctx.example1(k)
        fit = tangency_order(x1.arc("gamma+"), x1.arc("gamma-"))
        expected = float(k) / 4
        records.append(check(
            f"example1 tangency order k={k}",
            "tangency order k/4 of the two arcs of U1 over x = 0",
            f"{expected:.4f}",
            f"{fit.slope:.4f}",
            abs(fit.slope - expected) <= 0.05,
            0.05,
        ))
    return records


def check_example1_links(ctx: SuiteContext) -> List[CheckRecord]:
    x1, x2 = ctx.example1()
    records = []
    trees = []
    for label, model in (("X1", x1), ("X2", x2)):
        link = ctx.section(model, ("example1", label, str(ctx.k)))
        summary = component_analysis(link)
        tree = nesting_tree(link)
        trees.append(tree)
        records.append(check(
            f"example1 {label} link components",
            "three disjoint circles in each link",
            "3 closed, 0 open",
            f"{summary.closed} closed, {summary.open} open",
            summary.closed == 3 and summary.open == 0,
        ))
    records.append(check(
        "example1 link nesting",
        "links of X1 and X2 are ambient equivalent",
        "isomorphic: root(2 leaves)",
        f"{trees[0].describe()} vs {trees[1].describe()}",
        compare_nesting(trees[0], trees[1]) and trees[0].describe() == "root(2 leaves)",
    ))
    limits = [limit_link(model, ctx.resolution) for model in (x1, x2)]
    cone_trees = [nesting_tree(link) for link in limits]
    records.append(check(
        "example1 tangent cone nesting",
        "tangent cones of X1 and X2 are not ambient topologically equivalent",
        "non-isomorphic",
        f"{cone_trees[0].describe()} vs {cone_trees[1].describe()}",
        not compare_nesting(cone_trees[0], cone_trees[1]),
    ))
    return records


def check_example1_map(ctx: SuiteContext) -> List[CheckRecord]:
    x1, x2 = ctx.example1()
    report = certify_bilipschitz(example1_map(), x1, x2, samples=ctx.samples, seed=ctx.seed, resolution=ctx.resolution)
    ctx.distortions.append(("example1-map", report))
    scales = [row[0] for row in report.per_scale]
    return [
        check(
            "example1 map distortion",
            "the piecewise linear map is outer bi-Lipschitz",
            f"max/min <= {settings.DISTORTION_LIMIT:g}",
            f"{report.ratio:.4g}",
            report.global_min > 0 and report.ratio <= settings.DISTORTION_LIMIT,
            settings.DISTORTION_LIMIT,
        ),
        check(
            "example1 map stability",
            "the piecewise linear map is outer bi-Lipschitz",
            f"< {settings.DISTORTION_STABILITY:g} over t in [{min(scales):g}, {max(scales):g}]",
            f"{report.stability():.4g}",
            report.stability() < settings.DISTORTION_STABILITY,
            settings.DISTORTION_STABILITY,
        ),
    ]


def _cone_samples(model: GermModel, names: Sequence[str], count: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    out = {}
    for name in names:
        sheet = model.sheet(name)
        ring, lengths = polyline_ring(sheet.vertices, sheet.closed)
        out[name] = point_at_arclength(ring, lengths, rng.random(count) * lengths[-1])
    return out


def check_example1_distances(ctx: SuiteContext) -> List[CheckRecord]:
    x1, x2 = ctx.example1()
    rng = np.random.default_rng(ctx.seed)
    per_circle = 250
    unit = {**_cone_samples(x1, ("U2", "U3"), per_circle, rng), **_cone_samples(x2, ("V2", "V3"), per_circle, rng)}
    u1 = x1.sheet("U1")
    ratios = {}
    for scale in (2.0 ** -4, 2.0 ** -12):
        points = np.vstack([ambient_points(scale * p, scale, 3) for p in unit.values()])
        ratios[scale] = distances_to_sheet(points, u1, ctx.resolution) / scale
    coarse, fine = ratios[2.0 ** -4], ratios[2.0 ** -12]
    return [check(
        "example1 distance to U1",
        "d(p, U1) is comparable to t on the small circles",
        f"[{coarse.min():.6f}, {coarse.max():.6f}] at t=2^-4 contains t=2^-12 values",
        f"[{fine.min():.6f}, {fine.max():.6f}]",
        interval_contains(coarse, fine),
    )]


# ----- Example 3 -----

def check_example3(ctx: SuiteContext) -> List[CheckRecord]:
    x1, x2 = ctx.example3()
    table = load_knot_table(ctx.knot_table)
    trefoil, figure_eight = table["trefoil"].alexander, table["figure-eight"].alexander
    records = []
    link_polys = []
    for label, model in (("X1", x1), ("X2", x2)):
        link = ctx.section(model, ("example3", label))
        summary = component_analysis(link)
        records.append(check(
            f"example3 {label} link",
            "links of X1 and X2 are single knots equivalent to K3",
            "1 closed",
            f"{summary.closed} closed, {summary.open} open",
            summary.closed == 1 and summary.open == 0,
        ))
        if summary.closed == 1:
            link_polys.append(knot_alexander(link.closed_components[0].vertices, seed=ctx.seed))
    product = trefoil * figure_eight
    records.append(check(
        "example3 link knot type",
        "links of X1 and X2 are single knots equivalent to K3",
        str(product),
        " / ".join(str(p) for p in link_polys),
        len(link_polys) == 2 and all(p == product for p in link_polys),
    ))

    expected = {"X1": [trefoil, figure_eight], "X2": [product, LaurentPoly.one()]}
    found = {}
    for label, model in (("X1", x1), ("X2", x2)):
        polys = component_alexanders(limit_link(model, ctx.resolution), ctx.seed)
        found[label] = polys
        records.append(check(
            f"example3 {label} tangent cone knots",
            "tangent cone links are pinched unions of the knots",
            _alexander_text(expected[label]),
            _alexander_text(polys),
            Counter(polys) == Counter(expected[label]),
        ))
    records.append(check(
        "example3 tangent cones differ",
        "tangent cones are not ambient topologically equivalent",
        "unequal multisets",
        f"{_alexander_text(found['X1'])} vs {_alexander_text(found['X2'])}",
        Counter(found["X1"]) != Counter(found["X2"]),
    ))
    return records


# ----- Example 4 -----

def check_example4(ctx: SuiteContext) -> List[CheckRecord]:
    x0, x1 = ctx.family(0), ctx.family(1)
    records = []
    link = ctx.section(x0, ("family", 0))
    polys = component_alexanders(link, ctx.seed)
    records.append(check(
        "example4 X0 link",
        "the link of X0 is the trivial knot K0",
        "1 closed, Alexander 1",
        f"{len(link.closed_components)} closed, {_alexander_text(polys)}",
        len(link.components) == 1 and polys == [LaurentPoly.one()],
    ))
    fit = tangency_order(x0.arc("gamma+"), x0.arc("gamma-"))
    records.append(check(
        "example4 tangency order",
        "two arcs of G over x = c t^2 have tangency order 3",
        "3.0000",
        f"{fit.slope:.4f}",
        abs(fit.slope - 3.0) <= 0.05,
        0.05,
    ))
    inner = inner_distance_exponent(x0, x0.arc("gamma+"), x0.arc("gamma-"))
    records.append(check(
        "example4 inner distance exponent",
        "the bridge faces are far apart in the inner metric",
        "1.0000",
        f"{inner.slope:.4f}",
        abs(inner.slope - 1.0) <= 0.1,
        0.1,
    ))
    for i, model in ((0, x0), (1, x1)):
        value = surgery_linking_number(model, ctx.t, ctx.resolution, ctx.seed)
        records.append(check(
            f"example4 broken bridge linking X{i}",
            "the broken bridge link consists of two circles with linking number i",
            str(i),
            str(value),
            value == i,
        ))

    bridge = build_bridge(3, 2)
    broken = break_bridge(bridge, "bridge", p="5/2")
    summary = component_analysis(section_at(broken, 0.25, ctx.resolution))
    records.append(check(
        "bridge rerouting",
        "a broken (q, beta)-bridge reroutes both faces through the walls",
        "2 open",
        f"{summary.open} open, {summary.closed} closed",
        summary.open == 2 and summary.closed == 0,
    ))
    return records


# ----- Main theorem -----

def check_main_theorem(ctx: SuiteContext, twists: Sequence[int] = (0, 1, 2, 3, 4)) -> List[CheckRecord]:
    records = []
    table = load_knot_table(ctx.knot_table)
    trefoil = table["trefoil"].alexander
    limit_summaries = {}
    observed_lk = []
    for i in twists:
        xi = ctx.family(i)
        link = ctx.section(xi, ("family", i))
        polys = component_alexanders(link, ctx.seed)
        records.append(check(
            f"family X{i} link",
            "the link of every X_i is the trivial knot",
            "1 closed, Alexander 1",
            f"{len(link.closed_components)} closed, {_alexander_text(polys)}",
            len(link.components) == 1 and polys == [LaurentPoly.one()],
        ))
        observed_lk.append(surgery_linking_number(xi, ctx.t, ctx.resolution, ctx.seed))

        yi = build_family_Yi(i, "trefoil", knot_table=ctx.knot_table)
        y_link = section_at(yi, ctx.t, ctx.resolution)
        y_polys = component_alexanders(y_link, ctx.seed)
        y_lk = surgery_linking_number(yi, ctx.t, ctx.resolution, ctx.seed)
        records.append(check(
            f"family Y{i} knot attachment",
            "Y_i has link equivalent to L' and linking number i after surgery",
            f"{trefoil}, lk={i}",
            f"{_alexander_text(y_polys)}, lk={y_lk}",
            len(y_link.components) == 1 and y_polys == [trefoil] and y_lk == i,
        ))

        zi = build_family_Zi(i)
        z_summary = component_analysis(section_at(zi, ctx.t, ctx.resolution))
        z_lk = surgery_linking_number(zi, ctx.t, ctx.resolution, ctx.seed)
        x_limit, z_limit = limit_link(xi, ctx.resolution), limit_link(zi, ctx.resolution)
        cone_gap = link_distance(x_limit, z_limit)
        records.append(check(
            f"family Z{i} triangle removal",
            "Z_i has a segment link, the tangent cone of X_i and linking number i",
            f"1 open, cone gap 0, lk={i}",
            f"{z_summary.open} open, cone gap {cone_gap:.3g}, lk={z_lk}",
            z_summary.open == 1 and z_summary.closed == 0 and cone_gap <= gluing_tolerance(1.0, ctx.resolution) and z_lk == i,
        ))
        summary = component_analysis(x_limit)
        limit_summaries[i] = (summary.closed, summary.open, summary.pinched)

    records.append(check(
        "family linking numbers",
        "the broken bridge links have linking number i for the i-twisted braid",
        str(list(twists)),
        str(observed_lk),
        observed_lk == list(twists),
    ))
    records.append(check(
        "family tangent cone structure",
        "the tangent cones of all X_i are the same",
        "identical component structure",
        "; ".join(f"X{i}: {s}" for i, s in limit_summaries.items()),
        len(set(limit_summaries.values())) == 1,
    ))

    source = ctx.family(twists[0])
    for j in twists[1:]:
        report = certify_bilipschitz(family_map(source, ctx.family(j)), source, ctx.family(j), samples=ctx.samples, seed=ctx.seed, resolution=ctx.resolution)
        ctx.distortions.append((f"family-X{twists[0]}-X{j}", report))
        records.append(check(
            f"family map X{twists[0]} to X{j}",
            "X_i and X_j are outer bi-Lipschitz equivalent by the conical extension",
            f"max/min <= {settings.DISTORTION_LIMIT:g}, stability < {settings.DISTORTION_STABILITY:g}",
            f"max/min {report.ratio:.4g}, stability {report.stability():.4g}",
            report.certified(),
            settings.DISTORTION_LIMIT,
        ))
    return records


# ----- Properties -----

def check_properties(ctx: SuiteContext) -> List[CheckRecord]:
    records = []
    table = load_knot_table(ctx.knot_table)

    for name, entry in sorted(table.items()):
        computed = knot_alexander(entry.vertices, seed=ctx.seed)
        records.append(check(
            f"knot table {name}",
            "Alexander polynomials of the built-in knots",
            str(entry.alexander),
            str(computed),
            computed == entry.alexander,
        ))

    trefoil = table["trefoil"].vertices
    seen = {knot_alexander(trefoil, seed=ctx.seed + s) for s in range(5)}
    records.append(check(
        "projection invariance",
        "knot invariants do not depend on the projection direction",
        "one polynomial over 5 directions",
        _alexander_text(seen),
        len(seen) == 1,
    ))
    refined = knot_alexander(subdivide(trefoil), seed=ctx.seed)
    records.append(check(
        "refinement invariance",
        "knot invariants do not depend on the polygon subdivision",
        str(table["trefoil"].alexander),
        str(refined),
        refined == table["trefoil"].alexander,
    ))

    for first, second in (("trefoil", "figure-eight"), ("trefoil", "trefoil"), ("unknot", "figure-eight")):
        expected = table[first].alexander * table[second].alexander
        summed = knot_alexander(connected_sum(table[first].vertices, table[second].vertices), seed=ctx.seed)
        records.append(check(
            f"connected sum {first} # {second}",
            "the Alexander polynomial is multiplicative under connected sum",
            str(expected),
            str(summed),
            summed == expected,
        ))

    broken = break_bridge(ctx.family(2), "A")
    link = section_at(broken, ctx.t, ctx.resolution)
    value = linking_number_gauss(link, 0, 1, seed=ctx.seed) if len(link.closed_components) == 2 else None
    records.append(check(
        "Gauss and diagram linking agree",
        "linking number of the two circles of the broken bridge link",
        "2",
        str(None if value is None else abs(value)),
        value is not None and abs(value) == 2,
    ))

    x1, _ = ctx.example1()
    cone = GermModel(dimension=3, sheets=(x1.sheet("U2"),))
    scaled = section_at(cone, ctx.t, ctx.resolution).scaled(1.0 / ctx.t)
    gap = link_distance(scaled, section_at(cone, 1.0, ctx.resolution))
    records.append(check(
        "cone scaling exactness",
        "sections of a straight cone are similar",
        "0",
        f"{gap:.3g}",
        gap <= 1e-12,
        1e-12,
    ))

    for label, model, bridge, t in (("bridge", build_bridge(3, 2), "bridge", 0.25), ("X0", ctx.family(0), "A", ctx.t)):
        original = section_at(model, t, ctx.resolution)
        restored = section_at(restore_bridge(break_bridge(model, bridge), bridge), t, ctx.resolution)
        gap = link_distance(original, restored)
        tolerance = gluing_tolerance(t, ctx.resolution)
        same = (len(original.closed_components), len(original.open_components)) == (
            len(restored.closed_components), len(restored.open_components)
        )
        records.append(check(
            f"surgery invertibility {label}",
            "restoring a broken bridge gives back the original sections",
            f"same components, gap <= {tolerance:.3g}",
            f"gap {gap:.3g}",
            same and gap <= tolerance,
            tolerance,
        ))

    model = ctx.family(1)
    first = dumps(InvariantService.compute(model, ctx.t, ctx.resolution, ctx.seed, tangent_cone=False))
    second = dumps(InvariantService.compute(model, ctx.t, ctx.resolution, ctx.seed, tangent_cone=False))
    records.append(check(
        "report determinism",
        "identical inputs and seed give identical reports",
        "identical",
        "identical" if first == second else "different",
        first == second,
    ))
    return records


SUITES: Dict[str, List[Callable[[SuiteContext], List[CheckRecord]]]] = {
    "example1": [check_example1_tangency, check_example1_links, check_example1_map, check_example1_distances],
    "example3": [check_example3],
    "example4": [check_example4],
    "main-theorem": [check_main_theorem],
    "properties": [check_properties],
}
SUITES["all"] = [step for name in ("example1", "example3", "example4", "main-theorem", "properties") for step in SUITES[name]]


class VerificationService:
    @staticmethod
    def run(
        suite: str,
        t: Optional[float] = None,
        resolution: Optional[int] = None,
        seed: int = 0,
        k=5,
        knot_table: Optional[str] = None,
        samples: Optional[int] = None,
        timings: bool = False,
    ) -> VerificationReport:
        """Run every check of a suite in declaration order; a raising check is recorded as failed"""
        if suite not in SUITES:
            raise InvalidInputError(detail=f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
        ctx = SuiteContext(
            t=t if t is not None else settings.DEFAULT_SCALE,
            resolution=resolution or settings.DEFAULT_RESOLUTION,
            seed=seed,
            k=k,
            knot_table=knot_table,
            samples=samples,
        )
        started = time.perf_counter()
        records: List[CheckRecord] = []
        for step in SUITES[suite]:
            name = step.__name__.replace("check_", "").replace("_", " ")
            try:
                records.extend(step(ctx))
            except GermlabError as exc:
                logger.error(f"check {name} failed: {exc.detail}")
                records.append(check(name, "check completed without error", "completed", f"error: {exc.detail}", False))
        report = VerificationReport(
            suite=suite,
            version=settings.APP_VERSION,
            parameters={
                "t": ctx.t,
                "resolution": ctx.resolution,
                "k": str(k),
                "knot_table": str(knot_table) if knot_table else None,
                "samples": samples or settings.DISTORTION_SAMPLES,
            },
            seed=seed,
            checks=records,
            distortion=[distortion_to_file(report, label) for label, report in ctx.distortions],
            runtime_seconds=round(time.perf_counter() - started, 3) if timings else None,
        )
        logger.info(f"suite {suite}: {sum(c.passed for c in records)}/{len(records)} checks passed")
        return report
