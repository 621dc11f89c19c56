"""
Germ Constructions
Builders for every example surface and family, plus the bridge and knot surgeries
"""
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

import numpy as np
import sympy as sp
from scipy.spatial import cKDTree

from .config import settings
from .exceptions import ConstructionError, DegeneracyError, InvalidInputError
from .knots import anchor_knot, connected_sum, linking_number_gauss, table_knot
from .models import (
    AffinePiece,
    BridgeSpec,
    ConeSheet,
    ConicalPiece,
    GermModel,
    HolderTriangle,
    HornCut,
    ImplicitArc,
    ImplicitPlanarSheet,
    PLMap,
    as_rational,
    circle_polygon,
    compile_polynomial,
    format_rational,
    make_cone_sheet,
    make_holder_triangle,
    make_implicit_sheet,
    make_template_sheet,
    parse_polynomial,
    polyline_ring,
    power_arc,
    t,
    x,
)
from .sectioning import section_at

logger = logging.getLogger(__name__)

H_POLYNOMIAL = "y**2 - x**2 - (x**2 + y**2 - 2*t**2)**2"
G_POLYNOMIAL = "y**2*t**2 - x**4 - (x**2 + y**2 - 2*t**2)**4"

# |y| <= t <= 1
STRIP_CONSTRAINTS = ("t - y", "t + y", "t", "1 - t")

Polygon = Union[str, np.ndarray]


def _knot(polygon: Optional[Polygon], default: str, knot_table=None) -> np.ndarray:
    if polygon is None:
        polygon = default
    if isinstance(polygon, str):
        return table_knot(polygon, knot_table)
    return np.asarray(polygon, float)


def _knot_label(polygon: Optional[Polygon], default: str) -> str:
    if polygon is None:
        return default
    return polygon if isinstance(polygon, str) else "custom"


# ============= Example 1: Nested Circles =============

def build_example1(k=5) -> Tuple[GermModel, GermModel]:
    """X1 = U1 + U2 + U3 and X2 = U1 + V2 + V3 in R^3"""
    k = as_rational(k)
    if k <= 4:
        raise InvalidInputError(detail=f"Example 1 needs k > 4, got k={k}")

    polynomial = parse_polynomial(
        f"((x - t)**2 + y**2 - t**2)*((x + t)**2 + y**2 - t**2) - t**({format_rational(k)})"
    )
    u1 = make_implicit_sheet(polynomial, name="U1", dimension=3)
    arcs = tuple(
        ImplicitArc(name=name, polynomial=polynomial, coefficient=0.0, exponent=Fraction(1), branch=branch, dimension=3)
        for name, branch in (("gamma+", 1), ("gamma-", -1))
    )

    def circle(name, center):
        return make_cone_sheet(circle_polygon(center, 0.25), name=name, closed=True, dimension=3)

    metadata = {"construction": "example1", "k": format_rational(k)}
    x1 = GermModel(
        dimension=3,
        sheets=(u1, circle("U2", (1.0, 0.5)), circle("U3", (1.0, -0.5))),
        arcs=arcs,
        metadata={**metadata, "surface": "X1"},
    )
    x2 = GermModel(
        dimension=3,
        sheets=(u1, circle("V2", (1.0, 0.0)), circle("V3", (-1.0, 0.0))),
        arcs=arcs,
        metadata={**metadata, "surface": "X2"},
    )
    logger.info(f"built Example 1 with k={k}")
    return x1, x2


def example1_map() -> PLMap:
    """Identity on U1, translations of the small circles onto V2 and V3"""
    return PLMap(pieces=(
        AffinePiece(source="U1", target="U1"),
        AffinePiece(source="U2", target="V2", t_shift=(0.0, -0.5, 0.0)),
        AffinePiece(source="U3", target="V3", t_shift=(-2.0, 0.5, 0.0)),
    ))


def conical_map(source: GermModel, target: GermModel, correspondence: Optional[Dict[str, str]] = None) -> PLMap:
    """Identity on non-conical sheets, arclength correspondence coned over t on cones"""
    correspondence = correspondence or {}
    pieces = []
    for sheet in source.sheets:
        name = correspondence.get(sheet.name, sheet.name)
        image = target.sheet(name)
        if isinstance(sheet, ConeSheet):
            if not isinstance(image, ConeSheet) or image.closed != sheet.closed:
                raise InvalidInputError(detail=f"cone {sheet.name} has no matching cone {name}")
            pieces.append(ConicalPiece(
                source=sheet.name,
                target=name,
                source_curve=sheet.curve,
                target_curve=image.curve,
                closed=sheet.closed,
            ))
        else:
            pieces.append(AffinePiece(source=sheet.name, target=name))
    return PLMap(pieces=tuple(pieces))


# ============= Example 3: Knotted Cones on H =============

def _check_half_space(arc: np.ndarray, side: float, label: str) -> None:
    interior = arc[1:-1]
    if np.any(side * interior[:, 0] <= 1.0 + 1e-9):
        raise InvalidInputError(detail=f"{label} meets the section of H away from its attachment points")


def build_example3(k1: Optional[Polygon] = None, k2: Optional[Polygon] = None, knot_table=None) -> Tuple[GermModel, GermModel]:
    """X1 = K1' + H + K2' and X2 = K3' + H + K4' with K3 = K1 # K2 and K4 the unknot"""
    knot1 = _knot(k1, "trefoil", knot_table)
    knot2 = _knot(k2, "figure-eight", knot_table)
    unknot = table_knot("unknot", knot_table)
    knot3 = connected_sum(knot1, knot2)

    h = make_implicit_sheet(H_POLYNOMIAL, STRIP_CONSTRAINTS, name="H", dimension=4)
    arcs = tuple(
        ImplicitArc(name=name, polynomial=h.polynomial, coefficient=0.0, exponent=Fraction(1), branch=branch, dimension=4)
        for name, branch in (("gamma+", 1), ("gamma-", -1))
    )

    def right(polygon, name):
        arc = anchor_knot(polygon, (1.0, 1.0, 0.0), (1.0, -1.0, 0.0), (1.0, 0.0, 0.0)).arc
        _check_half_space(arc, 1.0, name)
        return make_cone_sheet(arc, name=name, closed=False, dimension=4)

    def left(polygon, name):
        arc = anchor_knot(polygon, (-1.0, 1.0, 0.0), (-1.0, -1.0, 0.0), (-1.0, 0.0, 0.0)).arc
        _check_half_space(arc, -1.0, name)
        return make_cone_sheet(arc, name=name, closed=False, dimension=4)

    metadata = {"construction": "example3", "knot1": _knot_label(k1, "trefoil"), "knot2": _knot_label(k2, "figure-eight")}
    x1 = GermModel(dimension=4, sheets=(right(knot1, "K1"), h, left(knot2, "K2")), arcs=arcs, metadata={**metadata, "surface": "X1"})
    x2 = GermModel(dimension=4, sheets=(right(knot3, "K3"), h, left(unknot, "K4")), arcs=arcs, metadata={**metadata, "surface": "X2"})
    logger.info("built Example 3")
    return x1, x2


def example3_map(x1: GermModel, x2: GermModel) -> PLMap:
    return conical_map(x1, x2, {"K1": "K3", "K2": "K4"})


# ============= Bridges =============

def build_bridge(q=3, beta=2, p=None) -> GermModel:
    """The (q, beta)-bridge T+ + T- in R^4 with its cut exponent p (midpoint by default)"""
    q, beta = as_rational(q), as_rational(beta)
    p = as_rational(p) if p is not None else (q + beta) / 2
    plus = make_holder_triangle(beta, q, 1, name="T+")
    minus = make_holder_triangle(beta, q, -1, name="T-")
    arcs = (
        power_arc("gamma+", ys=[(1.0, q)], dimension=4),
        power_arc("gamma-", ys=[(-1.0, q)], dimension=4),
    )
    bridge = BridgeSpec(
        name="bridge", q=q, beta=beta, p=p, plus_sheet="T+", minus_sheet="T-", boundary_arcs=("gamma+", "gamma-"),
    )
    return GermModel(
        dimension=4,
        sheets=(plus, minus),
        arcs=arcs,
        bridges=(bridge,),
        metadata={"construction": "bridge", "q": format_rational(q), "beta": format_rational(beta)},
    )


def _replace_sheets(model: GermModel, updated: Dict[str, object], added=(), dropped=()) -> Tuple:
    sheets = [updated.get(sheet.name, sheet) for sheet in model.sheets if sheet.name not in dropped]
    return tuple(sheets) + tuple(added)


def _replace_bridge(model: GermModel, bridge: BridgeSpec) -> Tuple[BridgeSpec, ...]:
    return tuple(bridge if b.name == bridge.name else b for b in model.bridges)


def _resolve_bridge(model: GermModel, bridge) -> BridgeSpec:
    if isinstance(bridge, BridgeSpec):
        return model.bridge(bridge.name)
    return model.bridge(bridge)


def _cut_polynomial(p: Fraction) -> sp.Expr:
    """x^(2b) - t^(2a) for p = a/b; nonnegative exactly where |x| >= t^p"""
    return x ** (2 * p.denominator) - t ** (2 * p.numerator)


def _axis_sign(sheet: ImplicitPlanarSheet) -> int:
    value = float(compile_polynomial(sheet.polynomial)(0.0, 0.0, 0.5))
    if value == 0:
        raise InvalidInputError(detail=f"sheet {sheet.name} passes through the bridge axis")
    return 1 if value > 0 else -1


def _split_template(sheet: HolderTriangle, p: Fraction) -> Tuple[HolderTriangle, HolderTriangle]:
    """Left and right parts {t^p <= |x| <= t^beta} of a bridge face"""
    beta = sheet.beta
    _, ys, zs = sheet.template

    def side(name, sign):
        # u = -1 and u = 1 land on x = sign t^beta and x = sign t^p in either order
        xs = [(sign * 0.5, 0, beta), (sign * 0.5, 0, p), (0.5, 1, beta), (-0.5, 1, p)]
        return make_template_sheet(name, xs=xs, ys=ys, zs=zs, beta=beta, q=sheet.q, sign=sheet.sign, dimension=sheet.dimension)

    return side(sheet.name, -1), side(f"{sheet.name}:right", 1)


def _joined_template(left: HolderTriangle) -> HolderTriangle:
    """The uncut face {|x| <= t^beta} that a left piece was split from"""
    _, ys, zs = left.template
    return make_template_sheet(
        left.name, xs=[(1.0, 1, left.beta)], ys=ys, zs=zs, beta=left.beta, q=left.q, sign=left.sign,
        dimension=left.dimension,
    )


def _wall(name: str, side: int, p: Fraction, q: Fraction, dimension: int) -> HolderTriangle:
    """{x = side t^p, |y| <= t^q}"""
    return make_template_sheet(name, xs=[(side, 0, p)], ys=[(1.0, 1, q)], beta=q, q=q, sign=0, dimension=dimension)


def break_bridge(model: GermModel, bridge=None, p=None) -> GermModel:
    """Cut both bridge faces at |x| = t^p and reroute them through walls at x = +-t^p"""
    spec = _resolve_bridge(model, bridge)
    if spec.broken:
        raise InvalidInputError(detail=f"bridge {spec.name} is already broken")
    p = as_rational(p) if p is not None else spec.p
    if not spec.beta < p < spec.q:
        raise InvalidInputError(detail=f"cut exponent p={p} must lie strictly between beta={spec.beta} and q={spec.q}")

    faces = [model.sheet(name) for name in dict.fromkeys((spec.plus_sheet, spec.minus_sheet))]
    if all(isinstance(face, ImplicitPlanarSheet) for face in faces):
        cut = _cut_polynomial(p)
        updated = {face.name: replace(face, constraints=face.constraints + (cut,)) for face in faces}
        base = faces[0]
        sides = tuple(_axis_sign(face) * face.polynomial for face in faces)
        walls = (make_implicit_sheet(cut, list(base.constraints) + list(sides), name=f"{spec.name}:walls", dimension=model.dimension),)
        added = ()
    elif all(isinstance(face, HolderTriangle) for face in faces):
        updated, added = {}, []
        for face in faces:
            left, right = _split_template(face, p)
            updated[face.name] = left
            added.append(right)
        walls = (_wall(f"{spec.name}:wall-", -1, p, spec.q, model.dimension), _wall(f"{spec.name}:wall+", 1, p, spec.q, model.dimension))
        added = tuple(added)
    else:
        raise InvalidInputError(detail=f"bridge {spec.name} mixes implicit and parametrized faces")

    broken = replace(spec, p=p, broken=True, wall_sheets=tuple(wall.name for wall in walls))
    logger.info(f"broke bridge {spec.name} at p={p}")
    return model.with_parts(
        sheets=_replace_sheets(model, updated, tuple(added) + walls),
        bridges=_replace_bridge(model, broken),
    )


def restore_bridge(model: GermModel, bridge=None) -> GermModel:
    """Rejoin the cut bridge faces over their removed cores and drop the walls"""
    spec = _resolve_bridge(model, bridge)
    if not spec.broken:
        raise InvalidInputError(detail=f"bridge {spec.name} is not broken")

    faces = [model.sheet(name) for name in dict.fromkeys((spec.plus_sheet, spec.minus_sheet))]
    dropped = set(spec.wall_sheets)
    if all(isinstance(face, ImplicitPlanarSheet) for face in faces):
        cut = _cut_polynomial(spec.p)
        updated = {
            face.name: replace(face, constraints=tuple(g for g in face.constraints if sp.expand(g - cut) != 0))
            for face in faces
        }
    else:
        updated = {face.name: _joined_template(face) for face in faces}
        dropped.update(f"{face.name}:right" for face in faces)

    restored = replace(spec, broken=False, wall_sheets=())
    logger.info(f"restored bridge {spec.name}")
    return model.with_parts(
        sheets=_replace_sheets(model, updated, dropped=dropped),
        bridges=_replace_bridge(model, restored),
    )


# ============= Example 4 and the Braid Family =============

@dataclass(frozen=True)
class BraidSpec:
    """Two strands with i full twists joining the bottom pair (M, N) to the top pair (M', N')"""
    twists: int
    m: Tuple[float, float, float] = (-1.0, -1.0, 0.0)
    n: Tuple[float, float, float] = (1.0, -1.0, 0.0)
    m_prime: Tuple[float, float, float] = (-1.0, 1.0, 0.0)
    n_prime: Tuple[float, float, float] = (1.0, 1.0, 0.0)
    radius: float = 0.25
    height: float = 2.0
    lift: float = 1.0
    segments_per_twist: int = 32

    def __post_init__(self):
        if isinstance(self.twists, bool) or not isinstance(self.twists, (int, np.integer)) or self.twists < 0:
            raise InvalidInputError(detail=f"twist count must be a non-negative integer, got {self.twists!r}")

    def strands(self) -> Tuple[np.ndarray, np.ndarray]:
        """Strand A from M' to M and strand B from N' to N, helices around the axis z = height"""
        count = max(self.segments_per_twist * self.twists, 8)
        s = np.linspace(0.0, 1.0, count + 1)
        theta = 2.0 * np.pi * self.twists * s
        ys = self.m_prime[1] + (self.m[1] - self.m_prime[1]) * s
        r = self.radius
        helix_a = np.column_stack([-r * np.cos(theta), ys, self.height - r * np.sin(theta)])
        helix_b = np.column_stack([r * np.cos(theta), ys, self.height + r * np.sin(theta)])
        up = np.array([0.0, 0.0, self.lift])

        def strand(top, bottom, helix):
            top, bottom = np.asarray(top, float), np.asarray(bottom, float)
            return np.vstack([top, top + up, helix, bottom + up, bottom])

        return strand(self.m_prime, self.m, helix_a), strand(self.n_prime, self.n, helix_b)


def _densify(polygon: np.ndarray, per_edge: int = 16) -> np.ndarray:
    w = np.linspace(0.0, 1.0, per_edge, endpoint=False)
    starts, ends = polygon[:-1], polygon[1:]
    return np.vstack([(starts[:, None] + w[None, :, None] * (ends - starts)[:, None]).reshape(-1, 3), polygon[-1:]])


def _check_strands(strand_a: np.ndarray, strand_b: np.ndarray, clearance: float) -> None:
    gap = float(cKDTree(_densify(strand_b)).query(_densify(strand_a))[0].min())
    if gap < clearance:
        raise ConstructionError(detail=f"braid strands come within {gap:.3g} of each other")


def build_family_Xi(i: int) -> GermModel:
    """G plus the cone over a two-strand braid with i full twists"""
    braid = BraidSpec(twists=i)
    strand_a, strand_b = braid.strands()
    _check_strands(strand_a, strand_b, 0.5 * braid.radius)

    g = make_implicit_sheet(G_POLYNOMIAL, STRIP_CONSTRAINTS, name="G", dimension=4)
    arcs = tuple(
        ImplicitArc(name=name, polynomial=g.polynomial, coefficient=1.0, exponent=Fraction(2), branch=branch, dimension=4)
        for name, branch in (("gamma+", 1), ("gamma-", -1))
    )
    bridge = BridgeSpec(
        name="A", q=Fraction(3), beta=Fraction(2), p=Fraction(5, 2), plus_sheet="G", minus_sheet="G",
        boundary_arcs=("gamma+", "gamma-"),
    )
    logger.info(f"built family member X_{i}")
    return GermModel(
        dimension=4,
        sheets=(
            g,
            make_cone_sheet(strand_a, name="braid-A", closed=False, dimension=4),
            make_cone_sheet(strand_b, name="braid-B", closed=False, dimension=4),
        ),
        arcs=arcs,
        bridges=(bridge,),
        metadata={"construction": "family", "twists": str(i)},
    )


def build_example4() -> Tuple[GermModel, GermModel]:
    """X0 and X1: the unbraided and once-twisted members of the family"""
    x0, x1 = build_family_Xi(0), build_family_Xi(1)
    return (
        x0.with_parts(metadata={**x0.metadata, "construction": "example4", "surface": "X0"}),
        x1.with_parts(metadata={**x1.metadata, "construction": "example4", "surface": "X1"}),
    )


def family_map(source: GermModel, target: GermModel) -> PLMap:
    """Identity on G, conical extension of the strand correspondence on the braid cones"""
    return conical_map(source, target)


def attach_connected_sum(
    base: GermModel,
    lprime: Optional[Polygon] = None,
    sheet: str = "braid-B",
    knot_table=None,
    retries: Optional[int] = None,
) -> GermModel:
    """Splice a knot into the first (vertical) edge of a braid strand; the knot body lies in x > 1"""
    retries = retries or settings.SPLICE_RETRIES
    knot = _knot(lprime, "trefoil", knot_table)
    cone = base.sheet(sheet)
    if not isinstance(cone, ConeSheet):
        raise InvalidInputError(detail=f"sheet {sheet} is not a cone")
    curve = cone.vertices
    start, end = curve[0], curve[1]
    if start[0] <= 0 or not np.allclose(end - start, (0.0, 0.0, end[2] - start[2])):
        raise InvalidInputError(detail=f"sheet {sheet} has no vertical splice edge at x > 0")

    for attempt in range(retries):
        try:
            arc = anchor_knot(knot, start, end, (1.0, 0.0, 0.0), skip=attempt).arc
        except ConstructionError:
            break
        if np.all(arc[1:-1, 0] > start[0] + 1e-9):
            spliced = make_cone_sheet(np.vstack([arc, curve[2:]]), name=sheet, closed=False, dimension=cone.dimension)
            edge = f"({start[0]:g},{start[1]:g},{start[2]:g})-({end[0]:g},{end[1]:g},{end[2]:g})"
            metadata = {**base.metadata, "splice": f"{sheet}:{edge}"}
            if isinstance(lprime, str) or lprime is None:
                metadata["knot"] = lprime or "trefoil"
            logger.info(f"spliced a knot into {sheet} at {edge}")
            return base.with_parts(
                sheets=tuple(spliced if s.name == sheet else s for s in base.sheets),
                metadata=metadata,
            )
        logger.debug(f"splice attempt {attempt + 1}: knot crosses the splice plane")
    raise ConstructionError(detail=f"could not splice the knot into {sheet} after {retries} attempts")


def build_family_Yi(i: int, lprime: Optional[Polygon] = None, knot_table=None) -> GermModel:
    return attach_connected_sum(build_family_Xi(i), lprime, knot_table=knot_table)


def remove_holder_triangle(
    model: GermModel,
    beta=2,
    sheet: str = "braid-A",
    position: float = 0.5,
    width: float = 0.5,
) -> GermModel:
    """Cut a beta-Holder horn out of a braid cone; the link becomes a segment"""
    beta = as_rational(beta)
    if beta <= 1:
        raise InvalidInputError(detail=f"removed triangle needs beta > 1, got {beta}")
    cone = model.sheet(sheet)
    if not isinstance(cone, ConeSheet):
        raise InvalidInputError(detail=f"sheet {sheet} is not a cone")
    _, lengths = polyline_ring(cone.vertices, cone.closed)
    center = position * lengths[-1]
    if not cone.closed and (center - width <= 0 or center + width >= lengths[-1]):
        raise InvalidInputError(detail=f"removed triangle on {sheet} reaches the curve ends and overlaps G")
    cut = replace(cone, horn=HornCut(position=position, width=width, beta=beta))
    return model.with_parts(
        sheets=tuple(cut if s.name == sheet else s for s in model.sheets),
        metadata={**model.metadata, "removed": f"{sheet}:beta={format_rational(beta)}"},
    )


def build_family_Zi(i: int, beta=2) -> GermModel:
    return remove_holder_triangle(build_family_Xi(i), beta=beta)


# ============= Surgery Invariant =============

def surgery_linking_number(model: GermModel, t: Optional[float] = None, resolution: Optional[int] = None, seed: int = 0) -> int:
    """|lk| of the two loops left after breaking every bridge; short open gaps are closed by chords"""
    if not model.bridges:
        raise InvalidInputError(detail="model carries no bridge to break")
    broken = model
    for bridge in model.bridges:
        if not broken.bridge(bridge.name).broken:
            broken = break_bridge(broken, bridge.name)
    link = section_at(broken, t if t is not None else settings.DEFAULT_SCALE, resolution)
    if len(link.components) != 2:
        raise DegeneracyError(detail=f"surgery left {len(link.components)} loops, expected 2")
    loops = []
    for index, component in enumerate(link.components):
        if not component.closed:
            start, end = component.endpoints
            gap = float(np.linalg.norm(end - start))
            if gap > settings.CHORD_FRACTION * component.length:
                raise DegeneracyError(
                    detail=f"component {index} has a gap of {gap:.3g}, too long to close by a chord "
                    f"(length {component.length:.3g})"
                )
            logger.debug(f"closing component {index} by a chord of length {gap:.3g}")
        loops.append(component.vertices if component.closed else component.points)
    value = abs(linking_number_gauss(loops, 0, 1, seed=seed))
    logger.info(f"surgery linking number {value}")
    return value
