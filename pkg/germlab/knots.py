"""
Polygonal Knots and Links
Generic projections, signed crossings, linking numbers and Alexander polynomials
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import sympy as sp
from networkx.algorithms.isomorphism import rooted_tree_isomorphism
from pydantic import ValidationError
from scipy.spatial import cKDTree
from sympy.polys.matrices import DomainMatrix

from .config import settings
from .exceptions import ConstructionError, DegeneracyError, InvalidInputError, ProjectionError
from .schemas import KnotTableFile
from .sectioning import NestingTree, PolyLink

logger = logging.getLogger(__name__)

VARIABLE = sp.Symbol("t")


# ============= Laurent Polynomials =============

@dataclass(frozen=True)
class LaurentPoly:
    """Integer Laurent polynomial in normal form: lowest exponent 0, leading coefficient positive"""
    coefficients: Tuple[int, ...]

    @classmethod
    def normalized(cls, coefficients: Sequence[int]) -> "LaurentPoly":
        values = [int(c) for c in coefficients]
        while values and values[0] == 0:
            values.pop(0)
        while values and values[-1] == 0:
            values.pop()
        if values and values[-1] < 0:
            values = [-c for c in values]
        return cls(coefficients=tuple(values))

    @classmethod
    def one(cls) -> "LaurentPoly":
        return cls(coefficients=(1,))

    @classmethod
    def from_sympy(cls, expression) -> "LaurentPoly":
        expression = sp.expand(expression)
        if expression == 0:
            return cls(coefficients=())
        poly = sp.Poly(expression, VARIABLE)
        return cls.normalized([int(c) for c in reversed(poly.all_coeffs())])

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        if not self.coefficients or not other.coefficients:
            return LaurentPoly(coefficients=())
        out = [0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return LaurentPoly.normalized(out)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def to_sympy(self):
        return sum(c * VARIABLE ** k for k, c in enumerate(self.coefficients))

    def __str__(self) -> str:
        if not self.coefficients:
            return "0"
        return str(sp.expand(self.to_sympy()))


# ============= Diagrams =============

@dataclass(frozen=True)
class Crossing:
    """Over/under passage; (component, segment, parameter) locate each strand"""
    over: Tuple[int, int, float]
    under: Tuple[int, int, float]
    sign: int
    position: Tuple[float, float]


@dataclass
class LinkDiagram:
    """Projection of closed polygons along a direction, with signed crossings"""
    direction: Tuple[float, float, float]
    components: List[np.ndarray]
    crossings: List[Crossing] = field(default_factory=list)

    def inter_component(self, a: int, b: int) -> List[Crossing]:
        return [c for c in self.crossings if {c.over[0], c.under[0]} == {a, b} and a != b]

    def events(self, component: int) -> List[Tuple[int, float, int, bool]]:
        """(segment, parameter, crossing index, is_over) along one component"""
        found = []
        for index, crossing in enumerate(self.crossings):
            if crossing.over[0] == component:
                found.append((crossing.over[1], crossing.over[2], index, True))
            if crossing.under[0] == component:
                found.append((crossing.under[1], crossing.under[2], index, False))
        return sorted(found)

    def gauss_code(self) -> str:
        parts = []
        for component in range(len(self.components)):
            tokens = [
                f"{'O' if over else 'U'}{index + 1}{'+' if self.crossings[index].sign > 0 else '-'}"
                for _, _, index, over in self.events(component)
            ]
            parts.append(" ".join(tokens))
        return " | ".join(parts)


def closed_polygons(link: Union[PolyLink, Sequence[np.ndarray]]) -> List[np.ndarray]:
    """Vertex arrays (first vertex not repeated) of every closed component"""
    if isinstance(link, PolyLink):
        if any(not c.closed for c in link.components):
            raise InvalidInputError(detail="projection needs closed components only")
        return [np.asarray(c.vertices, float) for c in link.components]
    polygons = []
    for polygon in link:
        polygon = np.asarray(polygon, float)
        if len(polygon) > 2 and np.allclose(polygon[0], polygon[-1]):
            polygon = polygon[:-1]
        if len(polygon) < 3:
            raise InvalidInputError(detail="a closed polygon needs at least 3 vertices")
        polygons.append(polygon)
    return polygons


def _frame(direction: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    helper = np.eye(3)[int(np.argmin(np.abs(direction)))]
    u = np.cross(helper, direction)
    u /= np.linalg.norm(u)
    return u, np.cross(direction, u)


def _cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _try_projection(polygons: List[np.ndarray], direction: np.ndarray, tol: float) -> Optional[List[Crossing]]:
    """Crossings along a direction, or None when the projection is not generic"""
    u_axis, v_axis = _frame(direction)
    starts, ends, owner, index, closing = [], [], [], [], []
    for k, polygon in enumerate(polygons):
        ring = np.vstack([polygon, polygon[:1]])
        starts.append(ring[:-1])
        ends.append(ring[1:])
        owner.append(np.full(len(polygon), k))
        index.append(np.arange(len(polygon)))
        closing.append(np.full(len(polygon), len(polygon) - 1))
    starts, ends = np.vstack(starts), np.vstack(ends)
    owner, index, closing = np.concatenate(owner), np.concatenate(index), np.concatenate(closing)

    p2 = np.column_stack([starts @ u_axis, starts @ v_axis])
    r2 = np.column_stack([ends @ u_axis, ends @ v_axis]) - p2
    h0, h1 = starts @ direction, ends @ direction
    lengths = np.linalg.norm(r2, axis=1)
    if np.any(lengths < tol):
        return None

    crossings: List[Crossing] = []
    count = len(p2)
    for lo in range(0, count, 256):
        hi = min(count, lo + 256)
        rows = np.arange(lo, hi)[:, None]
        cols = np.arange(count)[None, :]
        same = owner[rows] == owner[cols]
        adjacent = same & (
            (np.abs(index[rows] - index[cols]) == 1)
            | ((index[rows] == 0) & (index[cols] == closing[cols]))
            | ((index[cols] == 0) & (index[rows] == closing[rows]))
        )
        candidate = (cols > rows) & ~adjacent
        rr, ww = r2[lo:hi, None, :], r2[None, :, :]
        qp = p2[None, :, :] - p2[lo:hi, None, :]
        denom = _cross2(rr, ww)
        scale = lengths[lo:hi, None] * lengths[None, :]
        parallel = np.abs(denom) <= tol * scale
        with np.errstate(divide="ignore", invalid="ignore"):
            s = _cross2(qp, ww) / denom
            w = _cross2(qp, rr) / denom
        eps_s = tol / lengths[lo:hi, None]
        eps_w = tol / lengths[None, :]
        hit = candidate & ~parallel & (s >= -eps_s) & (s <= 1 + eps_s) & (w >= -eps_w) & (w <= 1 + eps_w)
        near_vertex = hit & ((s < eps_s) | (s > 1 - eps_s) | (w < eps_w) | (w > 1 - eps_w))
        if near_vertex.any():
            return None
        for a, b in zip(*np.nonzero(candidate & parallel)):
            i, j = lo + a, b
            gap = min(
                _point_segment_2d(p2[i], p2[j], p2[j] + r2[j]),
                _point_segment_2d(p2[i] + r2[i], p2[j], p2[j] + r2[j]),
                _point_segment_2d(p2[j], p2[i], p2[i] + r2[i]),
                _point_segment_2d(p2[j] + r2[j], p2[i], p2[i] + r2[i]),
            )
            if gap < tol:
                return None
        for a, b in zip(*np.nonzero(hit)):
            i, j = lo + a, b
            si, wj = float(s[a, b]), float(w[a, b])
            height_i = h0[i] + si * (h1[i] - h0[i])
            height_j = h0[j] + wj * (h1[j] - h0[j])
            if abs(height_i - height_j) < tol:
                return None
            over, under = ((i, si), (j, wj)) if height_i > height_j else ((j, wj), (i, si))
            sign = int(np.sign(_cross2(r2[over[0]], r2[under[0]])))
            position = p2[i] + si * r2[i]
            crossings.append(Crossing(
                over=(int(owner[over[0]]), int(index[over[0]]), over[1]),
                under=(int(owner[under[0]]), int(index[under[0]]), under[1]),
                sign=sign,
                position=(float(position[0]), float(position[1])),
            ))

    if len(crossings) > 1:
        positions = np.array([c.position for c in crossings])
        if cKDTree(positions).query_pairs(tol):
            return None
    return crossings


def _point_segment_2d(p, a, b) -> float:
    ab = b - a
    span = float(ab @ ab)
    w = 0.0 if span == 0 else min(1.0, max(0.0, float((p - a) @ ab) / span))
    return float(np.linalg.norm(p - (a + w * ab)))


def project_generic(link, seed: int = 0, retries: Optional[int] = None, direction=None) -> LinkDiagram:
    """Diagram from a seeded random direction passing the genericity checks, or from a fixed direction"""
    polygons = closed_polygons(link)
    retries = retries or settings.PROJECTION_RETRIES
    tol = settings.GENERICITY_TOLERANCE
    if not polygons:
        return LinkDiagram(direction=(0.0, 0.0, 1.0), components=[])
    every = np.vstack(polygons)
    center = every.mean(axis=0)
    diameter = float(np.linalg.norm(np.ptp(every, axis=0))) or 1.0
    normalized = [(p - center) / diameter for p in polygons]

    if direction is not None:
        direction = np.asarray(direction, float)
        direction = direction / np.linalg.norm(direction)
        crossings = _try_projection(normalized, direction, tol)
        if crossings is None:
            raise ProjectionError(detail=f"projection along {direction.tolist()} is not generic")
        return LinkDiagram(direction=tuple(float(c) for c in direction), components=polygons, crossings=crossings)

    rng = np.random.default_rng(seed)
    for attempt in range(retries):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        crossings = _try_projection(normalized, direction, tol)
        if crossings is not None:
            if attempt:
                logger.debug(f"generic projection found after {attempt + 1} attempts")
            return LinkDiagram(direction=tuple(float(c) for c in direction), components=polygons, crossings=crossings)
    raise ProjectionError(detail=f"no generic projection found in {retries} attempts")


# ============= Linking Numbers =============

def _unit(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    return np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)


def gauss_linking_sum(polygon_a: np.ndarray, polygon_b: np.ndarray) -> float:
    """Exact Gauss double integral over segment pairs via quadrilateral solid angles"""
    a0 = np.asarray(polygon_a, float)
    a1 = np.roll(a0, -1, axis=0)
    b0 = np.asarray(polygon_b, float)
    b1 = np.roll(b0, -1, axis=0)
    total = 0.0
    for lo in range(0, len(a0), 256):
        s0, s1 = a0[lo:lo + 256, None, :], a1[lo:lo + 256, None, :]
        r13, r14 = b0[None] - s0, b1[None] - s0
        r23, r24 = b0[None] - s1, b1[None] - s1
        n1 = _unit(np.cross(r13, r14))
        n2 = _unit(np.cross(r14, r24))
        n3 = _unit(np.cross(r24, r23))
        n4 = _unit(np.cross(r23, r13))

        def arcsin_dot(p, q):
            return np.arcsin(np.clip(np.einsum("ijk,ijk->ij", p, q), -1.0, 1.0))

        omega = arcsin_dot(n1, n2) + arcsin_dot(n2, n3) + arcsin_dot(n3, n4) + arcsin_dot(n4, n1)
        orientation = np.einsum("ijk,ijk->ij", np.cross((b1 - b0)[None], s1 - s0), r13)
        total += float(np.sum(np.abs(omega) * np.sign(orientation)))
    return total / (4 * np.pi)


def subdivide(polygon: np.ndarray) -> np.ndarray:
    """Insert every edge midpoint"""
    polygon = np.asarray(polygon, float)
    midpoints = 0.5 * (polygon + np.roll(polygon, -1, axis=0))
    out = np.empty((2 * len(polygon), 3))
    out[0::2], out[1::2] = polygon, midpoints
    return out


def _diagram_linking(polygon_a, polygon_b, seed: int) -> int:
    diagram = project_generic([polygon_a, polygon_b], seed=seed)
    half_sum = sum(c.sign for c in diagram.inter_component(0, 1))
    if half_sum % 2:
        raise DegeneracyError(detail="odd inter-component crossing sum")
    return half_sum // 2


def linking_number_gauss(link, comp_a: int, comp_b: int, seed: int = 0) -> int:
    """Gauss-sum linking number, confirmed against the diagram half-sum"""
    if comp_a == comp_b:
        raise InvalidInputError(detail="linking number needs two different components")
    count = len(link.components) if isinstance(link, PolyLink) else len(link)
    for index in (comp_a, comp_b):
        if not 0 <= index < count:
            raise InvalidInputError(detail=f"component {index} out of range for a link of {count} components")
    if isinstance(link, PolyLink):
        for index in (comp_a, comp_b):
            if not link.components[index].closed:
                raise InvalidInputError(detail=f"component {index} is not closed")
    polygons = closed_polygons(link) if not isinstance(link, PolyLink) else [
        np.asarray(link.components[i].vertices, float) for i in range(len(link.components))
    ]
    polygon_a, polygon_b = polygons[comp_a], polygons[comp_b]

    for attempt in range(2):
        gauss = gauss_linking_sum(polygon_a, polygon_b)
        rounded = int(round(gauss))
        diagram = _diagram_linking(polygon_a, polygon_b, seed)
        if abs(gauss - rounded) < 0.1 and rounded == diagram:
            return rounded
        logger.warning(f"linking methods disagree (gauss={gauss:.4f}, diagram={diagram}); refining")
        polygon_a, polygon_b = subdivide(polygon_a), subdivide(polygon_b)
    raise DegeneracyError(detail=f"numerical degeneracy: Gauss sum {gauss:.4f} vs diagram {diagram}")


# ============= Alexander Polynomial =============

def alexander_polynomial(diagram: LinkDiagram) -> LaurentPoly:
    """Determinant of a reduced Alexander matrix of a one-component diagram"""
    if len(diagram.components) != 1:
        raise InvalidInputError(detail=f"Alexander polynomial needs one component, got {len(diagram.components)}")
    count = len(diagram.crossings)
    if count <= 1:
        return LaurentPoly.one()

    arc_at_over: Dict[int, int] = {}
    under_arcs: Dict[int, Tuple[int, int]] = {}
    arc = 0
    for _, _, index, over in diagram.events(0):
        if over:
            arc_at_over[index] = arc
        else:
            under_arcs[index] = (arc, arc + 1)
            arc += 1
    rows = [[sp.Integer(0)] * count for _ in range(count)]
    for index, crossing in enumerate(diagram.crossings):
        over_arc = arc_at_over[index] % count
        incoming, outgoing = (a % count for a in under_arcs[index])
        rows[index][over_arc] += 1 - VARIABLE
        if crossing.sign > 0:
            rows[index][incoming] += VARIABLE
            rows[index][outgoing] += -1
        else:
            rows[index][incoming] += -1
            rows[index][outgoing] += VARIABLE

    minor = [row[:-1] for row in rows[:-1]]
    ring = sp.ZZ[VARIABLE]
    matrix = DomainMatrix([[ring.from_sympy(sp.expand(e)) for e in row] for row in minor], (count - 1, count - 1), ring)
    return LaurentPoly.from_sympy(ring.to_sympy(matrix.det()))


def knot_alexander(polygon: np.ndarray, seed: int = 0) -> LaurentPoly:
    return alexander_polynomial(project_generic([polygon], seed=seed))


# ============= Placement and Connected Sums =============

@dataclass(frozen=True)
class AnchoredKnot:
    """Knot placed so its splice edge is the chord end -> start; `arc` omits that edge"""
    arc: np.ndarray
    scale: float


def _extreme_edges(polygon: np.ndarray):
    """Candidate (vertex, neighbour, outward normal) edges on the convex-hull side"""
    count = len(polygon)
    for axis in range(3):
        for direction in (-1.0, 1.0):
            outward = np.zeros(3)
            outward[axis] = direction
            i = int(np.argmax(polygon @ outward))
            for j in ((i - 1) % count, (i + 1) % count):
                chord = polygon[j] - polygon[i]
                normal = outward - (outward @ chord) / (chord @ chord) * chord
                if np.linalg.norm(normal) < 1e-9:
                    continue
                yield i, j, normal / np.linalg.norm(normal)


def anchor_knot(polygon, start, end, body_side, skip: int = 0) -> AnchoredKnot:
    """Rigidly move and scale a knot so an extreme edge becomes start -> end, body toward body_side"""
    polygon = closed_polygons([polygon])[0]
    start, end, body_side = (np.asarray(v, float) for v in (start, end, body_side))
    target = end - start
    target_len = float(np.linalg.norm(target))
    f1 = target / target_len
    f2 = -body_side - (-body_side @ f1) * f1
    f2 /= np.linalg.norm(f2)
    frame_target = np.column_stack([f1, f2, np.cross(f1, f2)])

    usable = 0
    for i, j, normal in _extreme_edges(polygon):
        others = np.delete(np.arange(len(polygon)), [i, j])
        if not np.all((polygon[others] - polygon[i]) @ normal < -1e-9):
            continue
        if usable < skip:
            usable += 1
            continue
        chord = polygon[j] - polygon[i]
        e1 = chord / np.linalg.norm(chord)
        frame_source = np.column_stack([e1, normal, np.cross(e1, normal)])
        rotation = frame_target @ frame_source.T
        scale = target_len / float(np.linalg.norm(chord))
        placed = start + scale * (polygon - polygon[i]) @ rotation.T
        count = len(polygon)
        step = -1 if j == (i + 1) % count else 1
        order = [(i + step * k) % count for k in range(count)]
        return AnchoredKnot(arc=placed[order], scale=scale)
    raise ConstructionError(detail="no extreme splice edge available for anchoring")


def _segments_clear(segments: Sequence[Tuple[np.ndarray, np.ndarray]], polygon: np.ndarray) -> bool:
    """Rough clearance: bridge midpoints stay away from every knot vertex but the splice ends"""
    for a, b in segments:
        samples = a + np.linspace(0.05, 0.95, 19)[:, None] * (b - a)
        nearest = cKDTree(polygon).query(samples)[0]
        if np.any(nearest < 1e-6 * np.linalg.norm(b - a)):
            return False
    return True


def connected_sum(knot_a, knot_b, gap: float = 1.0, retries: Optional[int] = None) -> np.ndarray:
    """Splice two knots along extreme edges joined by two parallel bridges"""
    retries = retries or settings.SPLICE_RETRIES
    half = 0.5
    for attempt in range(retries):
        try:
            left = anchor_knot(knot_a, (-gap, -half, 0.0), (-gap, half, 0.0), (-1.0, 0.0, 0.0), skip=attempt)
            right = anchor_knot(knot_b, (gap, half, 0.0), (gap, -half, 0.0), (1.0, 0.0, 0.0), skip=attempt)
        except ConstructionError:
            break
        bridges = [(left.arc[-1], right.arc[0]), (right.arc[-1], left.arc[0])]
        polygon = np.vstack([left.arc, right.arc])
        if _segments_clear(bridges, polygon):
            return polygon
        logger.debug(f"connected sum attempt {attempt + 1}: bridges intersect a knot")
    raise ConstructionError(detail=f"connected sum failed after {retries} splice attempts")


# ============= Nesting Comparison =============

def _rooted(tree: NestingTree) -> nx.Graph:
    graph = nx.Graph()
    graph.add_node("root")
    for node, parent in tree.parents.items():
        graph.add_edge(node, "root" if parent is None else parent)
    return graph


def compare_nesting(tree_a: NestingTree, tree_b: NestingTree) -> bool:
    """Isomorphism of unordered rooted forests"""
    if len(tree_a.parents) != len(tree_b.parents):
        return False
    if not tree_a.parents:
        return True
    return bool(rooted_tree_isomorphism(_rooted(tree_a), "root", _rooted(tree_b), "root"))


# ============= Knot Table =============

@dataclass(frozen=True)
class KnotEntry:
    name: str
    vertices: np.ndarray = field(compare=False)
    alexander: LaurentPoly


def load_knot_table(path=None) -> Dict[str, KnotEntry]:
    """Built-in knot polygons with their expected Alexander normal forms"""
    path = path or settings.knot_table_file
    try:
        with open(path, "r", encoding="utf-8") as handle:
            table = KnotTableFile.model_validate(json.load(handle))
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        raise InvalidInputError(detail=f"cannot read knot table {path}: {exc}") from exc
    return {
        name: KnotEntry(
            name=name,
            vertices=np.asarray(entry.vertices, float),
            alexander=LaurentPoly.normalized(entry.alexander),
        )
        for name, entry in table.knots.items()
    }


def table_knot(name: str, path=None) -> np.ndarray:
    table = load_knot_table(path)
    if name not in table:
        raise InvalidInputError(detail=f"unknown knot {name!r}; table has {', '.join(sorted(table))}")
    return table[name].vertices
