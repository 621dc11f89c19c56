"""
Sectioning
Links of germs at a fixed scale, tangent-cone links and nesting of planar components
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import shapely
import sympy as sp
from contourpy import LineType, contour_generator
from scipy.optimize import brentq
from scipy.spatial import cKDTree
from scipy.spatial.distance import directed_hausdorff
from shapely.geometry import LinearRing, Polygon

from .config import settings
from .exceptions import DegeneracyError, InvalidInputError
from .models import (
    ConeSheet,
    GermModel,
    HolderTriangle,
    ImplicitPlanarSheet,
    Sheet,
    leading_form,
    t as T,
    x as X,
    y as Y,
)

logger = logging.getLogger(__name__)


# ============= Link Types =============

@dataclass(eq=False)
class Piece:
    """Polyline cut from one sheet before gluing"""
    points: np.ndarray
    closed: bool
    sheet: str
    exact: bool


@dataclass(eq=False)
class LinkComponent:
    """Polygonal component; closed rings repeat their first vertex at the end"""
    points: np.ndarray
    closed: bool
    sheets: Tuple[str, ...] = ()
    pinched: bool = False

    @property
    def vertices(self) -> np.ndarray:
        return self.points[:-1] if self.closed else self.points

    @property
    def endpoints(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        if self.closed:
            return None
        return self.points[0], self.points[-1]

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


@dataclass(eq=False)
class PolyLink:
    """Section of a germ at scale t"""
    t: float
    components: List[LinkComponent] = field(default_factory=list)
    dimension: int = 3
    gluing_tolerance: float = 0.0

    @property
    def closed_components(self) -> List[LinkComponent]:
        return [c for c in self.components if c.closed]

    @property
    def open_components(self) -> List[LinkComponent]:
        return [c for c in self.components if not c.closed]

    def all_points(self) -> np.ndarray:
        if not self.components:
            return np.zeros((0, 3))
        return np.vstack([c.points for c in self.components])

    def scaled(self, factor: float) -> "PolyLink":
        return PolyLink(
            t=self.t,
            components=[replace(c, points=c.points * factor) for c in self.components],
            dimension=self.dimension,
            gluing_tolerance=self.gluing_tolerance * factor,
        )


@dataclass(frozen=True)
class LinkSummary:
    closed: int
    open: int
    pinched: int
    endpoints: int
    lengths: Tuple[float, ...]

    @property
    def total_length(self) -> float:
        return float(sum(self.lengths))


@dataclass
class ConvergenceReport:
    """Stabilization of rescaled sections along a decreasing ladder"""
    ladder: List[float]
    distances: List[float]
    converged: bool
    converged_at: Optional[int]
    tolerance: float
    limit_distance: float


# ============= Contour Extraction =============

def _dedupe(points: np.ndarray, eps: float) -> np.ndarray:
    if len(points) < 2:
        return points
    keep = np.concatenate([[True], np.linalg.norm(np.diff(points, axis=0), axis=1) > eps])
    return points[keep]


def _boundary_point(sheet: ImplicitPlanarSheet, inside: np.ndarray, outside: np.ndarray, scale: float) -> np.ndarray:
    """Where the chord from an admissible to an inadmissible point leaves the constraints"""
    def margin(s):
        p = inside + s * (outside - inside)
        return float(sheet.margin(p[0], p[1], scale))

    if margin(0.0) <= 0:
        return inside
    s = brentq(margin, 0.0, 1.0, xtol=1e-14)
    return inside + s * (outside - inside)


def _clip_line(sheet: ImplicitPlanarSheet, line: np.ndarray, scale: float) -> List[Tuple[np.ndarray, bool]]:
    closed = len(line) > 2 and np.allclose(line[0], line[-1])
    mask = sheet.admissible(line[:, 0], line[:, 1], scale)
    if mask.all():
        return [(line, closed)]
    if not mask.any():
        return []
    if closed:
        ring = line[:-1]
        ring_mask = mask[:-1]
        start = int(np.flatnonzero(~ring_mask)[0])
        line = np.vstack([np.roll(ring, -start, axis=0), ring[start:start + 1]])
        mask = np.concatenate([np.roll(ring_mask, -start), ring_mask[start:start + 1]])

    runs = []
    j = 0
    while j < len(line):
        if not mask[j]:
            j += 1
            continue
        k = j
        while k + 1 < len(line) and mask[k + 1]:
            k += 1
        run = list(line[j:k + 1])
        if j > 0:
            run.insert(0, _boundary_point(sheet, line[j], line[j - 1], scale))
        if k + 1 < len(line):
            run.append(_boundary_point(sheet, line[k], line[k + 1], scale))
        runs.append((np.asarray(run), False))
        j = k + 1
    return runs


def trace_implicit(sheet: ImplicitPlanarSheet, scale: float, resolution: int) -> List[Piece]:
    """Zero set of F(., ., t) in the window [-3t, 3t]^2, clipped by the constraints"""
    half = settings.WINDOW_FACTOR * scale
    spacing = scale / resolution
    count = int(round(2 * half / spacing)) + 1
    # Offset keeps the axis point and the diagonals off grid vertices.
    xs = np.linspace(-half, half, count) + 0.3 * spacing
    ys = np.linspace(-half, half, count) + 0.45 * spacing
    grid_x, grid_y = np.meshgrid(xs, ys)
    values = sheet.evaluator(grid_x, grid_y, scale)
    if not (np.any(values > 0) and np.any(values < 0)):
        logger.debug(f"sheet {sheet.name}: no sign change at t={scale}")
        return []

    generator = contour_generator(xs, ys, values, line_type=LineType.Separate)
    pieces = []
    for line in generator.lines(0.0):
        line = _dedupe(np.asarray(line, float), 1e-12 * scale)
        if len(line) < 2:
            continue
        for points, closed in _clip_line(sheet, line, scale):
            points = _dedupe(points, 1e-12 * scale)
            if len(points) < 2:
                continue
            spatial = np.column_stack([points, np.zeros(len(points))])
            pieces.append(Piece(points=spatial, closed=closed, sheet=sheet.name, exact=False))
    return pieces


def sheet_pieces(sheet: Sheet, scale: float, resolution: int) -> List[Piece]:
    """Section of a single sheet before gluing"""
    if isinstance(sheet, ImplicitPlanarSheet):
        return trace_implicit(sheet, scale, resolution)
    if isinstance(sheet, ConeSheet):
        raw = sheet.section(scale)
    elif isinstance(sheet, HolderTriangle):
        raw = sheet.section(scale, resolution)
    else:
        raise InvalidInputError(detail=f"unknown sheet type {type(sheet).__name__}")
    pieces = []
    for points, closed in raw:
        if closed:
            points = np.vstack([points, points[:1]])
        pieces.append(Piece(points=points, closed=closed, sheet=sheet.name, exact=True))
    return pieces


# ============= Gluing =============

def glue_pieces(pieces: Sequence[Piece], tolerance: float, exact_tolerance: float) -> List[LinkComponent]:
    """Join open pieces whose ends meet; three or more ends at a point form a pinch"""
    components = [
        LinkComponent(points=p.points, closed=True, sheets=(p.sheet,)) for p in pieces if p.closed
    ]
    open_pieces = [p for p in pieces if not p.closed]
    if not open_pieces:
        return components

    ends = np.vstack([[p.points[0], p.points[-1]] for p in open_pieces])
    reach = np.repeat([exact_tolerance if p.exact else tolerance for p in open_pieces], 2)
    graph = nx.Graph()
    graph.add_nodes_from(range(len(ends)))
    for a, b in cKDTree(ends).query_pairs(max(tolerance, exact_tolerance)):
        if np.linalg.norm(ends[a] - ends[b]) <= max(reach[a], reach[b]):
            graph.add_edge(a, b)

    cluster_of = {}
    cluster_size = {}
    for index, cluster in enumerate(nx.connected_components(graph)):
        for end in cluster:
            cluster_of[end] = index
        cluster_size[index] = len(cluster)

    pairs = {}
    for a, b in graph.edges:
        if cluster_size[cluster_of[a]] == 2:
            pairs[a], pairs[b] = b, a

    def partner(end: int) -> Optional[int]:
        return pairs.get(end)

    used = [False] * len(open_pieces)

    def walk(first_end: int) -> Tuple[List[np.ndarray], List[str], int]:
        """Follow pieces from an end; returns chain points, sheets and the terminal end"""
        chunks, sheets = [], []
        end = first_end
        while True:
            piece_index = end // 2
            used[piece_index] = True
            piece = open_pieces[piece_index]
            points = piece.points if end % 2 == 0 else piece.points[::-1]
            chunks.append(points if not chunks else points[1:])
            sheets.append(piece.sheet)
            far = end ^ 1
            nxt = partner(far)
            if nxt is None or used[nxt // 2]:
                return chunks, sheets, far
            end = nxt

    def terminal(end: int) -> bool:
        return cluster_size[cluster_of[end]] != 2

    for end in range(len(ends)):
        if used[end // 2] or not terminal(end):
            continue
        chunks, sheets, last = walk(end)
        points = np.vstack(chunks)
        pinch_start = cluster_size[cluster_of[end]] >= 3
        pinch_end = cluster_size[cluster_of[last]] >= 3
        if pinch_start and cluster_of[end] == cluster_of[last]:
            points[-1] = points[0]
            components.append(LinkComponent(points=points, closed=True, sheets=tuple(dict.fromkeys(sheets)), pinched=True))
        else:
            components.append(LinkComponent(
                points=points, closed=False, sheets=tuple(dict.fromkeys(sheets)), pinched=pinch_start or pinch_end
            ))

    for index in range(len(open_pieces)):
        if used[index]:
            continue
        chunks, sheets, _ = walk(2 * index)
        points = np.vstack(chunks)
        points[-1] = points[0]
        components.append(LinkComponent(points=points, closed=True, sheets=tuple(dict.fromkeys(sheets))))
    return components


def gluing_tolerance(scale: float, resolution: int) -> float:
    return settings.GLUE_CELLS * scale / resolution


def _check_scale(scale: float, resolution: int) -> None:
    if not 0 < scale <= 1:
        raise InvalidInputError(detail=f"scale t={scale} outside (0, 1]")
    if resolution < settings.MIN_RESOLUTION:
        raise InvalidInputError(detail=f"resolution {resolution} below {settings.MIN_RESOLUTION}")


def section_at(model: GermModel, t: float, resolution: Optional[int] = None) -> PolyLink:
    """Glued section of the germ at scale t"""
    resolution = resolution or settings.DEFAULT_RESOLUTION
    _check_scale(t, resolution)
    pieces: List[Piece] = []
    for sheet in model.sheets:
        pieces.extend(sheet_pieces(sheet, t, resolution))
    tolerance = gluing_tolerance(t, resolution)
    components = glue_pieces(pieces, tolerance, 1e-9 * t)
    logger.debug(f"section at t={t}: {len(pieces)} pieces -> {len(components)} components")
    return PolyLink(t=t, components=components, dimension=model.dimension, gluing_tolerance=tolerance)


# ============= Tangent Cones =============

def _limit_constraints(constraints) -> Optional[List[sp.Expr]]:
    """Leading forms of the constraints; None when the limit region is empty"""
    kept = []
    for g in constraints:
        lead = leading_form(g)
        if lead.free_symbols:
            kept.append(lead)
        elif lead < 0:
            return None
    return kept


def tangent_cone_model(model: GermModel) -> GermModel:
    """Exact scale limit of the germ: leading forms, uncut cones and degree-one templates"""
    sheets: List[Sheet] = []
    for sheet in model.sheets:
        if isinstance(sheet, ImplicitPlanarSheet):
            constraints = _limit_constraints(sheet.constraints)
            if constraints is None:
                continue
            lead = leading_form(sheet.polynomial)
            try:
                _, factors = sp.factor_list(lead, X, Y, T)
                factors = [f for f, _ in factors if f.free_symbols & {X, Y}]
            except (sp.PolynomialError, NotImplementedError):
                factors = [lead]
            for index, factor in enumerate(factors):
                name = sheet.name if len(factors) == 1 else f"{sheet.name}/{index + 1}"
                sheets.append(ImplicitPlanarSheet(
                    name=name, polynomial=factor, constraints=tuple(constraints), dimension=sheet.dimension
                ))
        elif isinstance(sheet, ConeSheet):
            sheets.append(replace(sheet, horn=None, reach=1.0))
        elif isinstance(sheet, HolderTriangle):
            template = []
            for coordinate in sheet.template:
                for _, _, exponent in coordinate:
                    if exponent < 1:
                        raise DegeneracyError(detail=f"sheet {sheet.name} grows faster than a cone (t^{exponent})")
                template.append(tuple(term for term in coordinate if term[2] == 1))
            sheets.append(replace(sheet, template=tuple(template)))
    return GermModel(dimension=model.dimension, sheets=tuple(sheets), metadata=dict(model.metadata))


def _split_at_axis(pieces: Sequence[Piece], tolerance: float) -> List[Piece]:
    """Cut pieces passing through the axis point there, so that meetings become pinches"""
    out = []
    for piece in pieces:
        points = piece.points
        starts, ends = points[:-1], points[1:]
        direction = ends - starts
        span = np.einsum("ij,ij->i", direction, direction)
        w = np.clip(-np.einsum("ij,ij->i", starts, direction) / np.where(span > 0, span, 1.0), 0.0, 1.0)
        gaps = np.linalg.norm(starts + w[:, None] * direction, axis=1)
        j = int(np.argmin(gaps)) if len(gaps) else 0
        if not len(gaps) or gaps[j] > tolerance:
            out.append(piece)
            continue
        origin = np.zeros((1, 3))
        if piece.closed:
            ring = points[:-1]
            rotated = np.vstack([origin, np.roll(ring, -(j + 1), axis=0), origin])
            out.append(Piece(points=_dedupe(rotated, 1e-12), closed=False, sheet=piece.sheet, exact=piece.exact))
            continue
        head = np.vstack([points[:j + 1], origin])
        tail = np.vstack([origin, points[j + 1:]])
        for part in (head, tail):
            part = _dedupe(part, 1e-12)
            if len(part) >= 2 and np.linalg.norm(np.diff(part, axis=0), axis=1).sum() > tolerance:
                out.append(Piece(points=part, closed=False, sheet=piece.sheet, exact=piece.exact))
    return out


def limit_link(model: GermModel, resolution: Optional[int] = None) -> PolyLink:
    """Section at t = 1 of the tangent cone, pinched at the axis point"""
    resolution = resolution or settings.DEFAULT_RESOLUTION
    cone = tangent_cone_model(model)
    pieces: List[Piece] = []
    for sheet in cone.sheets:
        pieces.extend(sheet_pieces(sheet, 1.0, resolution))
    tolerance = gluing_tolerance(1.0, resolution)
    pieces = [p for p in _split_at_axis(pieces, tolerance) if len(p.points) >= 2]
    # Cut points are exact, so pinches are detected at the tight tolerance as well.
    components = glue_pieces(pieces, tolerance, 1e-9)
    return PolyLink(t=1.0, components=components, dimension=model.dimension, gluing_tolerance=tolerance)


def link_distance(a: PolyLink, b: PolyLink) -> float:
    """Hausdorff distance between the vertex sets of two links"""
    return point_set_distance(a.all_points(), b.all_points())


def point_set_distance(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return float("inf")
    return float(max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0]))


def tangent_cone_link(
    model: GermModel,
    ladder: Optional[Sequence[float]] = None,
    resolution: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> Tuple[PolyLink, ConvergenceReport]:
    """
    Rescaled section at the smallest rung, with a report on how the rescaled
    sections stabilize along the ladder.

    The last iterate is returned whether or not the ladder converged. The
    exact limit is limit_link; the report records its distance to the last
    iterate.
    """
    ladder = list(ladder if ladder is not None else settings.ladder)
    resolution = resolution or settings.DEFAULT_RESOLUTION
    tolerance = tolerance if tolerance is not None else settings.CONVERGENCE_TOLERANCE
    if len(ladder) < 4:
        raise InvalidInputError(detail=f"ladder needs at least 4 rungs, got {len(ladder)}")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise InvalidInputError(detail="ladder must be strictly decreasing")

    rescaled = [section_at(model, scale, resolution).scaled(1.0 / scale) for scale in ladder]
    distances = [link_distance(a, b) for a, b in zip(rescaled, rescaled[1:])]
    converged = distances[-1] < tolerance and distances[-3] >= distances[-2] >= distances[-1]
    converged_at = None
    for index in range(len(distances)):
        if all(d < tolerance for d in distances[index:]):
            converged_at = index + 2
            break

    report = ConvergenceReport(
        ladder=ladder,
        distances=distances,
        converged=bool(converged),
        converged_at=converged_at,
        tolerance=tolerance,
        limit_distance=link_distance(rescaled[-1], limit_link(model, resolution)),
    )
    if not converged:
        logger.info(f"tangent cone not converged over ladder; last distance {distances[-1]:.3g}")
    return rescaled[-1], report


# ============= Component Analysis =============

def component_analysis(link: PolyLink) -> LinkSummary:
    return LinkSummary(
        closed=len(link.closed_components),
        open=len(link.open_components),
        pinched=sum(1 for c in link.components if c.pinched),
        endpoints=2 * len(link.open_components),
        lengths=tuple(c.length for c in link.components),
    )


# ============= Nesting =============

@dataclass
class NestingTree:
    """Rooted forest over closed planar components; parent = smallest enclosing curve"""
    parents: Dict[int, Optional[int]]

    @property
    def roots(self) -> List[int]:
        return sorted(n for n, p in self.parents.items() if p is None)

    def children(self, node: int) -> List[int]:
        return sorted(n for n, p in self.parents.items() if p == node)

    def to_graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.parents)
        graph.add_edges_from((p, n) for n, p in self.parents.items() if p is not None)
        return graph

    def _describe(self, node: int, label: str) -> str:
        kids = self.children(node)
        if not kids:
            return label
        if all(not self.children(k) for k in kids):
            return f"{label}({len(kids)} {'leaf' if len(kids) == 1 else 'leaves'})"
        return f"{label}(" + ", ".join(sorted(self._describe(k, "node") for k in kids)) + ")"

    def describe(self) -> str:
        if not self.parents:
            return "empty"
        return " + ".join(sorted(self._describe(r, "root") for r in self.roots))


def winding_number(point: np.ndarray, ring: np.ndarray) -> int:
    """Winding number of a closed 2D ring (first vertex repeated) around a point"""
    rel = ring - point
    angles = np.arctan2(rel[:, 1], rel[:, 0])
    turns = np.diff(angles)
    turns = (turns + np.pi) % (2 * np.pi) - np.pi
    return int(round(turns.sum() / (2 * np.pi)))


def _representative(inner: np.ndarray, outer: LinearRing) -> Tuple[np.ndarray, float]:
    distances = shapely.distance(outer, shapely.points(inner))
    return inner[int(np.argmax(distances))], float(np.max(distances))


def nesting_tree(link: PolyLink, cell: Optional[float] = None) -> NestingTree:
    """Containment forest of the closed, coplanar, pairwise disjoint components"""
    components = link.components
    if any(not c.closed for c in components):
        raise InvalidInputError(detail="nesting needs closed components only")
    if not components:
        return NestingTree(parents={})
    every = link.all_points()
    extent = float(np.ptp(every[:, :2], axis=0).max()) or 1.0
    if np.ptp(every[:, 2]) > 1e-9 * extent:
        raise InvalidInputError(detail="link components are not coplanar")
    cell = cell if cell is not None else (link.gluing_tolerance / settings.GLUE_CELLS or 1e-6 * extent)

    rings = [c.points[:, :2] for c in components]
    polygons = [Polygon(r).buffer(0) for r in rings]
    areas = [p.area for p in polygons]
    boundaries = [LinearRing(r) for r in rings]

    def contains(outer: int, inner: int) -> bool:
        if areas[outer] <= areas[inner]:
            return False
        point, clearance = _representative(rings[inner][:-1], boundaries[outer])
        if clearance < 0.5 * cell:
            point = point + np.array([0.5 * cell, 0.0])
        return winding_number(point, rings[outer]) != 0

    count = len(components)
    for a in range(count):
        for b in range(a + 1, count):
            small = min(areas[a], areas[b])
            if small <= 0:
                continue
            overlap = polygons[a].intersection(polygons[b]).area
            if 1e-6 * small < overlap < (1 - 1e-3) * small:
                raise InvalidInputError(detail=f"link components {a} and {b} intersect")

    parents: Dict[int, Optional[int]] = {}
    for inner in range(count):
        holders = [outer for outer in range(count) if outer != inner and contains(outer, inner)]
        parents[inner] = min(holders, key=lambda o: areas[o]) if holders else None
    return NestingTree(parents=parents)
