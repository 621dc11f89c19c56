"""
Metric Estimators
Tangency orders, inner distance exponents, distances to sheets and bi-Lipschitz distortion
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree
from scipy.stats import linregress

from .config import settings
from .exceptions import DegeneracyError, DisconnectedError, InvalidInputError, NotAMapError
from .models import (
    Arc,
    ConeSheet,
    GermModel,
    HolderTriangle,
    ImplicitPlanarSheet,
    PLMap,
    Sheet,
    ambient_points,
    point_at_arclength,
    polyline_ring,
)
from .sectioning import sheet_pieces

logger = logging.getLogger(__name__)


def dyadic_ladder(start: int, stop: int) -> List[float]:
    """Scales 2^-start > ... > 2^-stop"""
    return [2.0 ** -j for j in range(start, stop + 1)]


# ============= Exponent Fits =============

@dataclass
class ExponentFit:
    """Power law d(t) ~ C t^slope fitted in log-log coordinates"""
    slope: float
    intercept: float
    r2: Optional[float]
    ladder: List[float]
    values: List[float]
    residuals: List[float] = field(default_factory=list)
    coincident: bool = False

    @classmethod
    def coincident_signal(cls, ladder: Sequence[float], values: Sequence[float]) -> "ExponentFit":
        return cls(
            slope=float("inf"), intercept=float("nan"), r2=None,
            ladder=list(ladder), values=list(values), coincident=True,
        )


def fit_exponent(ladder: Sequence[float], values: Sequence[float]) -> ExponentFit:
    """Least-squares slope of log(value) against log(t)"""
    ladder, values = np.asarray(ladder, float), np.asarray(values, float)
    if len(ladder) < 5:
        raise InvalidInputError(detail=f"exponent fits need at least 5 rungs, got {len(ladder)}")
    tiny = values < settings.COINCIDENT_DISTANCE
    if tiny.all():
        return ExponentFit.coincident_signal(ladder, values)
    if tiny.any():
        raise DegeneracyError(detail="distance vanishes at some rungs but not all")
    logs, logd = np.log(ladder), np.log(values)
    fit = linregress(logs, logd)
    residuals = logd - (fit.intercept + fit.slope * logs)
    return ExponentFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r2=float(fit.rvalue ** 2),
        ladder=ladder.tolist(),
        values=values.tolist(),
        residuals=residuals.tolist(),
    )


def tangency_order(arc1: Arc, arc2: Arc, ladder: Optional[Sequence[float]] = None) -> ExponentFit:
    """Exponent of the outer distance |arc1(t) - arc2(t)|"""
    if arc1.dimension != arc2.dimension:
        raise InvalidInputError(detail="arcs live in different ambient dimensions")
    ladder = list(ladder if ladder is not None else settings.ladder)
    gaps = np.linalg.norm(arc1.evaluate(ladder) - arc2.evaluate(ladder), axis=1)
    return fit_exponent(ladder, gaps)


# ============= Inner Distance =============

def _column_roots(sheet: ImplicitPlanarSheet, fixed: np.ndarray, scale: float, vertical: bool, samples: int = 256):
    """Roots along lines x = fixed (vertical) or y = fixed, grouped per line"""
    span = np.linspace(-settings.WINDOW_FACTOR * scale, settings.WINDOW_FACTOR * scale, 2 * samples + 1)
    a, b = np.meshgrid(fixed, span, indexing="ij")
    evaluate = sheet.evaluator

    def f(u, v):
        return evaluate(u, v, scale) if vertical else evaluate(v, u, scale)

    values = f(a, b)
    roots: List[List[float]] = [[] for _ in fixed]
    line, position = np.nonzero(values == 0.0)
    for i, j in zip(line, position):
        roots[i].append(float(span[j]))
    line, position = np.nonzero(np.sign(values[:, :-1]) * np.sign(values[:, 1:]) < 0)
    for i, j in zip(line, position):
        u = fixed[i]
        roots[i].append(float(brentq(lambda v: float(f(u, v)), span[j], span[j + 1], xtol=1e-14 * scale)))
    out = []
    slack = 1e-9 * scale
    for i, found in enumerate(roots):
        found = np.sort(np.asarray(found))
        if vertical:
            xs, ys = np.full_like(found, fixed[i]), found
        else:
            xs, ys = found, np.full_like(found, fixed[i])
        keep = np.ones(len(found), dtype=bool)
        for g in sheet.constraint_evaluators:
            keep &= g(xs, ys, scale) >= -slack
        out.append(np.column_stack([xs[keep], ys[keep], np.zeros(keep.sum())]))
    return out


class _MeshBuilder:
    """Graph over sheet samples on rings s = t j / m, the innermost ring joined to the origin"""

    def __init__(self, model: GermModel, scale: float, rings: int, columns: int, extra_columns: Sequence[float]):
        self.model = model
        self.scale = scale
        self.rings = rings
        self.grid = np.linspace(-settings.WINDOW_FACTOR, settings.WINDOW_FACTOR, columns)
        self.columns = np.unique(np.concatenate([self.grid, np.asarray(extra_columns, float)]))
        self.graph = nx.Graph()
        self.positions: Dict[object, np.ndarray] = {"origin": np.zeros(model.dimension)}
        self.graph.add_node("origin")

    def ring_scale(self, ring: int) -> float:
        return self.scale * ring / self.rings

    def _add(self, key: tuple, point: np.ndarray, ring: int):
        self.positions[key] = ambient_points(point[None], self.ring_scale(ring), self.model.dimension)[0]
        self.graph.add_node(key)
        if ring == 1:
            self._link(key, "origin")

    def _link(self, a, b):
        self.graph.add_edge(a, b, weight=float(np.linalg.norm(self.positions[a] - self.positions[b])))

    def add_implicit(self, sheet: ImplicitPlanarSheet):
        for vertical, lines in ((True, self.columns), (False, self.grid)):
            tag = "c" if vertical else "r"
            previous = None
            for ring in range(1, self.rings + 1):
                s = self.ring_scale(ring)
                roots = _column_roots(sheet, lines * s, s, vertical)
                for i, points in enumerate(roots):
                    for k, point in enumerate(points):
                        self._add((sheet.name, tag, i, k, ring), point, ring)
                        if previous is not None and len(previous[i]) == len(points):
                            self._link((sheet.name, tag, i, k, ring), (sheet.name, tag, i, k, ring - 1))
                for a in range(len(lines) - 1):
                    self._join_lines(sheet.name, tag, ring, roots, a, a + 1, s * (lines[a + 1] - lines[a]))
                previous = roots

    def _join_lines(self, name, tag, ring, roots, a, b, spacing):
        """Neighbouring lines: same branch order when counts agree, nearest root otherwise"""
        first, second = roots[a], roots[b]
        if not len(first) or not len(second):
            return
        reach = 4 * max(spacing, 0.1 * self.ring_scale(ring) * (self.grid[1] - self.grid[0]))
        if len(first) == len(second):
            for k in range(len(first)):
                if np.linalg.norm(first[k] - second[k]) <= reach:
                    self._link((name, tag, a, k, ring), (name, tag, b, k, ring))
            return
        tree = cKDTree(second)
        for k, point in enumerate(first):
            gap, j = tree.query(point)
            if gap <= reach / 2:
                self._link((name, tag, a, k, ring), (name, tag, b, int(j), ring))

    def add_parametric(self, sheet: Sheet):
        for ring in range(1, self.rings + 1):
            s = self.ring_scale(ring)
            if isinstance(sheet, HolderTriangle):
                us = np.linspace(-1.0, 1.0, len(self.grid))
                points, closed = sheet.evaluate(us, s), False
                present = np.ones(len(us), dtype=bool)
            else:
                if s > sheet.reach:
                    continue
                points, closed = s * sheet.vertices, sheet.closed
                present = np.ones(len(points), dtype=bool)
                if sheet.horn is not None:
                    _, lengths = polyline_ring(sheet.vertices, sheet.closed)
                    center = sheet.horn.position * lengths[-1]
                    present = np.abs(lengths[: len(points)] - center) > sheet.horn.half_width(s)
            order = np.arange(len(points))
            if closed and not present.all():
                starts = np.flatnonzero(present & ~np.roll(present, 1))
                order = np.roll(order, -int(starts[0]))
            previous_key = None
            for i in order:
                if not present[i]:
                    previous_key = None
                    continue
                key = (sheet.name, "p", int(i), ring)
                self._add(key, points[i], ring)
                if (sheet.name, "p", int(i), ring - 1) in self.positions:
                    self._link(key, (sheet.name, "p", int(i), ring - 1))
                if previous_key is not None:
                    self._link(previous_key, key)
                previous_key = key
            if closed and present.all() and len(points) > 2:
                self._link((sheet.name, "p", int(order[-1]), ring), (sheet.name, "p", int(order[0]), ring))

    def join_sheets(self):
        """Sheets meet only where their samples coincide"""
        by_ring: Dict[int, List[tuple]] = {}
        for key in self.positions:
            if key != "origin":
                by_ring.setdefault(key[-1], []).append(key)
        for ring, keys in by_ring.items():
            points = np.array([self.positions[k] for k in keys])
            for a, b in cKDTree(points).query_pairs(1e-6 * self.ring_scale(ring)):
                if keys[a][0] != keys[b][0]:
                    self._link(keys[a], keys[b])

    def snap(self, point: np.ndarray) -> Tuple[tuple, float]:
        """Nearest top-ring vertex on the sheet closest to the point"""
        top = [k for k in self.positions if k != "origin" and k[-1] == self.rings]
        if not top:
            raise DisconnectedError(detail=f"empty mesh at t={self.scale}", rung=self.scale)
        coords = np.array([self.positions[k] for k in top])
        gaps = np.linalg.norm(coords - point, axis=1)
        host = top[int(np.argmin(gaps))][0]
        mask = np.array([k[0] == host for k in top])
        index = int(np.flatnonzero(mask)[np.argmin(gaps[mask])])
        return top[index], float(gaps[index])


def inner_distance_exponent(
    model: GermModel,
    arc1: Arc,
    arc2: Arc,
    ladder: Optional[Sequence[float]] = None,
    rings: Optional[int] = None,
    columns: Optional[int] = None,
) -> ExponentFit:
    """Exponent of the shortest-path distance inside the germ between two arcs"""
    ladder = list(ladder if ladder is not None else settings.ladder[:7])
    rings = rings or settings.MESH_RINGS
    columns = columns or settings.MESH_COLUMNS
    lengths = []
    for scale in ladder:
        targets = [ambient_points(arc.evaluate([scale]), scale, model.dimension)[0] for arc in (arc1, arc2)]
        extra = [float(p[0]) / scale for p in targets]
        mesh = _MeshBuilder(model, scale, rings, columns, extra)
        for sheet in model.sheets:
            if isinstance(sheet, ImplicitPlanarSheet):
                mesh.add_implicit(sheet)
            else:
                mesh.add_parametric(sheet)
        mesh.join_sheets()
        (node_a, snap_a), (node_b, snap_b) = mesh.snap(targets[0]), mesh.snap(targets[1])
        try:
            path = nx.dijkstra_path_length(mesh.graph, node_a, node_b, weight="weight")
        except nx.NetworkXNoPath:
            raise DisconnectedError(detail=f"arcs {arc1.name} and {arc2.name} are disconnected at t={scale}", rung=scale)
        logger.debug(f"inner distance at t={scale}: {path:.4g} over {mesh.graph.number_of_nodes()} nodes")
        lengths.append(path + snap_a + snap_b)
    return fit_exponent(ladder, lengths)


# ============= Distance to Sheets =============

def _segments_of(sheet: Sheet, scale: float, resolution: int, dimension: int) -> Tuple[np.ndarray, np.ndarray]:
    starts, ends = [], []
    for piece in sheet_pieces(sheet, scale, resolution):
        points = ambient_points(piece.points, scale, dimension)
        if len(points) == 1:
            points = np.vstack([points, points])
        starts.append(points[:-1])
        ends.append(points[1:])
    if not starts:
        return np.zeros((0, dimension)), np.zeros((0, dimension))
    return np.vstack(starts), np.vstack(ends)


def _project_onto(points: np.ndarray, starts: np.ndarray, ends: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Nearest point of a segment soup for each query point"""
    direction = ends - starts
    squared = np.einsum("ij,ij->i", direction, direction)
    span = np.where(squared > 0, squared, 1.0)
    feet = np.empty_like(points)
    for begin in range(0, len(points), chunk):
        block = points[begin:begin + chunk]
        rel = block[:, None, :] - starts[None]
        w = np.clip(np.einsum("ijk,jk->ij", rel, direction) / span, 0.0, 1.0)
        candidates = starts[None] + w[..., None] * direction[None]
        best = np.argmin(np.linalg.norm(block[:, None, :] - candidates, axis=2), axis=1)
        feet[begin:begin + chunk] = candidates[np.arange(len(block)), best]
    return feet


def point_segment_distances(points: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Minimum distance from each point to a set of segments"""
    if not len(starts):
        return np.full(len(points), np.inf)
    return np.linalg.norm(points - _project_onto(points, starts, ends), axis=1)


def _band(scale: float) -> List[float]:
    return sorted({min(1.0, scale * 2.0 ** (j / 4)) for j in range(-4, 5)})


def distances_to_sheet(points: np.ndarray, sheet: Sheet, resolution: Optional[int] = None) -> np.ndarray:
    """distance_to_sheet for many ambient points; the last coordinate is t"""
    resolution = resolution or settings.DEFAULT_RESOLUTION
    points = np.atleast_2d(np.asarray(points, float))
    dimension = points.shape[1]
    out = np.full(len(points), np.inf)
    cache: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}
    for scale in np.unique(points[:, -1]):
        mask = points[:, -1] == scale
        starts, ends = [], []
        for band_scale in _band(float(scale)):
            if band_scale not in cache:
                cache[band_scale] = _segments_of(sheet, band_scale, resolution, dimension)
            starts.append(cache[band_scale][0])
            ends.append(cache[band_scale][1])
        out[mask] = point_segment_distances(points[mask], np.vstack(starts), np.vstack(ends))
    return out


def distance_to_sheet(point, sheet: Sheet, resolution: Optional[int] = None) -> float:
    """Euclidean distance from an ambient point to the sampled band of the sheet around its scale"""
    return float(distances_to_sheet(np.asarray(point, float)[None], sheet, resolution)[0])


# ============= Bi-Lipschitz Distortion =============

@dataclass
class DistortionReport:
    """Per-scale extremes of |f(p) - f(q)| / |p - q|"""
    per_scale: List[Tuple[float, float, float]]
    global_min: float
    global_max: float
    samples: int
    seed: int

    def stability(self, max_scale: Optional[float] = None) -> float:
        """Largest relative spread of the per-scale extremes, over every rung or those <= max_scale"""
        rows = [(lo, hi) for scale, lo, hi in self.per_scale if max_scale is None or scale <= max_scale]
        if len(rows) < 2:
            return 0.0
        lows, highs = np.array(rows).T
        return float(max((lows.max() - lows.min()) / lows.min(), (highs.max() - highs.min()) / highs.min()))

    @property
    def ratio(self) -> float:
        return self.global_max / self.global_min if self.global_min > 0 else float("inf")

    def certified(self, limit: Optional[float] = None, stability: Optional[float] = None) -> bool:
        limit = limit or settings.DISTORTION_LIMIT
        stability = stability if stability is not None else settings.DISTORTION_STABILITY
        return 0 < self.global_min and self.ratio <= limit and self.stability() < stability


def interval_contains(coarse: Sequence[float], fine: Sequence[float]) -> bool:
    """Whether [min, max] of the coarse values is positive and holds every fine value"""
    coarse, fine = np.asarray(coarse, float), np.asarray(fine, float)
    return bool(coarse.min() > 0 and coarse.min() <= fine.min() and fine.max() <= coarse.max())


def _spatial_segments(sheet: Sheet, scale: float, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """Section segments in (x, y, z) at a single scale"""
    starts, ends = [], []
    for piece in sheet_pieces(sheet, scale, resolution):
        points = piece.points if len(piece.points) > 1 else np.vstack([piece.points, piece.points])
        starts.append(points[:-1])
        ends.append(points[1:])
    if not starts:
        raise DegeneracyError(detail=f"sheet {sheet.name} has an empty section at t={scale}")
    return np.vstack(starts), np.vstack(ends)


def _sheet_samples(sheet: Sheet, scale: float, parameters: np.ndarray, reference: Optional[np.ndarray], resolution: int) -> np.ndarray:
    """Points of a sheet at scale t for scale-independent sample parameters"""
    if isinstance(sheet, HolderTriangle):
        return sheet.evaluate(2.0 * parameters - 1.0, scale)
    if isinstance(sheet, ConeSheet) and sheet.horn is None:
        ring, lengths = polyline_ring(sheet.vertices, sheet.closed)
        return scale * point_at_arclength(ring, lengths, parameters * lengths[-1])
    starts, ends = _spatial_segments(sheet, scale, resolution)
    return scale * _project_onto(reference, starts / scale, ends / scale)


def _reference_points(sheet: Sheet, scale: float, parameters: np.ndarray, resolution: int) -> Optional[np.ndarray]:
    """Rescaled points fixing implicit-sheet samples across scales"""
    if isinstance(sheet, HolderTriangle) or (isinstance(sheet, ConeSheet) and sheet.horn is None):
        return None
    pieces = sheet_pieces(sheet, scale, resolution)
    if not pieces:
        raise DegeneracyError(detail=f"sheet {sheet.name} has an empty section at t={scale}")
    chain = np.vstack([p.points for p in pieces]) / scale
    ring, lengths = polyline_ring(chain, False)
    return point_at_arclength(ring, lengths, parameters * lengths[-1])


def certify_bilipschitz(
    plmap: PLMap,
    source: GermModel,
    target: GermModel,
    samples: Optional[int] = None,
    seed: int = 0,
    scales: Optional[Sequence[float]] = None,
    resolution: Optional[int] = None,
) -> DistortionReport:
    """Sampled distortion of a piecewise map over dyadic scales, checking it lands on the target"""
    samples = samples or settings.DISTORTION_SAMPLES
    if samples < settings.DISTORTION_SAMPLES:
        logger.warning(f"{samples} distortion samples is below the {settings.DISTORTION_SAMPLES} the bounds assume")
    resolution = resolution or settings.DEFAULT_RESOLUTION
    scales = list(scales if scales is not None else dyadic_ladder(0, 10))
    plmap.check_cover(source)
    if not source.sheets:
        raise InvalidInputError(detail="source germ has no sheets")

    rng = np.random.default_rng(seed)
    per_sheet = max(64, samples // (4 * len(source.sheets)))
    parameters = {sheet.name: np.sort(rng.random(per_sheet)) for sheet in source.sheets}
    pool = len(source.sheets) * per_sheet
    pairs_per_scale = int(np.ceil(samples / len(scales)))
    first = rng.integers(0, pool, pairs_per_scale)
    second = rng.integers(0, pool, pairs_per_scale)
    smallest = min(scales)
    references = {
        sheet.name: _reference_points(sheet, smallest, parameters[sheet.name], resolution) for sheet in source.sheets
    }
    tolerance = settings.ON_TARGET_TOLERANCE

    per_scale = []
    for scale in scales:
        sources, images = [], []
        for sheet in source.sheets:
            points = _sheet_samples(sheet, scale, parameters[sheet.name], references[sheet.name], resolution)
            piece = plmap.piece_for(sheet.name)
            mapped = piece.apply(points, np.full(len(points), scale))
            starts, ends = _spatial_segments(target.sheet(piece.target), scale, resolution)
            off = point_segment_distances(mapped, starts, ends)
            if np.any(off > tolerance * scale):
                raise NotAMapError(
                    detail=f"image of sheet {sheet.name} leaves {piece.target} by {off.max():.3g} at t={scale}",
                    sheet=sheet.name,
                )
            sources.append(ambient_points(points, scale, source.dimension))
            images.append(ambient_points(mapped, scale, target.dimension))
        sources, images = np.vstack(sources), np.vstack(images)
        before = np.linalg.norm(sources[first] - sources[second], axis=1)
        after = np.linalg.norm(images[first] - images[second], axis=1)
        usable = before > 1e-9 * scale
        ratios = after[usable] / before[usable]
        per_scale.append((float(scale), float(ratios.min()), float(ratios.max())))
        logger.debug(f"distortion at t={scale}: [{ratios.min():.4g}, {ratios.max():.4g}]")

    return DistortionReport(
        per_scale=per_scale,
        global_min=min(row[1] for row in per_scale),
        global_max=max(row[2] for row in per_scale),
        samples=pairs_per_scale * len(scales),
        seed=seed,
    )
