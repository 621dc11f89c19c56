"""
Germ Models
Immutable sheets, arcs, bridges and piece maps that surface germs are assembled from
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from scipy.optimize import brentq

from .config import settings
from .exceptions import DegeneracyError, InvalidInputError

logger = logging.getLogger(__name__)

# Coordinates of the ambient space; z is implicit (0) on planar sheets.
x, y = sp.symbols("x y", real=True)
t = sp.Symbol("t", positive=True)
SYMBOLS = {"x": x, "y": y, "t": t}

Term = Tuple[float, Fraction]
TemplateTerm = Tuple[float, int, Fraction]


class SheetKind(str, Enum):
    """Sheet variants"""
    IMPLICIT = "implicit"
    CONE = "cone"
    HOLDER = "holder"


class ArcKind(str, Enum):
    """Distinguished arc variants"""
    POWER = "power"
    IMPLICIT = "implicit"


# ============= Rationals =============

def as_rational(value) -> Fraction:
    """Exact rational from int, Fraction, sympy Rational, decimal float or "num/den" text"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidInputError(detail=f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, sp.Rational):
        return Fraction(int(value.p), int(value.q))
    try:
        if isinstance(value, float):
            return Fraction(repr(value))
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInputError(detail=f"not a rational: {value!r}") from exc


def format_rational(value: Fraction) -> str:
    value = as_rational(value)
    return f"{value.numerator}/{value.denominator}"


def sympy_rational(value) -> sp.Rational:
    value = as_rational(value)
    return sp.Rational(value.numerator, value.denominator)


# ============= Polynomials =============

def parse_polynomial(expression) -> sp.Expr:
    """Sympy expression in x, y, t from text or an existing expression"""
    if isinstance(expression, sp.Expr):
        return expression
    try:
        return sp.sympify(expression, locals=SYMBOLS, rational=True)
    except (sp.SympifyError, TypeError, SyntaxError) as exc:
        raise InvalidInputError(detail=f"cannot parse polynomial {expression!r}") from exc


def monomial_exponents(term: sp.Expr) -> Tuple[sp.Expr, Tuple[Fraction, Fraction, Fraction]]:
    """Split a monomial into its coefficient and (x, y, t) exponents"""
    coefficient, rest = term.as_coeff_Mul()
    powers = rest.as_powers_dict()
    exponents = []
    for symbol in (x, y, t):
        exponents.append(as_rational(sp.Rational(powers.pop(symbol, 0))))
    leftovers = {base: exp for base, exp in powers.items() if base != 1}
    if leftovers:
        raise InvalidInputError(detail=f"term {term} is not a monomial in x, y, t")
    return coefficient, tuple(exponents)


def term_degree(term: sp.Expr) -> Fraction:
    _, exponents = monomial_exponents(term)
    return sum(exponents, Fraction(0))


def leading_form(expression: sp.Expr) -> sp.Expr:
    """Lowest-degree homogeneous part; degrees may be rational"""
    terms = sp.Add.make_args(sp.expand(expression))
    if not terms or expression == 0:
        return sp.Integer(0)
    degrees = [term_degree(term) for term in terms]
    lowest = min(degrees)
    return sp.Add(*[term for term, degree in zip(terms, degrees) if degree == lowest])


@lru_cache(maxsize=256)
def compile_polynomial(expression: sp.Expr) -> Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]:
    """Vectorized evaluator F(x, y, t) with numpy broadcasting"""
    raw = sp.lambdify((x, y, t), expression, "numpy")

    def evaluate(xs, ys, ts):
        xs, ys, ts = np.broadcast_arrays(np.asarray(xs, float), np.asarray(ys, float), np.asarray(ts, float))
        return np.zeros(xs.shape) + raw(xs, ys, ts)

    return evaluate


# ============= Arcs =============

def _evaluate_terms(terms: Sequence[Term], ts: np.ndarray) -> np.ndarray:
    values = np.zeros_like(ts)
    for coefficient, exponent in terms:
        values = values + coefficient * ts ** float(exponent)
    return values


@dataclass(frozen=True)
class PowerArc:
    """Arc t -> (sum c t^e, ...) per spatial coordinate (x, y, z)"""
    name: str
    terms: Tuple[Tuple[Term, ...], Tuple[Term, ...], Tuple[Term, ...]]
    dimension: int = 3

    kind = ArcKind.POWER

    def __post_init__(self):
        for coordinate in self.terms:
            for _, exponent in coordinate:
                if exponent <= 0:
                    raise InvalidInputError(detail=f"arc {self.name}: exponent {exponent} must be positive")

    def evaluate(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.stack([_evaluate_terms(coordinate, ts) for coordinate in self.terms], axis=1)

    def renamed(self, name: str) -> "PowerArc":
        return replace(self, name=name)


def power_arc(name: str, xs=(), ys=(), zs=(), dimension: int = 3) -> PowerArc:
    """PowerArc from (coefficient, exponent) pairs per coordinate"""
    def normalize(terms):
        return tuple((float(c), as_rational(e)) for c, e in terms)

    return PowerArc(name=name, terms=(normalize(xs), normalize(ys), normalize(zs)), dimension=dimension)


@dataclass(frozen=True)
class ImplicitArc:
    """Arc of {F = 0} over x = c t^mu on the branch whose y has the given sign"""
    name: str
    polynomial: sp.Expr
    coefficient: float
    exponent: Fraction
    branch: int = 1
    dimension: int = 3
    reach: float = 3.0

    kind = ArcKind.IMPLICIT

    def __post_init__(self):
        if self.branch not in (1, -1):
            raise InvalidInputError(detail=f"arc {self.name}: branch must be +1 or -1")
        if self.exponent <= 0:
            raise InvalidInputError(detail=f"arc {self.name}: exponent must be positive")

    def _solve(self, scale: float) -> float:
        evaluate = compile_polynomial(self.polynomial)
        x0 = self.coefficient * scale ** float(self.exponent)
        ys = self.branch * np.linspace(0.0, self.reach * scale, 2049)
        values = evaluate(x0, ys, scale)
        zeros = np.flatnonzero(values == 0.0)
        changes = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
        if zeros.size and (not changes.size or zeros[0] <= changes[0]):
            return float(ys[zeros[0]])
        if not changes.size:
            raise DegeneracyError(detail=f"arc {self.name} has no point at t={scale}")
        j = changes[0]

        def f(value):
            return float(evaluate(x0, value, scale))

        return float(brentq(f, ys[j], ys[j + 1], xtol=1e-14 * scale, rtol=4 * np.finfo(float).eps))

    def evaluate(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.zeros((ts.size, 3))
        out[:, 0] = self.coefficient * ts ** float(self.exponent)
        out[:, 1] = [self._solve(scale) for scale in ts]
        return out

    def renamed(self, name: str) -> "ImplicitArc":
        return replace(self, name=name)


Arc = Union[PowerArc, ImplicitArc]


# ============= Sheets =============

@dataclass(frozen=True)
class ImplicitPlanarSheet:
    """{F(x, y, t) = 0, z = 0} restricted by constraints g(x, y, t) >= 0"""
    name: str
    polynomial: sp.Expr
    constraints: Tuple[sp.Expr, ...]
    dimension: int = 3

    kind = SheetKind.IMPLICIT
    exact = False

    @property
    def evaluator(self):
        return compile_polynomial(self.polynomial)

    @property
    def constraint_evaluators(self):
        return [compile_polynomial(g) for g in self.constraints]

    def margin(self, xs, ys, ts) -> np.ndarray:
        """Smallest constraint value; nonnegative exactly on admissible points"""
        xs = np.asarray(xs, float)
        out = np.full(np.broadcast(xs, np.asarray(ys), np.asarray(ts)).shape, np.inf)
        for g in self.constraint_evaluators:
            out = np.minimum(out, g(xs, ys, ts))
        return out

    def admissible(self, xs, ys, ts) -> np.ndarray:
        """Mask of points satisfying every constraint"""
        return self.margin(xs, ys, ts) >= 0

    def renamed(self, name: str) -> "ImplicitPlanarSheet":
        return replace(self, name=name)


@dataclass(frozen=True)
class HornCut:
    """Window of half-width width * t^(beta-1) (curve units) around an arclength fraction"""
    position: float
    width: float
    beta: Fraction

    def half_width(self, scale: float) -> float:
        return self.width * scale ** (float(self.beta) - 1.0)


def polyline_ring(points: np.ndarray, closed: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Vertices (closed rings repeat the first) and cumulative arclength"""
    ring = np.vstack([points, points[:1]]) if closed else np.asarray(points)
    steps = np.linalg.norm(np.diff(ring, axis=0), axis=1)
    return ring, np.concatenate([[0.0], np.cumsum(steps)])


def point_at_arclength(ring: np.ndarray, lengths: np.ndarray, s) -> np.ndarray:
    s = np.clip(np.atleast_1d(np.asarray(s, float)), 0.0, lengths[-1])
    j = np.clip(np.searchsorted(lengths, s, side="right") - 1, 0, len(ring) - 2)
    span = lengths[j + 1] - lengths[j]
    w = np.where(span > 0, (s - lengths[j]) / np.where(span > 0, span, 1.0), 0.0)
    return ring[j] + w[:, None] * (ring[j + 1] - ring[j])


def slice_polyline(ring: np.ndarray, lengths: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Sub-polyline between arclengths lo < hi with interpolated ends"""
    inner = ring[(lengths > lo) & (lengths < hi)]
    ends = point_at_arclength(ring, lengths, [lo, hi])
    return np.vstack([ends[:1], inner, ends[1:]])


@dataclass(frozen=True)
class ConeSheet:
    """Straight cone {t v : v in C} over a polygonal curve C drawn in {t = 1}"""
    name: str
    curve: Tuple[Tuple[float, float, float], ...]
    closed: bool
    pinched: bool = False
    reach: float = 1.0
    dimension: int = 3
    horn: Optional[HornCut] = None

    kind = SheetKind.CONE
    exact = True

    @property
    def vertices(self) -> np.ndarray:
        return np.asarray(self.curve, dtype=float)

    def section(self, scale: float) -> List[Tuple[np.ndarray, bool]]:
        if scale > self.reach:
            return []
        if self.horn is None:
            return [(scale * self.vertices, self.closed)]
        ring, lengths = polyline_ring(self.vertices, self.closed)
        total = lengths[-1]
        center = self.horn.position * total
        half = self.horn.half_width(scale)
        lo, hi = center - half, center + half
        if self.closed:
            if hi - lo >= total:
                return []
            doubled = np.vstack([ring, ring[1:]])
            doubled_lengths = np.concatenate([lengths, total + lengths[1:]])
            piece = slice_polyline(doubled, doubled_lengths, hi, lo + total)
            return [(scale * piece, False)]
        pieces = []
        if lo > 0:
            pieces.append(slice_polyline(ring, lengths, 0.0, lo))
        if hi < total:
            pieces.append(slice_polyline(ring, lengths, hi, total))
        return [(scale * piece, False) for piece in pieces]

    def renamed(self, name: str) -> "ConeSheet":
        return replace(self, name=name)


@dataclass(frozen=True)
class HolderTriangle:
    """Parametrized triangle (u, t) -> coordinates, each a sum of c u^a t^e; sign 0 marks a bridge wall"""
    name: str
    template: Tuple[Tuple[TemplateTerm, ...], Tuple[TemplateTerm, ...], Tuple[TemplateTerm, ...]]
    beta: Fraction
    q: Fraction
    sign: int
    dimension: int = 4

    kind = SheetKind.HOLDER
    exact = True

    def evaluate(self, us, scale: float) -> np.ndarray:
        us = np.atleast_1d(np.asarray(us, float))
        columns = []
        for coordinate in self.template:
            values = np.zeros_like(us)
            for coefficient, u_power, exponent in coordinate:
                values = values + coefficient * us ** u_power * scale ** float(exponent)
            columns.append(values)
        return np.stack(columns, axis=1)

    def section(self, scale: float, resolution: int) -> List[Tuple[np.ndarray, bool]]:
        us = np.linspace(-1.0, 1.0, resolution + 1)
        return [(self.evaluate(us, scale), False)]

    def renamed(self, name: str) -> "HolderTriangle":
        return replace(self, name=name)


Sheet = Union[ImplicitPlanarSheet, ConeSheet, HolderTriangle]


# ============= Bridges and Germs =============

@dataclass(frozen=True)
class BridgeSpec:
    """Designated (q, beta)-bridge: two sheets tangent with exponent q, cut at x = +-t^p"""
    name: str
    q: Fraction
    beta: Fraction
    p: Fraction
    plus_sheet: str
    minus_sheet: str
    boundary_arcs: Tuple[str, ...]
    broken: bool = False
    wall_sheets: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.beta < self.p < self.q:
            raise InvalidInputError(
                detail=f"bridge {self.name}: need beta < p < q, got {self.beta}, {self.p}, {self.q}"
            )


@dataclass(frozen=True)
class GermModel:
    """A surface germ at the origin as a union of named sheets"""
    dimension: int
    sheets: Tuple[Sheet, ...] = ()
    arcs: Tuple[Arc, ...] = ()
    bridges: Tuple[BridgeSpec, ...] = ()
    metadata: Dict[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.dimension not in (3, 4):
            raise InvalidInputError(detail=f"ambient dimension must be 3 or 4, got {self.dimension}")

    @property
    def sheet_names(self) -> List[str]:
        return [sheet.name for sheet in self.sheets]

    def sheet(self, name: str) -> Sheet:
        for sheet in self.sheets:
            if sheet.name == name:
                return sheet
        raise InvalidInputError(detail=f"no sheet named {name!r}")

    def arc(self, name: str) -> Arc:
        for arc in self.arcs:
            if arc.name == name:
                return arc
        raise InvalidInputError(detail=f"no arc named {name!r}")

    def bridge(self, name: Optional[str] = None) -> BridgeSpec:
        for bridge in self.bridges:
            if name is None or bridge.name == name:
                return bridge
        raise InvalidInputError(detail=f"no bridge named {name!r}" if name else "model carries no bridge")

    def with_parts(self, **changes) -> "GermModel":
        if "metadata" not in changes:
            changes["metadata"] = dict(self.metadata)
        return replace(self, **changes)


def ambient_points(points: np.ndarray, scale, dimension: int) -> np.ndarray:
    """Spatial (x, y, z) points at scale t as ambient coordinates"""
    points = np.asarray(points, float)
    ts = np.broadcast_to(np.asarray(scale, float), (len(points),))
    if dimension == 3:
        return np.column_stack([points[:, 0], points[:, 1], ts])
    return np.column_stack([points, ts])


def circle_polygon(center, radius: float, vertices: Optional[int] = None, start_angle: float = 0.0) -> np.ndarray:
    """Regular polygon inscribed in a circle of the z = 0 plane"""
    count = vertices or settings.POLYGON_VERTICES
    angles = start_angle + 2 * np.pi * np.arange(count) / count
    cx, cy = center[0], center[1]
    return np.column_stack([cx + radius * np.cos(angles), cy + radius * np.sin(angles), np.zeros(count)])


def _as_spatial(curve) -> np.ndarray:
    points = np.asarray(curve, dtype=float)
    if points.ndim != 2 or points.shape[1] not in (2, 3):
        raise InvalidInputError(detail="curve must be a list of 2D or 3D vertices")
    if points.shape[1] == 2:
        points = np.column_stack([points, np.zeros(len(points))])
    return points


# ============= Constructors =============

def make_cone_sheet(
    curve,
    name: str = "cone",
    closed: Optional[bool] = None,
    pinched: bool = False,
    reach: float = 1.0,
    dimension: int = 3,
) -> ConeSheet:
    """Cone over a curve in {t = 1}; a repeated first vertex marks a closed curve"""
    points = _as_spatial(curve) if len(curve) else np.zeros((0, 3))
    if len(points) and np.allclose(points[0], points[-1]) and len(points) > 2:
        points = points[:-1]
        closed = True if closed is None else closed
    if len(points) < 2:
        raise InvalidInputError(detail=f"cone {name}: curve needs at least 2 vertices, got {len(points)}")
    return ConeSheet(
        name=name,
        curve=tuple(tuple(float(c) for c in p) for p in points),
        closed=bool(closed),
        pinched=pinched,
        reach=reach,
        dimension=dimension,
    )


def make_implicit_sheet(
    polynomial,
    constraints: Optional[Sequence] = None,
    name: str = "implicit",
    dimension: int = 3,
) -> ImplicitPlanarSheet:
    """Planar implicit sheet; constraints are expressions g meaning g >= 0"""
    expression = parse_polynomial(polynomial)
    if sp.expand(expression) == 0:
        raise InvalidInputError(detail=f"sheet {name}: polynomial is identically zero")
    if constraints is None:
        constraints = [t, 1 - t]
    return ImplicitPlanarSheet(
        name=name,
        polynomial=expression,
        constraints=tuple(parse_polynomial(g) for g in constraints),
        dimension=dimension,
    )


def make_template_sheet(name: str, xs=(), ys=(), zs=(), beta=1, q=2, sign: int = 1, dimension: int = 4) -> HolderTriangle:
    """Holder-type sheet from explicit (coefficient, u power, t exponent) terms"""
    def normalize(terms):
        return tuple((float(c), int(a), as_rational(e)) for c, a, e in terms)

    return HolderTriangle(
        name=name,
        template=(normalize(xs), normalize(ys), normalize(zs)),
        beta=as_rational(beta),
        q=as_rational(q),
        sign=sign,
        dimension=dimension,
    )


def make_holder_triangle(beta, q, sign: int, name: Optional[str] = None, dimension: int = 4) -> HolderTriangle:
    """Triangle with section {-t^beta <= x <= t^beta, y = sign t^q, z = 0}"""
    beta, q = as_rational(beta), as_rational(q)
    if sign not in (1, -1):
        raise InvalidInputError(detail=f"sign must be +1 or -1, got {sign}")
    if beta < 1:
        raise InvalidInputError(detail=f"Holder exponent beta={beta} must be at least 1")
    if beta >= q:
        raise InvalidInputError(detail=f"beta < q required, got beta={beta}, q={q}")
    return make_template_sheet(
        name or ("T+" if sign > 0 else "T-"),
        xs=[(1.0, 1, beta)],
        ys=[(float(sign), 0, q)],
        beta=beta,
        q=q,
        sign=sign,
        dimension=dimension,
    )


def _free_name(name: str, taken: set) -> str:
    if name not in taken:
        return name
    suffix = 2
    while f"{name}~{suffix}" in taken:
        suffix += 1
    return f"{name}~{suffix}"


def union(*parts: Union[GermModel, Sheet], dimension: Optional[int] = None) -> GermModel:
    """Union of models and sheets; colliding names get a ~n suffix"""
    dims = {part.dimension for part in parts}
    if dimension is not None:
        dims.add(dimension)
    if len(dims) > 1:
        raise InvalidInputError(detail=f"ambient dimension mismatch: {sorted(dims)}")
    if not dims:
        raise InvalidInputError(detail="union of nothing needs an explicit dimension")

    sheets, arcs, bridges, metadata = [], [], [], {}
    sheet_names, arc_names = set(), set()
    for part in parts:
        model = part if isinstance(part, GermModel) else GermModel(dimension=part.dimension, sheets=(part,))
        renames = {}
        for sheet in model.sheets:
            fresh = _free_name(sheet.name, sheet_names)
            renames[sheet.name] = fresh
            sheet_names.add(fresh)
            sheets.append(sheet if fresh == sheet.name else sheet.renamed(fresh))
        arc_renames = {}
        for arc in model.arcs:
            fresh = _free_name(arc.name, arc_names)
            arc_renames[arc.name] = fresh
            arc_names.add(fresh)
            arcs.append(arc if fresh == arc.name else arc.renamed(fresh))
        for bridge in model.bridges:
            bridges.append(replace(
                bridge,
                plus_sheet=renames.get(bridge.plus_sheet, bridge.plus_sheet),
                minus_sheet=renames.get(bridge.minus_sheet, bridge.minus_sheet),
                boundary_arcs=tuple(arc_renames.get(a, a) for a in bridge.boundary_arcs),
                wall_sheets=tuple(renames.get(w, w) for w in bridge.wall_sheets),
            ))
        metadata.update(model.metadata)
    return GermModel(dimension=dims.pop(), sheets=tuple(sheets), arcs=tuple(arcs), bridges=tuple(bridges), metadata=metadata)


# ============= Validation =============

@dataclass(frozen=True)
class Diagnostic:
    """One invariant violation (severity "error") or anomaly ("warning")"""
    sheet: str
    severity: str
    message: str


def _t_bounds(sheet: ImplicitPlanarSheet) -> Tuple[bool, bool]:
    lower = upper = False
    for g in sheet.constraints:
        if g.free_symbols - {t}:
            continue
        evaluate = compile_polynomial(g)
        at = lambda value: float(evaluate(0.0, 0.0, value))
        upper |= at(1.0) >= 0 > at(1.0 + 1e-6)
        lower |= at(0.0) >= 0 > at(-1e-6)
    return lower, upper


def _validate_sheet(sheet: Sheet, dimension: int) -> List[Diagnostic]:
    found = []

    def report(severity, message):
        found.append(Diagnostic(sheet=sheet.name, severity=severity, message=message))

    if sheet.dimension != dimension:
        report("error", f"sheet dimension {sheet.dimension} differs from model dimension {dimension}")

    if isinstance(sheet, ImplicitPlanarSheet):
        if sp.expand(sheet.polynomial) == 0:
            report("error", "polynomial is identically zero")
        lower, upper = _t_bounds(sheet)
        if not lower:
            report("error", "constraints lack the bound t >= 0")
        if not upper:
            report("error", "constraints lack the bound t <= 1")
        if sp.expand(sheet.polynomial).subs({x: 0, y: 0, t: 0}) != 0:
            report("error", "closure does not contain the origin")
    elif isinstance(sheet, ConeSheet):
        vertices = sheet.vertices
        if len(vertices) < 2:
            report("error", "cone curve has fewer than 2 vertices")
        if not sheet.pinched and np.any(np.linalg.norm(vertices, axis=1) < 1e-12):
            report("error", "cone curve passes through the axis point without the pinched flag")
        if sheet.reach < 1.0:
            report("warning", f"cone stops at t={sheet.reach} and does not reach germ t-range (0, 1]")
        if sheet.horn is not None and sheet.horn.beta <= 1:
            report("error", "horn cut exponent must exceed 1")
    elif isinstance(sheet, HolderTriangle):
        if sheet.beta < 1:
            report("error", "beta >= 1 required")
        if sheet.sign not in (1, 0, -1):
            report("error", "sign must be +1, -1 or 0 for a wall")
        elif sheet.sign and sheet.beta >= sheet.q:
            report("error", "β < q required")
        for coordinate in sheet.template:
            for _, _, exponent in coordinate:
                if exponent <= 0:
                    report("error", f"template exponent {exponent} keeps the closure away from the origin")
    return found


def validate(model: GermModel) -> List[Diagnostic]:
    """Per-sheet and model-level diagnostics; empty iff well-formed"""
    found: List[Diagnostic] = []
    names = model.sheet_names
    for name in sorted({n for n in names if names.count(n) > 1}):
        found.append(Diagnostic(sheet=name, severity="error", message="duplicate sheet name"))
    for sheet in model.sheets:
        found.extend(_validate_sheet(sheet, model.dimension))
    arc_names = {arc.name for arc in model.arcs}
    for bridge in model.bridges:
        for ref in (bridge.plus_sheet, bridge.minus_sheet) + bridge.wall_sheets:
            if ref not in names:
                found.append(Diagnostic(sheet=ref, severity="error", message=f"bridge {bridge.name} references a missing sheet"))
        for ref in bridge.boundary_arcs:
            if ref not in arc_names:
                found.append(Diagnostic(sheet=bridge.name, severity="error", message=f"boundary arc {ref} is missing"))
    for arc in model.arcs:
        if arc.dimension != model.dimension:
            found.append(Diagnostic(sheet=arc.name, severity="error", message="arc dimension differs from model"))
    return found


# ============= Piecewise Maps =============

@dataclass(frozen=True)
class AffinePiece:
    """(x, y, z) -> M (x, y, z) + t s on one sheet"""
    source: str
    target: str
    matrix: Tuple[Tuple[float, float, float], ...] = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    t_shift: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def apply(self, points: np.ndarray, scales: np.ndarray) -> np.ndarray:
        matrix = np.asarray(self.matrix, float)
        return points @ matrix.T + np.asarray(scales, float)[:, None] * np.asarray(self.t_shift, float)


@dataclass(frozen=True)
class ConicalPiece:
    """Arclength-proportional correspondence of two link curves, coned over t"""
    source: str
    target: str
    source_curve: Tuple[Tuple[float, float, float], ...]
    target_curve: Tuple[Tuple[float, float, float], ...]
    closed: bool = False

    def fractions(self, points: np.ndarray, scales: np.ndarray) -> np.ndarray:
        """Arclength fraction of the nearest source-curve point to p / t"""
        ring, lengths = polyline_ring(np.asarray(self.source_curve, float), self.closed)
        starts, ends = ring[:-1], ring[1:]
        direction = ends - starts
        span = np.einsum("ij,ij->i", direction, direction)
        unit = np.asarray(points, float) / np.asarray(scales, float)[:, None]
        out = np.empty(len(unit))
        for lo in range(0, len(unit), 2048):
            chunk = unit[lo:lo + 2048]
            rel = chunk[:, None, :] - starts[None, :, :]
            w = np.clip(np.einsum("ijk,jk->ij", rel, direction) / np.where(span > 0, span, 1.0), 0.0, 1.0)
            gaps = np.linalg.norm(rel - w[..., None] * direction[None], axis=2)
            best = np.argmin(gaps, axis=1)
            arclength = lengths[best] + w[np.arange(len(chunk)), best] * np.sqrt(span[best])
            out[lo:lo + 2048] = arclength / lengths[-1]
        return out

    def at_fractions(self, fractions: np.ndarray, scales: np.ndarray, target: bool = True) -> np.ndarray:
        curve = self.target_curve if target else self.source_curve
        ring, lengths = polyline_ring(np.asarray(curve, float), self.closed)
        return point_at_arclength(ring, lengths, fractions * lengths[-1]) * np.asarray(scales, float)[:, None]

    def apply(self, points: np.ndarray, scales: np.ndarray) -> np.ndarray:
        return self.at_fractions(self.fractions(points, scales), scales)


MapPiece = Union[AffinePiece, ConicalPiece]


@dataclass(frozen=True)
class PLMap:
    """Piecewise map between germs, one piece per source sheet"""
    pieces: Tuple[MapPiece, ...]

    def piece_for(self, source: str) -> MapPiece:
        for piece in self.pieces:
            if piece.source == source:
                return piece
        raise InvalidInputError(detail=f"map has no piece for sheet {source!r}")

    def check_cover(self, source: GermModel) -> None:
        counts = {name: 0 for name in source.sheet_names}
        for piece in self.pieces:
            if piece.source not in counts:
                raise InvalidInputError(detail=f"map piece for unknown sheet {piece.source!r}")
            counts[piece.source] += 1
        bad = [name for name, count in counts.items() if count != 1]
        if bad:
            raise InvalidInputError(detail=f"sheets not covered exactly once: {', '.join(bad)}")


def identity_map(model: GermModel) -> PLMap:
    return PLMap(pieces=tuple(AffinePiece(source=name, target=name) for name in model.sheet_names))
