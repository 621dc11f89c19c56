"""
Model and Report Storage
Reads and writes germ models, links and reports as deterministic files
"""
import csv
import io
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import sympy as sp
from pydantic import BaseModel, ValidationError

from .exceptions import InvalidInputError
from .knots import Crossing, LinkDiagram
from .metrics import DistortionReport
from .models import (
    ArcKind,
    BridgeSpec,
    ConeSheet,
    GermModel,
    HolderTriangle,
    HornCut,
    ImplicitArc,
    ImplicitPlanarSheet,
    PowerArc,
    SheetKind,
    as_rational,
    format_rational,
    monomial_exponents,
    sympy_rational,
    t,
    x,
    y,
)
from .schemas import (
    ArcRecord,
    BridgeRecord,
    ComponentRecord,
    ConePayload,
    CrossingRecord,
    DiagramFile,
    DistortionReportFile,
    DistortionScaleRecord,
    GermModelFile,
    HolderPayload,
    HornPayload,
    ImplicitPayload,
    LinkFile,
    SheetRecord,
    TemplateTermPayload,
    TermPayload,
)
from .sectioning import PolyLink

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# ============= Polynomials as Coefficient Maps =============

def polynomial_to_map(expression: sp.Expr) -> Dict[str, str]:
    """{"i,j,k": "num/den"} for the monomials c x^i y^j t^k of the expanded polynomial"""
    mapping: Dict[str, Fraction] = {}
    for term in sp.Add.make_args(sp.expand(expression)):
        if term == 0:
            continue
        coefficient, exponents = monomial_exponents(term)
        key = ",".join(str(e) for e in exponents)
        mapping[key] = mapping.get(key, Fraction(0)) + as_rational(coefficient)
    return {key: format_rational(value) for key, value in sorted(mapping.items()) if value != 0}


def polynomial_from_map(mapping: Dict[str, str]) -> sp.Expr:
    total = sp.Integer(0)
    for key, coefficient in mapping.items():
        i, j, k = (sympy_rational(part) for part in key.split(","))
        total += sympy_rational(coefficient) * x ** i * y ** j * t ** k
    return total


# ============= Germ Models =============

def _sheet_record(sheet) -> SheetRecord:
    if isinstance(sheet, ImplicitPlanarSheet):
        payload = ImplicitPayload(
            polynomial=polynomial_to_map(sheet.polynomial),
            constraints=[polynomial_to_map(g) for g in sheet.constraints],
        )
    elif isinstance(sheet, ConeSheet):
        horn = None
        if sheet.horn is not None:
            horn = HornPayload(position=sheet.horn.position, width=sheet.horn.width, beta=format_rational(sheet.horn.beta))
        payload = ConePayload(
            vertices=[list(v) for v in sheet.curve],
            closed=sheet.closed,
            pinched=sheet.pinched,
            reach=sheet.reach,
            horn=horn,
        )
    else:
        payload = HolderPayload(
            beta=format_rational(sheet.beta),
            q=format_rational(sheet.q),
            sign=sheet.sign,
            template=[
                [TemplateTermPayload(coefficient=c, u_power=a, exponent=format_rational(e)) for c, a, e in coordinate]
                for coordinate in sheet.template
            ],
        )
    return SheetRecord(name=sheet.name, kind=sheet.kind, payload=payload)


def _arc_record(arc) -> ArcRecord:
    if isinstance(arc, PowerArc):
        return ArcRecord(
            name=arc.name,
            kind=ArcKind.POWER,
            terms=[[TermPayload(coefficient=c, exponent=format_rational(e)) for c, e in coordinate] for coordinate in arc.terms],
        )
    return ArcRecord(
        name=arc.name,
        kind=ArcKind.IMPLICIT,
        polynomial=polynomial_to_map(arc.polynomial),
        coefficient=arc.coefficient,
        exponent=format_rational(arc.exponent),
        branch=arc.branch,
    )


def model_to_file(model: GermModel) -> GermModelFile:
    return GermModelFile(
        dimension=model.dimension,
        sheets=[_sheet_record(sheet) for sheet in model.sheets],
        arcs=[_arc_record(arc) for arc in model.arcs],
        bridges=[
            BridgeRecord(
                name=b.name,
                q=format_rational(b.q),
                beta=format_rational(b.beta),
                p=format_rational(b.p),
                plus_sheet=b.plus_sheet,
                minus_sheet=b.minus_sheet,
                boundary_arcs=list(b.boundary_arcs),
                broken=b.broken,
                wall_sheets=list(b.wall_sheets),
            )
            for b in model.bridges
        ],
        metadata=dict(model.metadata),
    )


def _sheet_from_record(record: SheetRecord, dimension: int):
    payload = record.payload
    if record.kind == SheetKind.IMPLICIT:
        return ImplicitPlanarSheet(
            name=record.name,
            polynomial=polynomial_from_map(payload.polynomial),
            constraints=tuple(polynomial_from_map(g) for g in payload.constraints),
            dimension=dimension,
        )
    if record.kind == SheetKind.CONE:
        horn = None
        if payload.horn is not None:
            horn = HornCut(position=payload.horn.position, width=payload.horn.width, beta=as_rational(payload.horn.beta))
        return ConeSheet(
            name=record.name,
            curve=tuple(tuple(float(c) for c in v) for v in payload.vertices),
            closed=payload.closed,
            pinched=payload.pinched,
            reach=payload.reach,
            dimension=dimension,
            horn=horn,
        )
    return HolderTriangle(
        name=record.name,
        template=tuple(
            tuple((term.coefficient, term.u_power, as_rational(term.exponent)) for term in coordinate)
            for coordinate in payload.template
        ),
        beta=as_rational(payload.beta),
        q=as_rational(payload.q),
        sign=payload.sign,
        dimension=dimension,
    )


def _arc_from_record(record: ArcRecord, dimension: int):
    if record.kind == ArcKind.POWER:
        return PowerArc(
            name=record.name,
            terms=tuple(
                tuple((term.coefficient, as_rational(term.exponent)) for term in coordinate) for coordinate in record.terms
            ),
            dimension=dimension,
        )
    return ImplicitArc(
        name=record.name,
        polynomial=polynomial_from_map(record.polynomial),
        coefficient=record.coefficient,
        exponent=as_rational(record.exponent),
        branch=record.branch,
        dimension=dimension,
    )


def model_from_file(document: GermModelFile) -> GermModel:
    dimension = document.dimension
    return GermModel(
        dimension=dimension,
        sheets=tuple(_sheet_from_record(record, dimension) for record in document.sheets),
        arcs=tuple(_arc_from_record(record, dimension) for record in document.arcs),
        bridges=tuple(
            BridgeSpec(
                name=b.name,
                q=as_rational(b.q),
                beta=as_rational(b.beta),
                p=as_rational(b.p),
                plus_sheet=b.plus_sheet,
                minus_sheet=b.minus_sheet,
                boundary_arcs=tuple(b.boundary_arcs),
                broken=b.broken,
                wall_sheets=tuple(b.wall_sheets),
            )
            for b in document.bridges
        ),
        metadata=dict(document.metadata),
    )


def _read_document(path: PathLike, schema, what: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return schema.model_validate(json.load(handle))
    except OSError as exc:
        raise InvalidInputError(detail=f"cannot read {what} file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(detail=f"{what} file {path} is not valid JSON: {exc}") from exc
    except ValidationError as exc:
        raise InvalidInputError(detail=f"{what} file {path} is malformed: {exc.errors()[0]['msg']}") from exc


def load_model(path: PathLike) -> GermModel:
    """Read and validate a germ model file"""
    document = _read_document(path, GermModelFile, "model")
    logger.debug(f"loaded model {path} with {len(document.sheets)} sheets")
    return model_from_file(document)


# ============= Diagrams and Distortion Reports =============

def diagram_to_file(diagram: LinkDiagram) -> DiagramFile:
    return DiagramFile(
        direction=[float(c) for c in diagram.direction],
        components=[np.asarray(polygon, float).tolist() for polygon in diagram.components],
        crossings=[
            CrossingRecord(
                over=[float(v) for v in crossing.over],
                under=[float(v) for v in crossing.under],
                sign=crossing.sign,
                position=[float(v) for v in crossing.position],
            )
            for crossing in diagram.crossings
        ],
        gauss_code=diagram.gauss_code(),
    )


def _strand(values: List[float]):
    return int(values[0]), int(values[1]), float(values[2])


def diagram_from_file(document: DiagramFile) -> LinkDiagram:
    diagram = LinkDiagram(
        direction=tuple(document.direction),
        components=[np.asarray(polygon, float) for polygon in document.components],
        crossings=[
            Crossing(over=_strand(c.over), under=_strand(c.under), sign=c.sign, position=tuple(c.position))
            for c in document.crossings
        ],
    )
    if document.gauss_code and diagram.gauss_code() != document.gauss_code:
        raise InvalidInputError(detail="diagram Gauss code does not match its crossings")
    return diagram


def save_diagram(diagram: LinkDiagram, path: Optional[PathLike] = None) -> None:
    write_text(dumps(diagram_to_file(diagram)), path)


def load_diagram(path: PathLike) -> LinkDiagram:
    return diagram_from_file(_read_document(path, DiagramFile, "diagram"))


def distortion_to_file(report: DistortionReport, label: str = "") -> DistortionReportFile:
    return DistortionReportFile(
        label=label,
        seed=report.seed,
        samples=report.samples,
        global_min=report.global_min,
        global_max=report.global_max,
        per_scale=[DistortionScaleRecord(t=scale, min=lo, max=hi) for scale, lo, hi in report.per_scale],
    )


def distortion_from_file(document: DistortionReportFile) -> DistortionReport:
    return DistortionReport(
        per_scale=[(row.t, row.min, row.max) for row in document.per_scale],
        global_min=document.global_min,
        global_max=document.global_max,
        samples=document.samples,
        seed=document.seed,
    )


def load_distortion(path: PathLike) -> DistortionReport:
    return distortion_from_file(_read_document(path, DistortionReportFile, "distortion report"))


def labelled_path(path: PathLike, label: str) -> Path:
    """<stem>.<label><suffix> next to path"""
    path = Path(path)
    return path.with_name(f"{path.stem}.{label}{path.suffix or '.json'}")


# ============= Writers =============

def dumps(document: BaseModel) -> str:
    """Byte-stable JSON: sorted keys, two-space indent, trailing newline"""
    return json.dumps(document.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def write_text(text: str, path: Optional[PathLike] = None) -> None:
    """Write to a file, or to stdout when no path is given"""
    if path is None:
        print(text, end="")
        return
    Path(path).write_text(text, encoding="utf-8")
    logger.info(f"wrote {path}")


def save_model(model: GermModel, path: Optional[PathLike] = None) -> None:
    write_text(dumps(model_to_file(model)), path)


def link_to_file(link: PolyLink) -> LinkFile:
    return LinkFile(
        t=link.t,
        dimension=link.dimension,
        components=[
            ComponentRecord(
                closed=c.closed,
                pinched=c.pinched,
                sheets=list(c.sheets),
                points=np.asarray(c.points, float).tolist(),
            )
            for c in link.components
        ],
    )


def link_to_obj(link: PolyLink) -> str:
    """Wavefront OBJ: one polyline element per component"""
    lines = [f"# link section at t={link.t!r}"]
    offset = 1
    polylines: List[str] = []
    for component in link.components:
        points = np.asarray(component.points, float)
        lines.extend(f"v {p[0]!r} {p[1]!r} {p[2]!r}" for p in points)
        polylines.append("l " + " ".join(str(offset + i) for i in range(len(points))))
        offset += len(points)
    return "\n".join(lines + polylines) + "\n"


def link_to_csv(link: PolyLink) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["component", "index", "x", "y", "z", "closed"])
    for number, component in enumerate(link.components):
        for index, p in enumerate(np.asarray(component.points, float)):
            writer.writerow([number, index, repr(p[0]), repr(p[1]), repr(p[2]), int(component.closed)])
    return buffer.getvalue()


LINK_FORMATS = {
    "json": lambda link: dumps(link_to_file(link)),
    "obj": link_to_obj,
    "csv": link_to_csv,
}


def save_link(link: PolyLink, path: Optional[PathLike] = None, fmt: str = "json") -> None:
    if fmt not in LINK_FORMATS:
        raise InvalidInputError(detail=f"unknown link format {fmt!r}; choose from {', '.join(LINK_FORMATS)}")
    write_text(LINK_FORMATS[fmt](link), path)


def save_distortion(report: DistortionReport, path: Optional[PathLike] = None, label: str = "") -> None:
    write_text(dumps(distortion_to_file(report, label)), path)
