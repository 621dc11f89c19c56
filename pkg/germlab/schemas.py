"""
Pydantic Validation Schemas
File formats for germ models, links, diagrams and reports
"""
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from .models import ArcKind, SheetKind

SCHEMA_VERSION = 1


def _rational_text(value: Any) -> str:
    """Canonical "num/den" text of an exact rational"""
    text = str(value).strip()
    try:
        fraction = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"'{value}' is not an exact rational")
    return f"{fraction.numerator}/{fraction.denominator}"


# ============= Germ Model Schemas =============

class TermPayload(BaseModel):
    """coefficient * t^exponent"""
    coefficient: float
    exponent: str

    @field_validator("exponent", mode="before")
    @classmethod
    def validate_exponent(cls, v):
        v = _rational_text(v)
        if Fraction(v) <= 0:
            raise ValueError("arc exponents must be positive")
        return v


class TemplateTermPayload(BaseModel):
    """coefficient * u^u_power * t^exponent"""
    coefficient: float
    u_power: int = Field(..., ge=0)
    exponent: str

    @field_validator("exponent", mode="before")
    @classmethod
    def validate_exponent(cls, v):
        return _rational_text(v)


def _check_coefficient_map(mapping: Dict[str, str]) -> Dict[str, str]:
    cleaned = {}
    for key, coefficient in mapping.items():
        parts = [p.strip() for p in str(key).split(",")]
        if len(parts) != 3:
            raise ValueError(f"monomial key '{key}' must be an exponent triple 'i,j,k'")
        exponents = [_rational_text(p) for p in parts]
        if any(Fraction(e) < 0 for e in exponents):
            raise ValueError(f"monomial key '{key}' has a negative exponent")
        canonical = ",".join(str(Fraction(e)) for e in exponents)
        cleaned[canonical] = _rational_text(coefficient)
    return cleaned


class ImplicitPayload(BaseModel):
    """F and constraints g >= 0 as coefficient maps over exponents of (x, y, t)"""
    polynomial: Dict[str, str]
    constraints: List[Dict[str, str]] = Field(default_factory=list)

    @field_validator("polynomial")
    @classmethod
    def validate_polynomial(cls, v):
        v = _check_coefficient_map(v)
        if not any(Fraction(c) != 0 for c in v.values()):
            raise ValueError("polynomial is identically zero")
        return v

    @field_validator("constraints")
    @classmethod
    def validate_constraints(cls, v):
        return [_check_coefficient_map(g) for g in v]


class HornPayload(BaseModel):
    position: float = Field(..., gt=0, lt=1)
    width: float = Field(..., gt=0)
    beta: str

    @field_validator("beta", mode="before")
    @classmethod
    def validate_beta(cls, v):
        v = _rational_text(v)
        if Fraction(v) <= 1:
            raise ValueError("horn exponent must exceed 1")
        return v


class ConePayload(BaseModel):
    vertices: List[List[float]]
    closed: bool
    pinched: bool = False
    reach: float = Field(1.0, gt=0, le=1)
    horn: Optional[HornPayload] = None

    @field_validator("vertices")
    @classmethod
    def validate_vertices(cls, v):
        if len(v) < 2:
            raise ValueError("cone curve needs at least 2 vertices")
        if any(len(p) != 3 for p in v):
            raise ValueError("cone vertices must be (x, y, z) triples")
        return v


class HolderPayload(BaseModel):
    beta: str
    q: str
    sign: int
    template: List[List[TemplateTermPayload]]

    @field_validator("beta", "q", mode="before")
    @classmethod
    def validate_exponents(cls, v):
        return _rational_text(v)

    @field_validator("sign")
    @classmethod
    def validate_sign(cls, v):
        if v not in (1, 0, -1):
            raise ValueError("sign must be +1, -1 or 0 for a wall")
        return v

    @field_validator("template")
    @classmethod
    def validate_template(cls, v):
        if len(v) != 3:
            raise ValueError("template needs term lists for x, y and z")
        return v


PAYLOADS = {
    SheetKind.IMPLICIT: ImplicitPayload,
    SheetKind.CONE: ConePayload,
    SheetKind.HOLDER: HolderPayload,
}


class SheetRecord(BaseModel):
    name: str = Field(..., min_length=1)
    kind: SheetKind
    payload: Union[ImplicitPayload, ConePayload, HolderPayload]

    @model_validator(mode="before")
    @classmethod
    def select_payload(cls, data):
        if isinstance(data, dict) and isinstance(data.get("payload"), dict):
            try:
                kind = SheetKind(data.get("kind"))
            except ValueError:
                raise ValueError(f"unknown sheet kind {data.get('kind')!r}")
            data = {**data, "payload": PAYLOADS[kind].model_validate(data["payload"])}
        return data


class ArcRecord(BaseModel):
    name: str = Field(..., min_length=1)
    kind: ArcKind
    terms: Optional[List[List[TermPayload]]] = None
    polynomial: Optional[Dict[str, str]] = None
    coefficient: Optional[float] = None
    exponent: Optional[str] = None
    branch: Optional[int] = None

    @model_validator(mode="after")
    def validate_kind_fields(self):
        if self.kind == ArcKind.POWER:
            if self.terms is None or len(self.terms) != 3:
                raise ValueError(f"power arc {self.name} needs term lists for x, y and z")
        else:
            if self.polynomial is None or self.coefficient is None or self.exponent is None:
                raise ValueError(f"implicit arc {self.name} needs polynomial, coefficient and exponent")
            self.polynomial = _check_coefficient_map(self.polynomial)
            self.exponent = _rational_text(self.exponent)
            if self.branch not in (1, -1):
                raise ValueError(f"implicit arc {self.name} needs branch +1 or -1")
        return self


class BridgeRecord(BaseModel):
    name: str
    q: str
    beta: str
    p: str
    plus_sheet: str
    minus_sheet: str
    boundary_arcs: List[str] = Field(default_factory=list)
    broken: bool = False
    wall_sheets: List[str] = Field(default_factory=list)

    @field_validator("q", "beta", "p", mode="before")
    @classmethod
    def validate_rationals(cls, v):
        return _rational_text(v)

    @model_validator(mode="after")
    def validate_order(self):
        if not Fraction(self.beta) < Fraction(self.p) < Fraction(self.q):
            raise ValueError("bridge exponents need beta < p < q")
        return self


class GermModelFile(BaseModel):
    """Schema-versioned germ model document"""
    schema_version: int = SCHEMA_VERSION
    dimension: int
    sheets: List[SheetRecord] = Field(default_factory=list)
    arcs: List[ArcRecord] = Field(default_factory=list)
    bridges: List[BridgeRecord] = Field(default_factory=list)
    metadata: Dict[str, str] = Field(default_factory=dict)

    @field_validator("schema_version")
    @classmethod
    def validate_version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {v}")
        return v

    @field_validator("dimension")
    @classmethod
    def validate_dimension(cls, v):
        if v not in (3, 4):
            raise ValueError("dimension must be 3 or 4")
        return v

    @model_validator(mode="after")
    def validate_names(self):
        names = [s.name for s in self.sheets]
        if len(names) != len(set(names)):
            raise ValueError("sheet names must be unique")
        return self


# ============= Link and Diagram Schemas =============

class ComponentRecord(BaseModel):
    closed: bool
    pinched: bool = False
    sheets: List[str] = Field(default_factory=list)
    points: List[List[float]]


class LinkFile(BaseModel):
    schema_version: int = SCHEMA_VERSION
    t: float = Field(..., gt=0, le=1)
    dimension: int
    components: List[ComponentRecord] = Field(default_factory=list)


class CrossingRecord(BaseModel):
    """Strands located as (component, segment, parameter)"""
    over: List[float]
    under: List[float]
    sign: int
    position: List[float]

    @field_validator("over", "under")
    @classmethod
    def validate_strand(cls, v):
        if len(v) != 3:
            raise ValueError("a strand is (component, segment, parameter)")
        return v

    @field_validator("sign")
    @classmethod
    def validate_sign(cls, v):
        if v not in (1, -1):
            raise ValueError("crossing sign must be +1 or -1")
        return v


class DiagramFile(BaseModel):
    schema_version: int = SCHEMA_VERSION
    direction: List[float]
    components: List[List[List[float]]] = Field(default_factory=list)
    crossings: List[CrossingRecord] = Field(default_factory=list)
    gauss_code: str = ""

    @model_validator(mode="after")
    def validate_strands(self):
        for crossing in self.crossings:
            for strand in (crossing.over, crossing.under):
                if not 0 <= int(strand[0]) < len(self.components):
                    raise ValueError(f"crossing refers to missing component {int(strand[0])}")
        return self


# ============= Report Schemas =============

class ScaleRecord(BaseModel):
    t: float
    value: float
    residual: Optional[float] = None


class ExponentReport(BaseModel):
    kind: str
    inputs: Dict[str, str] = Field(default_factory=dict)
    ladder: List[float]
    slope: Optional[float] = None
    intercept: Optional[float] = None
    r2: Optional[float] = None
    coincident: bool = False
    per_scale: List[ScaleRecord] = Field(default_factory=list)


class DistortionScaleRecord(BaseModel):
    t: float
    min: float
    max: float


class DistortionReportFile(BaseModel):
    label: str = ""
    kind: str = "distortion"
    seed: int
    samples: int
    global_min: float
    global_max: float
    per_scale: List[DistortionScaleRecord] = Field(default_factory=list)


class LinkSummaryRecord(BaseModel):
    closed: int = 0
    open: int = 0
    pinched: int = 0
    endpoints: int = 0
    total_length: float = 0.0


class TangentConeRecord(BaseModel):
    converged: bool
    converged_at: Optional[int] = None
    distances: List[float] = Field(default_factory=list)
    limit_distance: Optional[float] = None
    last_iterate: LinkSummaryRecord
    limit: LinkSummaryRecord
    limit_nesting: Optional[str] = None


class KnotRecord(BaseModel):
    component: int
    alexander: List[int]
    text: str


class LinkingRecord(BaseModel):
    a: int
    b: int
    value: int


class InvariantReport(BaseModel):
    """Everything `invariants` computes for one model file"""
    version: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    link: LinkSummaryRecord = Field(default_factory=LinkSummaryRecord)
    nesting: Optional[str] = None
    tangent_cone: Optional[TangentConeRecord] = None
    exponents: List[ExponentReport] = Field(default_factory=list)
    knots: List[KnotRecord] = Field(default_factory=list)
    linking: List[LinkingRecord] = Field(default_factory=list)


class CheckRecord(BaseModel):
    name: str
    anchor: str
    expected: str
    observed: str
    tolerance: Optional[float] = None
    passed: bool


class VerificationReport(BaseModel):
    suite: str
    version: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: int
    checks: List[CheckRecord] = Field(default_factory=list)
    distortion: List[DistortionReportFile] = Field(default_factory=list)
    passed: bool = True
    runtime_seconds: Optional[float] = None

    @model_validator(mode="after")
    def validate_verdict(self):
        self.passed = all(check.passed for check in self.checks)
        return self


# ============= Knot Table Schema =============

class KnotTableEntry(BaseModel):
    vertices: List[List[float]]
    alexander: List[int]

    @field_validator("vertices")
    @classmethod
    def validate_vertices(cls, v):
        if len(v) < 3 or any(len(p) != 3 for p in v):
            raise ValueError("a knot needs at least 3 vertices in 3-space")
        return v


class KnotTableFile(BaseModel):
    version: int = 1
    knots: Dict[str, KnotTableEntry]
