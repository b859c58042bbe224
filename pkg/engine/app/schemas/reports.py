"""Report schemas written by the engine and the CLI."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field, field_validator


class ConditionStatus(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    ASSUMED = "assumed"
    NOT_SATISFIED = "not-satisfied"


class VerdictTag(str, Enum):
    """Which theorem family decided a verdict or produced a ledger line."""

    NODAL_NODAL_EDGE = "nodal-nodal-edge"
    NODAL_IMPEDANCE_EDGE = "nodal-impedance-edge"
    IMPEDANCE_IMPEDANCE_EDGE = "impedance-impedance-edge"
    AXISYMMETRIC_SINGULAR_EDGE = "axisymmetric-singular-edge"
    IRRATIONAL_EDGE = "irrational-edge"
    VERTEX_NODAL_WITNESS = "vertex-nodal-witness"
    VERTEX_IMPEDANCE_WITNESS = "vertex-impedance-witness"
    VERTEX_INAPPLICABLE = "vertex-inapplicable"


class ConditionRecord(BaseModel):
    """One line of a verdict's condition ledger."""

    statement: str
    status: ConditionStatus
    tag: VerdictTag
    pair: int | None = None  # vertex pair index, None for edge corners


class VanishingVerdict(BaseModel):
    """Guaranteed vanishing order; ``order is None`` means Infinite."""

    subject: str  # "edge" | "vertex"
    label: str
    order: int | None
    tag: VerdictTag
    requested: int
    applicable: bool = True
    axisymmetric: bool = False
    rationality: list[str] = Field(default_factory=list)
    pair: int | None = None
    conditions: list[ConditionRecord] = Field(default_factory=list)

    @field_validator("order")
    @classmethod
    def _non_negative(cls, value: int | None) -> int | None:
        if value is not None and value < 0:
            raise ValueError(f"vanishing order must be ≥ 0, got {value}")
        return value

    @property
    def infinite(self) -> bool:
        return self.order is None

    @property
    def order_label(self) -> str:
        return "Infinite" if self.order is None else f"Finite{{{self.order}}}"


class OracleStatus(str, Enum):
    CONCLUSIVE = "conclusive"
    INCONCLUSIVE = "inconclusive"


class OracleReport(BaseModel):
    """What the discretised boundary conditions actually leave alive."""

    subject: str
    label: str
    lam: float
    n_max: int
    n_solve: int
    status: OracleStatus
    leading_degree: int | None = None  # None with CONCLUSIVE status means AllVanish{n_max}
    nullspace_dim: int = 0
    nullspace_dim_per_degree: dict[int, int] = Field(default_factory=dict)
    singular_values: list[float] = Field(default_factory=list)
    gap: float | None = None
    rows: int = 0
    unknowns: int = 0
    survivor: list[list[float]] | None = None  # [n, m, re, im] rows of the leading survivor
    off_axis_mass: float | None = None  # largest m ≠ 0 share of any unit nullspace vector
    tolerances: dict[str, float] = Field(default_factory=dict)
    reason: str | None = None

    @property
    def conclusive(self) -> bool:
        return self.status is OracleStatus.CONCLUSIVE

    @property
    def all_vanish(self) -> bool:
        return self.conclusive and self.leading_degree is None

    @property
    def degree_label(self) -> str:
        if not self.conclusive:
            return "Inconclusive"
        return f"AllVanish{{{self.n_max}}}" if self.leading_degree is None else str(self.leading_degree)


class IntegralOrderEstimate(BaseModel):
    """Log–log fit of ρ ↦ ∫_{B_ρ}|u|."""

    slope: float
    order_estimate: float
    order: int | None = None  # rounded estimate, None when outside the rounding window
    flagged: bool = False
    inconclusive: bool = False
    rho: list[float]
    integrals: list[float]
    fit_residual: float
    note: str | None = None


class AgreementStatus(str, Enum):
    AGREE = "agree"
    DISAGREE = "disagree"
    INCONCLUSIVE = "inconclusive"


class AgreementRecord(BaseModel):
    status: AgreementStatus
    sharp: bool = False
    guaranteed: str
    observed: str
    note: str


class ScatteringSummary(BaseModel):
    """Diagnostics of one forward solve."""

    obstacle: str
    k: float
    direction: list[float]
    sources: int
    collocation: int
    boundary_residual: float
    validation_residual: float
    condition_number: float
    far_field_points: int


class UniquenessReport(BaseModel):
    outcome: str
    far_field_distance: float
    k: float
    directions: list[list[float]]
    witness_vertex: list[float] | None = None
    case: int | None = None
    cc1_value: float | None = None
    predicted_order: str | None = None
    fitted_leading_degree: int | None = None
    fit_residual: float | None = None
    obstacle_classes: list[str] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)


class FarFieldTable(BaseModel):
    """Far fields of every incident wave on one shared quadrature set."""

    obstacle: str
    k: float
    directions: list[list[float]]
    weights: list[float]
    incidents: list[list[float]]
    re: list[list[float]]  # one row per incident wave
    im: list[list[float]]


class ScatterReport(BaseModel):
    """Everything a ``scatter`` run produces besides the far-field table."""

    solutions: list[ScatteringSummary] = Field(default_factory=list)
    series_error: float | None = None  # sphere runs only: relative L²(S²) error against the series
    demo: UniquenessReport | None = None
