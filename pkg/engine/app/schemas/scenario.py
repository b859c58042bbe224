"""Scenario files (TOML) accepted by the CLI."""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, Field, model_validator

from app.core.errors import DomainError
from app.core.geometry import BoundaryCondition, EdgeCorner, VertexCorner


# ── Building blocks ──────────────────────────────────────────────────────────


class AngleSpec(BaseModel):
    """An angle as a fraction of π: exactly one of ``rational``, ``real``, ``sqrt_frac``."""

    rational: tuple[int, int] | None = None  # [q, p] → q/p
    real: float | None = None
    sqrt_frac: tuple[int, int] | None = None  # [a, b] → sqrt(a/b)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _exactly_one(self) -> AngleSpec:
        given = [v for v in (self.rational, self.real, self.sqrt_frac) if v is not None]
        if len(given) != 1:
            raise ValueError("angle needs exactly one of 'rational', 'real', 'sqrt_frac'")
        for pair in (self.rational, self.sqrt_frac):
            if pair is not None and pair[1] == 0:
                raise ValueError("angle denominator must be nonzero")
        if self.sqrt_frac is not None and self.sqrt_frac[0] * self.sqrt_frac[1] < 0:
            raise ValueError("sqrt_frac needs a non-negative ratio")
        return self

    def value(self) -> float:
        if self.rational is not None:
            return self.rational[0] / self.rational[1]
        if self.sqrt_frac is not None:
            return math.sqrt(self.sqrt_frac[0] / self.sqrt_frac[1])
        return float(self.real)  # type: ignore[arg-type]


class BoundarySpec(BaseModel):
    kind: Literal["nodal", "singular", "impedance"]
    eta: tuple[float, float] | None = None  # [re, im], impedance only

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _eta_matches_kind(self) -> BoundarySpec:
        if (self.kind == "impedance") != (self.eta is not None):
            raise ValueError("'eta' is required for impedance planes and forbidden otherwise")
        return self

    def to_condition(self) -> BoundaryCondition:
        if self.kind == "nodal":
            return BoundaryCondition.nodal()
        if self.kind == "singular":
            return BoundaryCondition.singular()
        return BoundaryCondition.impedance(complex(*self.eta))  # type: ignore[misc]


class FaceConditions(BaseModel):
    """Per-face sidecar of an OFF obstacle; face keys are indices as strings."""

    default: BoundarySpec
    faces: dict[int, BoundarySpec] = Field(default_factory=dict)

    def conditions(self, count: int) -> tuple[BoundaryCondition, ...]:
        unknown = [i for i in self.faces if not 0 <= i < count]
        if unknown:
            raise DomainError(f"sidecar names faces {unknown} but the polyhedron has {count}")
        return tuple((self.faces.get(i) or self.default).to_condition() for i in range(count))


# ── Corners ──────────────────────────────────────────────────────────────────


class EdgeScenario(BaseModel):
    alpha: AngleSpec
    bc1: BoundarySpec
    bc2: BoundarySpec
    aux_line_zero: bool = False

    model_config = {"extra": "forbid"}

    def to_corner(self) -> EdgeCorner:
        return EdgeCorner(self.alpha.value(), self.bc1.to_condition(), self.bc2.to_condition(), self.aux_line_zero)


class VertexScenario(BaseModel):
    """Either the canonical trihedral form (α, θ₁, θ₂) or explicit ordered rays."""

    alpha: AngleSpec | None = None
    theta1: AngleSpec | None = None
    theta2: AngleSpec | None = None
    rays: list[tuple[float, float, float]] | None = None
    bcs: list[BoundarySpec]
    aux_vertex_zero: bool = False

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _one_form(self) -> VertexScenario:
        canonical = [self.alpha, self.theta1, self.theta2]
        if self.rays is None and any(a is None for a in canonical):
            raise ValueError("vertex needs 'rays' or all of 'alpha', 'theta1', 'theta2'")
        if self.rays is not None and any(a is not None for a in canonical):
            raise ValueError("give either 'rays' or the canonical angles, not both")
        planes = len(self.rays) if self.rays is not None else 3
        if len(self.bcs) != planes:
            raise ValueError(f"{planes} planes need {planes} boundary conditions, got {len(self.bcs)}")
        return self

    def to_corner(self) -> VertexCorner:
        bcs = [b.to_condition() for b in self.bcs]
        if self.rays is not None:
            return VertexCorner(tuple(self.rays), tuple(bcs), self.aux_vertex_zero)
        return VertexCorner.canonical(
            self.alpha.value(),  # type: ignore[union-attr]
            self.theta1.value() * math.pi,  # type: ignore[union-attr]
            self.theta2.value() * math.pi,  # type: ignore[union-attr]
            bcs,
            self.aux_vertex_zero,
        )


class OracleSpec(BaseModel):
    lam: float = Field(default=1.0, gt=0.0)
    n_max: int = Field(default=10, ge=1)
    radial_nodes: int | None = Field(default=None, ge=2)
    row_factor: int | None = Field(default=None, ge=1)

    model_config = {"extra": "forbid"}


# ── Scattering ───────────────────────────────────────────────────────────────


class ObstacleSpec(BaseModel):
    shape: Literal["tetrahedron", "cube", "icosphere", "sphere", "off"]
    size: float = Field(default=1.0, gt=0.0)  # edge length, or radius for spheres
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    level: int = Field(default=2, ge=0, le=5)  # icosphere refinement
    bc: BoundarySpec = BoundarySpec(kind="nodal")
    path: str | None = None  # OFF file
    sidecar: str | None = None  # per-face conditions, defaults to <stem>.json
    label: str | None = None

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _path_for_off(self) -> ObstacleSpec:
        if (self.shape == "off") != (self.path is not None):
            raise ValueError("'path' is required for OFF obstacles and forbidden otherwise")
        return self


class ScatterSpec(BaseModel):
    k: float = Field(gt=0.0)
    directions: list[tuple[float, float, float]] = Field(min_length=1, max_length=2)
    obstacle: ObstacleSpec
    compare_with: ObstacleSpec | None = None  # runs the uniqueness demo
    sources: int | None = Field(default=None, ge=4)
    far_field_nodes: int | None = Field(default=None, ge=2)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _two_directions_for_demo(self) -> ScatterSpec:
        if self.compare_with is not None and len(self.directions) != 2:
            raise ValueError("the uniqueness demo needs exactly two incident directions")
        if self.compare_with is not None and "sphere" == self.compare_with.shape:
            raise ValueError("the uniqueness demo needs polyhedral obstacles")
        return self


# ── Scenario ─────────────────────────────────────────────────────────────────


class Scenario(BaseModel):
    kind: Literal["edge", "vertex", "scatter"]
    requested_order: int = Field(default=10, ge=1)
    edge: EdgeScenario | None = None
    vertex: VertexScenario | None = None
    oracle: OracleSpec = OracleSpec()
    scatter: ScatterSpec | None = None

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _payload_for_kind(self) -> Scenario:
        if getattr(self, self.kind) is None:
            raise ValueError(f"scenario of kind '{self.kind}' needs a [{self.kind}] table")
        return self

    def corner(self) -> EdgeCorner | VertexCorner:
        if self.kind == "edge":
            return self.edge.to_corner()  # type: ignore[union-attr]
        if self.kind == "vertex":
            return self.vertex.to_corner()  # type: ignore[union-attr]
        raise ValueError("scatter scenarios carry no corner")
