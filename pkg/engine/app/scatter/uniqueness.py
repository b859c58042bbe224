"""Corner-based uniqueness demonstration for two candidate obstacles.

Two total fields for different incident directions are combined so that the
combination vanishes at an exterior vertex x_c of the other obstacle.  If the
far fields agreed, the combination would satisfy that obstacle's boundary
conditions near x_c and so vanish there to the order the corner engine
predicts; fitting the combination locally shows it does not.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.config import settings
from app.core.errors import DomainError
from app.core.expansion import fit_from_samples
from app.core.sampling import fibonacci_sphere, sphere_quadrature
from app.schemas.reports import UniquenessReport
from app.scatter.mfs import IncidentWave, ScatteringSolution, far_field, solve_forward
from app.scatter.obstacle import Obstacle, classify_obstacle, vertex_corner
from app.services.vanish import predict_vertex

logger = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]

FIT_N_MAX = 6
FIT_MASS_TOL = 1e-4


class FieldEvaluator(Protocol):
    def value(self, points: ArrayLike) -> ComplexArray: ...

    def gradient(self, points: ArrayLike) -> ComplexArray: ...


@dataclass(frozen=True)
class LinearCombination:
    """α₁u₁ + α₂u₂."""

    first: FieldEvaluator
    second: FieldEvaluator
    alpha1: complex
    alpha2: complex

    def value(self, points: ArrayLike) -> ComplexArray:
        return self.alpha1 * self.first.value(points) + self.alpha2 * self.second.value(points)

    def gradient(self, points: ArrayLike) -> ComplexArray:
        return self.alpha1 * self.first.gradient(points) + self.alpha2 * self.second.gradient(points)


@dataclass(frozen=True)
class CornerCombination:
    field: LinearCombination
    case: int  # 1 when a field already vanishes at x_c, otherwise 2

    @property
    def alphas(self) -> tuple[complex, complex]:
        return self.field.alpha1, self.field.alpha2


def _at(points: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(points, dtype=float).reshape(-1, 3)


def corner_combination(u1: FieldEvaluator, u2: FieldEvaluator, x_c: ArrayLike, tol: float = 1e-12) -> CornerCombination:
    """α₁ = u₂(x_c), α₂ = −u₁(x_c), so the combination vanishes at x_c."""
    point = _at(x_c)
    a = complex(u1.value(point)[0])
    b = complex(u2.value(point)[0])
    scale = max(abs(a), abs(b))
    case = 1 if min(abs(a), abs(b)) <= tol * max(scale, 1.0) else 2
    if case == 1:
        logger.info("corner combination: a total field already vanishes at x_c (|u1|=%.2e, |u2|=%.2e)", abs(a), abs(b))
    return CornerCombination(LinearCombination(u1, u2, b, -a), case)


@dataclass(frozen=True)
class CC1Check:
    vector: ComplexArray
    norm: float
    scale: float

    @property
    def nonzero(self) -> bool:
        return self.norm > 1e-8 * max(self.scale, np.finfo(float).tiny)


def cc1_condition(u1: FieldEvaluator, u2: FieldEvaluator, x_c: ArrayLike) -> CC1Check:
    """u₂(x_c)∇u₁(x_c) − u₁(x_c)∇u₂(x_c), the gradient of the corner combination."""
    point = _at(x_c)
    a, b = u1.value(point)[0], u2.value(point)[0]
    ga, gb = u1.gradient(point)[0], u2.gradient(point)[0]
    vector = b * ga - a * gb
    scale = float(abs(b) * np.linalg.norm(ga) + abs(a) * np.linalg.norm(gb))
    return CC1Check(vector, float(np.linalg.norm(vector)), scale)


def ball_average(
    u: FieldEvaluator, center: ArrayLike, rho: float, samples: int | None = None, seed: int | None = None
) -> complex:
    """Monte Carlo mean of u over the ball B_ρ(center)."""
    if rho <= 0.0:
        raise DomainError(f"ball radius must be positive, got {rho}")
    samples = settings.MC_SAMPLES if samples is None else samples
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    dirs = rng.normal(size=(samples, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rho * rng.random(samples) ** (1.0 / 3.0)
    points = _at(center) + radii[:, None] * dirs
    return complex(np.mean(u.value(points)))


# ── Demonstration ─────────────────────────────────────────────────────────────


def _witness(candidate: Obstacle, other: Obstacle) -> int | None:
    """Vertex of ``candidate`` farthest outside ``other``, if any lies outside."""
    gaps = other.polyhedron.distance(candidate.polyhedron.vertices)
    best = int(np.argmax(gaps))
    return best if gaps[best] > 1e-9 * max(1.0, other.diameter) else None


def _local_samples(center: np.ndarray, rho: float, exclude: Obstacle) -> np.ndarray:
    dirs = fibonacci_sphere(240)
    shells = [rho * t for t in (0.25, 0.5, 0.75, 1.0)]
    points = np.vstack([center + r * dirs for r in shells])
    return points[~exclude.contains(points)]


def _solve_pair(obstacle: Obstacle, k: float, directions: list[np.ndarray]) -> list[ScatteringSolution]:
    return [solve_forward(obstacle, IncidentWave.towards(k, d)) for d in directions]


def uniqueness_demo(
    obstacle_a: Obstacle,
    obstacle_b: Obstacle,
    k: float,
    d1: ArrayLike,
    d2: ArrayLike,
    tol: float | None = None,
) -> UniquenessReport:
    """Compare far fields of two obstacles; when they differ, exhibit the corner witness."""
    tol = settings.FAR_FIELD_TOL if tol is None else tol
    directions = [IncidentWave.towards(k, d).d for d in (d1, d2)]
    solutions_a = _solve_pair(obstacle_a, k, directions)
    solutions_b = _solve_pair(obstacle_b, k, directions)

    nodes, weights = sphere_quadrature(settings.FAR_FIELD_NODES)
    distance = max(
        far_field(sa, nodes).distance(far_field(sb, nodes), weights) for sa, sb in zip(solutions_a, solutions_b)
    )
    classes = [classify_obstacle(o).label for o in (obstacle_a, obstacle_b)]
    base = dict(
        far_field_distance=distance,
        k=k,
        directions=[d.tolist() for d in directions],
        obstacle_classes=classes,
    )
    logger.info("far-field distance between %s and %s: %.3e", obstacle_a.label, obstacle_b.label, distance)
    if distance <= tol:
        return UniquenessReport(outcome="identical", **base)

    # witness on B with A's fields, else the mirror image
    fields, corner_owner, vertex = solutions_a, obstacle_b, _witness(obstacle_b, obstacle_a)
    if vertex is None:
        fields, corner_owner, vertex = solutions_b, obstacle_a, _witness(obstacle_a, obstacle_b)
    if vertex is None:
        return UniquenessReport(
            outcome="far fields differ (no exterior witness corner)",
            notes=["every vertex of each obstacle lies on or inside the other"],
            **base,
        )

    field_owner = obstacle_a if corner_owner is obstacle_b else obstacle_b
    x_c = corner_owner.polyhedron.vertices[vertex]
    combo = corner_combination(fields[0], fields[1], x_c)
    cc1 = cc1_condition(fields[0], fields[1], x_c)

    clearance = float(field_owner.polyhedron.distance(x_c[None])[0])
    rho = min(0.25 / k, 0.5 * clearance)
    points = _local_samples(x_c, rho, corner_owner)
    fit = fit_from_samples(points - x_c, combo.field.value(points), k * k, FIT_N_MAX)
    fitted = fit.expansion.leading_degree(FIT_MASS_TOL)

    verdict = predict_vertex(vertex_corner(corner_owner, vertex, aux_vertex_zero=True), FIT_N_MAX)
    notes = [
        f"witness vertex {vertex} of {corner_owner.label}, fields of {field_owner.label}",
        f"|v(x_c)| = {abs(complex(combo.field.value(x_c)[0])):.3e}",
    ]
    mean_rho = min(1e-3 * corner_owner.diameter, 0.5 * clearance)
    mean = ball_average(combo.field, x_c, mean_rho)
    notes.append(f"ball mean |⟨v⟩| over radius {mean_rho:.2e}: {abs(mean):.3e}")
    predicted_hit = verdict.applicable and fitted is not None and (verdict.order is None or fitted < verdict.order)
    if predicted_hit:
        outcome = "far fields differ, consistent with the corner vanishing theorem"
        notes.append(f"combination vanishes only to order {fitted}, below the required {verdict.order_label}")
    elif not verdict.applicable:
        outcome = "far fields differ (corner hypotheses not satisfied at the witness)"
    elif fitted is None:
        outcome = "far fields differ (corner vanishing order not measured)"
        notes.append(f"no degree up to {FIT_N_MAX} carries mass above {FIT_MASS_TOL:.0e} in the local fit")
        logger.warning("local fit at vertex %d found no leading degree; consistency not established", vertex)
    else:
        outcome = "counterexample flag: fitted vanishing order reaches the prediction"
        logger.warning("fitted order %s reaches predicted %s at vertex %d", fitted, verdict.order_label, vertex)

    return UniquenessReport(
        outcome=outcome,
        witness_vertex=x_c.tolist(),
        case=combo.case,
        cc1_value=cc1.norm,
        predicted_order=verdict.order_label,
        fitted_leading_degree=fitted,
        fit_residual=fit.residual,
        notes=notes,
        **base,
    )
