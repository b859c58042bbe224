"""``scatter``: forward solves, far-field table and the uniqueness demo."""

import logging
from pathlib import Path

import numpy as np

from app.commands.io import write_far_field, write_json
from app.config import settings
from app.core.errors import DomainError
from app.core.sampling import sphere_quadrature
from app.schemas.reports import FarFieldTable, ScatteringSummary, ScatterReport
from app.schemas.scenario import ObstacleSpec, Scenario
from app.scatter.mfs import IncidentWave, far_field, solve_forward, sphere_far_field_series
from app.scatter.obstacle import (
    Obstacle,
    Scatterer,
    SphereObstacle,
    cube,
    icosphere,
    load_off,
    regular_tetrahedron,
)
from app.scatter.uniqueness import uniqueness_demo

logger = logging.getLogger(__name__)


def build_scatterer(spec: ObstacleSpec) -> Scatterer:
    bc = spec.bc.to_condition()
    if spec.shape == "sphere":
        return SphereObstacle(spec.size, spec.center, bc, spec.label or "sphere")
    if spec.shape == "off":
        return load_off(spec.path, spec.sidecar, spec.label)  # type: ignore[arg-type]
    builders = {
        "tetrahedron": lambda: regular_tetrahedron(spec.size, spec.center),
        "cube": lambda: cube(spec.size, spec.center),
        "icosphere": lambda: icosphere(spec.level, spec.size, spec.center),
    }
    return Obstacle.uniform(builders[spec.shape](), bc, spec.label or spec.shape)


def _series_error(
    sphere: SphereObstacle, k: float, d: np.ndarray, dirs: np.ndarray, weights: np.ndarray, values: np.ndarray
) -> float:
    """Relative L²(S²) error against the separated-variables series."""
    shift = np.exp(1j * k * ((d[None, :] - dirs) @ sphere.centroid))
    series = shift * sphere_far_field_series(k, sphere.radius, d, dirs, sphere.bc)
    return float(np.sqrt(np.sum(weights * np.abs(values - series) ** 2) / np.sum(weights * np.abs(series) ** 2)))


def run(scenario: Scenario, out: Path) -> int:
    spec = scenario.scatter
    if scenario.kind != "scatter" or spec is None:
        raise DomainError("'scatter' needs a scatter scenario")
    scatterer = build_scatterer(spec.obstacle)
    nodes = spec.far_field_nodes or settings.FAR_FIELD_NODES
    dirs, weights = sphere_quadrature(nodes)

    report = ScatterReport()
    rows = []
    errors = []
    for index, direction in enumerate(spec.directions):
        incident = IncidentWave.towards(spec.k, direction)
        solution = solve_forward(scatterer, incident, sources=spec.sources)
        values = far_field(solution, dirs).values
        rows.append((index, dirs, values))
        report.solutions.append(
            ScatteringSummary(
                obstacle=scatterer.label,
                k=spec.k,
                direction=list(incident.direction),
                sources=solution.sources.shape[0],
                collocation=solution.collocation,
                boundary_residual=solution.boundary_residual,
                validation_residual=solution.validation_residual,
                condition_number=solution.condition_number,
                far_field_points=dirs.shape[0],
            )
        )
        if isinstance(scatterer, SphereObstacle):
            errors.append(_series_error(scatterer, spec.k, incident.d, dirs, weights, values))
    if errors:
        report.series_error = max(errors)
        logger.info("sphere far field vs series: relative L² error %.3e", report.series_error)

    if spec.compare_with is not None:
        other = build_scatterer(spec.compare_with)
        if not isinstance(scatterer, Obstacle) or not isinstance(other, Obstacle):
            raise DomainError("the uniqueness demo needs polyhedral obstacles")
        report.demo = uniqueness_demo(scatterer, other, spec.k, spec.directions[0], spec.directions[1])
        logger.info("uniqueness demo: %s", report.demo.outcome)

    write_far_field(out / "farfield.csv", rows)
    table = FarFieldTable(
        obstacle=scatterer.label,
        k=spec.k,
        directions=dirs.tolist(),
        weights=weights.tolist(),
        incidents=[s.direction for s in report.solutions],
        re=[values.real.tolist() for _, _, values in rows],
        im=[values.imag.tolist() for _, _, values in rows],
    )
    write_json(out / "farfield.json", table)
    write_json(out / "demo.json", report)
    return 0
