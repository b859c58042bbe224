"""``oracle``: collocation null space of an edge or vertex scenario."""

import logging
from pathlib import Path

from app.commands.io import write_json, write_spectrum
from app.core.errors import DomainError
from app.schemas.reports import OracleReport
from app.schemas.scenario import Scenario
from app.services.oracle import collocation_nullspace

logger = logging.getLogger(__name__)


def measure(scenario: Scenario) -> OracleReport:
    if scenario.kind == "scatter":
        raise DomainError("the oracle needs an edge or vertex scenario")
    spec = scenario.oracle
    return collocation_nullspace(scenario.corner(), spec.lam, spec.n_max, spec.radial_nodes, spec.row_factor)


def run(scenario: Scenario, out: Path) -> int:
    report = measure(scenario)
    write_json(out / "oracle.json", report)
    write_spectrum(out / "spectrum.csv", report)
    logger.info("oracle: %s", report.degree_label)
    return 0
