"""``predict``: theorem-engine verdict for an edge or vertex scenario."""

import logging
from pathlib import Path

from app.commands.io import write_json
from app.core.errors import DomainError
from app.schemas.scenario import Scenario
from app.services.vanish import predict, theorem_trace

logger = logging.getLogger(__name__)


def run(scenario: Scenario, out: Path) -> int:
    if scenario.kind == "scatter":
        raise DomainError("'predict' needs an edge or vertex scenario")
    verdict = predict(scenario.corner(), scenario.requested_order)
    for line in theorem_trace(verdict).splitlines():
        logger.info(line)
    write_json(out / "verdict.json", verdict)
    return 0
