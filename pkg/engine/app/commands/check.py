"""``check``: verdict against oracle; exit 0 agree, 1 disagree, 3 inconclusive."""

import json
import logging
from pathlib import Path

from app.commands.io import write_json, write_spectrum
from app.commands.oracle import measure
from app.core.errors import DomainError
from app.schemas.reports import AgreementStatus
from app.schemas.scenario import Scenario
from app.services.oracle import cross_check
from app.services.vanish import predict

logger = logging.getLogger(__name__)

EXIT_CODES = {
    AgreementStatus.AGREE: 0,
    AgreementStatus.DISAGREE: 1,
    AgreementStatus.INCONCLUSIVE: 3,
}


def run(scenario: Scenario, out: Path) -> int:
    if scenario.kind == "scatter":
        raise DomainError("'check' needs an edge or vertex scenario")
    verdict = predict(scenario.corner(), scenario.requested_order)
    report = measure(scenario)
    record = cross_check(verdict, report)
    write_json(out / "verdict.json", verdict)
    write_json(out / "oracle.json", report)
    write_spectrum(out / "spectrum.csv", report)
    print(json.dumps(record.model_dump(mode="json"), sort_keys=True, indent=2))
    if record.status is AgreementStatus.DISAGREE:
        logger.error("disagreement: guaranteed %s, observed %s", record.guaranteed, record.observed)
    else:
        logger.info("%s: %s", record.status.value, record.note)
    return EXIT_CODES[record.status]
