"""Pydantic schemas, re-exported for convenience."""

from app.schemas.common import ErrorReport  # noqa: F401
from app.schemas.reports import (  # noqa: F401
    AgreementRecord,
    AgreementStatus,
    ConditionRecord,
    ConditionStatus,
    IntegralOrderEstimate,
    OracleReport,
    OracleStatus,
    ScatteringSummary,
    ScatterReport,
    UniquenessReport,
    VanishingVerdict,
)
from app.schemas.scenario import (  # noqa: F401
    AngleSpec,
    BoundarySpec,
    Scenario,
)
