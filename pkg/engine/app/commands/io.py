"""Scenario loading and deterministic output files."""

from __future__ import annotations

import csv
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from app.schemas.reports import OracleReport
from app.schemas.scenario import Scenario

logger = logging.getLogger(__name__)


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a TOML scenario; raises OSError, TOMLDecodeError or ValidationError."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return Scenario.model_validate(data)


def write_json(path: Path, payload: BaseModel | dict[str, Any]) -> Path:
    """Sorted keys, two-space indent, trailing newline."""
    data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def write_spectrum(path: Path, report: OracleReport) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "sigma_relative"])
        for i, s in enumerate(report.singular_values):
            writer.writerow([i, repr(float(s))])
    logger.info("wrote %s", path)
    return path


def write_far_field(path: Path, rows: list[tuple[int, np.ndarray, np.ndarray]]) -> Path:
    """Rows of (incident index, directions (P, 3), values (P,)) as θ, φ, Re, Im."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["incident", "theta", "phi", "re", "im"])
        for index, dirs, values in rows:
            theta = np.arccos(np.clip(dirs[:, 2], -1.0, 1.0))
            phi = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2.0 * np.pi)
            for t, p, v in zip(theta, phi, values):
                writer.writerow([index, repr(float(t)), repr(float(p)), repr(float(v.real)), repr(float(v.imag))])
    logger.info("wrote %s", path)
    return path
