"""Shared pytest fixtures for engine tests."""

from pathlib import Path

import pytest

from app.config import settings
from app.core.geometry import BoundaryCondition


@pytest.fixture(autouse=True)
def restore_settings():
    """CLI runs mutate the settings singleton (seed, threads); put it back afterwards."""
    saved = settings.model_dump()
    yield
    for key, value in saved.items():
        setattr(settings, key, value)


@pytest.fixture
def nodal() -> BoundaryCondition:
    return BoundaryCondition.nodal()


@pytest.fixture
def singular() -> BoundaryCondition:
    return BoundaryCondition.singular()


@pytest.fixture
def impedance() -> BoundaryCondition:
    return BoundaryCondition.impedance(1.0 + 0.5j)


@pytest.fixture
def write_scenario(tmp_path: Path):
    """Write a TOML scenario into the test's temp dir and return its path."""

    def _write(text: str, name: str = "scenario.toml") -> Path:
        path = tmp_path / name
        path.write_text(text.strip() + "\n", encoding="utf-8")
        return path

    return _write
