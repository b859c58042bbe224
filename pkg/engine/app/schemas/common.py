"""Shared / generic schemas."""

from typing import Any

from pydantic import BaseModel


class ErrorReport(BaseModel):
    """Error envelope printed to stderr by the CLI."""

    success: bool = False
    error_code: str
    message: str
    details: dict[str, Any] | None = None
