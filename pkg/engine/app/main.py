"""Command-line entry point: ``corners {predict,oracle,check,scatter} --config FILE``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app.commands import check, oracle, predict, scatter
from app.commands.io import load_scenario
from app.config import settings
from app.core.errors import ConvergenceError, CornerError
from app.schemas.common import ErrorReport
from app.schemas.scenario import Scenario

logger = logging.getLogger(__name__)

EXIT_SCHEMA = 2
EXIT_CONVERGENCE = 4

COMMANDS: dict[str, Callable[[Scenario, Path], int]] = {
    "predict": predict.run,
    "oracle": oracle.run,
    "check": check.run,
    "scatter": scatter.run,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="TOML scenario file")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    common.add_argument("--seed", type=int, default=None, help="seed for Monte Carlo averages")
    common.add_argument("--threads", type=int, default=None, help="worker threads for assembly and quadrature")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="corners", description="Vanishing orders of eigenfunctions at corners")
    verbs = parser.add_subparsers(dest="verb", required=True)
    verbs.add_parser("predict", parents=[common], help="theorem-engine verdict")
    verbs.add_parser("oracle", parents=[common], help="collocation null-space measurement")
    verbs.add_parser("check", parents=[common], help="verdict vs oracle (exit 0/1/3)")
    verbs.add_parser("scatter", parents=[common], help="MFS far fields and the uniqueness demo")
    return parser


def _fail(code: str, message: str, details: dict[str, Any] | None = None) -> None:
    report = ErrorReport(error_code=code, message=message, details=details)
    print(report.model_dump_json(indent=2), file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if (args.verbose or settings.DEBUG) else logging.INFO,
        format="%(asctime)s  %(name)-25s  %(levelname)-8s  %(message)s",
    )
    if args.seed is not None:
        settings.SEED = args.seed
    if args.threads is not None:
        settings.THREADS = max(1, args.threads)

    try:
        scenario = load_scenario(args.config)
    except ValidationError as exc:
        _fail("invalid-scenario", f"{args.config}: scenario does not match the schema", {"errors": json.loads(exc.json(include_url=False))})
        return EXIT_SCHEMA
    except (OSError, tomllib.TOMLDecodeError) as exc:
        _fail("unreadable-scenario", f"{args.config}: {exc}")
        return EXIT_SCHEMA

    try:
        return COMMANDS[args.verb](scenario, args.out)
    except ConvergenceError as exc:
        logger.error("%s", exc)
        _fail(
            "no-convergence",
            str(exc),
            {
                "residual": exc.residual,
                "condition_number": exc.condition_number,
                "residual_map": {str(k): v for k, v in exc.residual_map.items()},
            },
        )
        return EXIT_CONVERGENCE
    except CornerError as exc:
        _fail("invalid-input", str(exc))
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
