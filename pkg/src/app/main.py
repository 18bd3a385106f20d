"""
Boot the MHANet command line
"""

import logging
import sys
from typing import Sequence

from ecs_logging import StdlibFormatter

from app.cli.cli import build_parser
from app.core.config import get_settings


def _setup_logger() -> None:
    settings = get_settings()
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    if settings.LOG_JSON:
        ecs_handler = logging.StreamHandler()
        ecs_handler.setFormatter(StdlibFormatter())

        logger = logging.getLogger()
        logger.addHandler(ecs_handler)


def run_command(argv: Sequence[str] | None = None) -> int:
    """
    Parse ``argv`` and run the selected sub-command.

    Returns:
        int: The process exit code.
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as ex:
        return ex.code if isinstance(ex.code, int) else 1
    return args.handler(args)


def run() -> None:
    _setup_logger()
    sys.exit(run_command())
