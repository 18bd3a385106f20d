import logging
import sys
from typing import Any, Callable

from pydantic import BaseModel, ValidationError

from app.exceptions.custom_exceptions import ApplicationError
from app.exceptions.error_category import ErrorCategory

logger = logging.getLogger(__name__)

INTERNAL_EXIT_CODE = 1


def process_command(command_fn: Callable[[], Any], failure_msg: str) -> int:
    """
    Runs a command and maps its failures to process exit codes.

    Args:
        command_fn (Callable[[], Any]): The command body.
        failure_msg (str): Logged when the command fails outside an application error.

    Returns:
        int: 0 on success, the exit code of the error category otherwise, 1 for
            unexpected exceptions.
    """
    try:
        result = command_fn()
        if result is not None:
            print(_format_result(result))
        return 0
    except ApplicationError as ex:
        logger.exception(str(ex))
        return _report(ex.data.category, ex.data.detail)
    except ValidationError as ex:
        logger.exception(failure_msg)
        return _report(ErrorCategory.CONFIG, f"{ex.error_count()} invalid configuration values: {ex}")
    except FileNotFoundError as ex:
        logger.exception(failure_msg)
        return _report(ErrorCategory.DATA, f"{ex.filename} not found")
    except Exception as ex:
        logger.exception(failure_msg)
        print(f"error[internal]: {failure_msg}: {ex}", file=sys.stderr)
        return INTERNAL_EXIT_CODE


def _report(category: ErrorCategory, detail: str) -> int:
    print(f"error[{category.value}]: {detail}", file=sys.stderr)
    return category.exit_code


def _format_result(result: Any) -> str:
    """
    Formats a command result for standard output.

    Args:
        result (Any): A pydantic model, a list of models or plain text.

    Returns:
        str: JSON for models, ``str(result)`` otherwise.
    """
    if isinstance(result, list) and all(isinstance(item, BaseModel) for item in result):
        return "\n".join(item.model_dump_json() for item in result)
    if isinstance(result, BaseModel):
        return result.model_dump_json(indent=2)
    return str(result)
