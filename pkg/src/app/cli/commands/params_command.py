from argparse import Namespace, _SubParsersAction
from pathlib import Path

from app.schemas.config import RunConfig
from app.services import experiment_service
from app.utils.processors import process_command


def register(subparsers: _SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "params", help="Print the trainable-parameter count of a configuration."
    )
    parser.add_argument(
        "--config", type=Path, default=None, help="run configuration JSON (default: built-in)"
    )
    parser.set_defaults(handler=run)


def run(args: Namespace) -> int:
    def _params():
        cfg = experiment_service.load_config(args.config) if args.config else RunConfig()
        report = experiment_service.parameter_report(cfg)
        sizes = ", ".join(f"{block}={size}" for block, size in report.block_sizes.items())
        return (
            f"trainable parameters ({report.variant}): {report.param_count}\n"
            f"reference: {report.reference}\n"
            f"blocks: {sizes}"
        )

    return process_command(command_fn=_params, failure_msg="Parameter count failed")
