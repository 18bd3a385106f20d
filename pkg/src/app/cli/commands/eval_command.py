from argparse import Namespace, _SubParsersAction
from pathlib import Path

from app.services import experiment_service
from app.utils.processors import process_command


def register(subparsers: _SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "eval", help="Score a checkpoint on its subject's test split."
    )
    parser.add_argument("--checkpoint", type=Path, required=True, help="checkpoint.mhck file")
    parser.add_argument("--data", type=Path, required=True, help="directory of EEGR recordings")
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="run configuration (default: effective_config.json of the run)",
    )
    parser.set_defaults(handler=run)


def run(args: Namespace) -> int:
    def _eval():
        return experiment_service.evaluate_checkpoint(args.checkpoint, args.data, args.config)

    return process_command(command_fn=_eval, failure_msg="Evaluation failed")
