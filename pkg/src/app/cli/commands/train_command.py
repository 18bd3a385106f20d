from argparse import Namespace, _SubParsersAction
from pathlib import Path

from app.services import experiment_service
from app.utils.processors import process_command


def register(subparsers: _SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "train", help="Fit CSP and train one network per subject."
    )
    parser.add_argument("--config", type=Path, required=True, help="run configuration JSON")
    parser.set_defaults(handler=run)


def run(args: Namespace) -> int:
    def _train():
        return experiment_service.run_training(experiment_service.load_config(args.config))

    return process_command(command_fn=_train, failure_msg="Training failed")
