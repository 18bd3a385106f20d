from argparse import Namespace, _SubParsersAction
from pathlib import Path

from app.schemas.config import SynthConfig
from app.services import synth_service
from app.utils.processors import process_command


def register(subparsers: _SubParsersAction) -> None:
    parser = subparsers.add_parser("synth", help="Write synthetic two-class EEGR recordings.")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--subjects", type=int, default=2, help="number of subjects (default: 2)")
    parser.add_argument("--seed", type=int, default=0, help="generator seed (default: 0)")
    parser.add_argument(
        "--class-gap",
        type=float,
        default=4.0,
        help="power of the class sources relative to the noise (default: 4.0)",
    )
    parser.add_argument("--channels", type=int, default=24, help="raw channels (default: 24)")
    parser.add_argument(
        "--duration", type=float, default=600.0, help="seconds per recording (default: 600)"
    )
    parser.set_defaults(handler=run)


def run(args: Namespace) -> int:
    def _synth():
        cfg = SynthConfig(
            subjects=args.subjects,
            c_raw=args.channels,
            duration=args.duration,
            class_gap=args.class_gap,
            seed=args.seed,
        )
        paths = synth_service.write_synthetic(cfg, args.out)
        return "\n".join(str(path) for path in paths)

    return process_command(command_fn=_synth, failure_msg="Synthetic data not written")
