from argparse import Namespace, _SubParsersAction
from pathlib import Path

from app.schemas.config import DEFAULT_VARIANTS
from app.services import experiment_service
from app.utils.processors import process_command


def register(subparsers: _SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "ablate", help="Compare the full network with ablated variants."
    )
    parser.add_argument("--config", type=Path, required=True, help="run configuration JSON")
    parser.add_argument(
        "--variants",
        default=",".join(DEFAULT_VARIANTS),
        help=f"comma-separated variants (default: {','.join(DEFAULT_VARIANTS)})",
    )
    parser.set_defaults(handler=run)


def format_table(rows: list) -> str:
    lines = [f"{'variant':<16}{'accuracy':>10}{'sd':>9}{'params':>9}"]
    lines += [
        f"{row.variant:<16}{row.mean_accuracy:>10.4f}{row.sd_accuracy:>9.4f}{row.param_count:>9}"
        for row in rows
    ]
    return "\n".join(lines)


def run(args: Namespace) -> int:
    def _ablate():
        variants = [v.strip() for v in args.variants.split(",") if v.strip()]
        cfg = experiment_service.load_config(args.config)
        return format_table(experiment_service.run_ablation(cfg, variants))

    return process_command(command_fn=_ablate, failure_msg="Ablation failed")
