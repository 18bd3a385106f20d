"""Command-line sub-commands"""

from argparse import ArgumentParser

from app.cli.commands import (
    ablate_command,
    eval_command,
    params_command,
    synth_command,
    train_command,
)

COMMANDS = (synth_command, train_command, eval_command, ablate_command, params_command)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="mhanet",
        description="Auditory attention detection from EEG with MHANet.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser
