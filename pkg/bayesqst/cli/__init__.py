"""
Subcommands of the command-line application.

Each module exposes ``register(subparsers)``, which adds its parser and
sets ``handler`` to the function that runs the command.
"""

from bayesqst.cli import diagnose, estimate, sample, simulate, timing

COMMANDS = [simulate, sample, estimate, diagnose, timing]


def register_commands(subparsers) -> None:
    """Include every subcommand in the application."""
    for command in COMMANDS:
        command.register(subparsers)
