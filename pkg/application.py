"""
Main entry point for the EVaR toolkit command line.

This module builds the click group and registers one subcommand per module
under ``commands/``. ``run`` executes an already validated RunConfig without
going through argument parsing.
"""

import click
from pydantic import ValidationError

from commands import evar as evar_command
from commands import fit as fit_command
from commands import frontier as frontier_command
from commands import kkt as kkt_command
from commands import simulate as simulate_command
from commands.common import emit_error
from domain.schemas import Command, RunConfig
from utils.errors import EvarError

RUNNERS = {
    Command.FIT: fit_command.run,
    Command.EVAR: evar_command.run,
    Command.FRONTIER: frontier_command.run,
    Command.KKT_CHECK: kkt_command.run,
    Command.SIMULATE: simulate_command.run,
}


@click.group(name="evar-toolkit")
@click.version_option("0.1.0", prog_name="evar-toolkit")
def cli():
    """Entropic value at risk under jump-diffusion return models."""


cli.add_command(fit_command.fit)
cli.add_command(evar_command.evar)
cli.add_command(frontier_command.frontier)
cli.add_command(kkt_command.kkt_check)
cli.add_command(simulate_command.simulate)


def run(config: RunConfig) -> int:
    """
    Runs one command from a RunConfig.

    Returns:
        int: 0 on success, otherwise 2 (config), 3 (data) or 4 (solver); the
        error document goes to stderr.
    """
    try:
        RUNNERS[config.command](config)
    except (EvarError, ValidationError, OSError) as exc:
        return emit_error(exc, config.command)
    return 0


if __name__ == "__main__":
    cli()
