"""
`frontier`: EVaR and minimum-variance efficient frontiers over a target grid.
"""

from typing import Optional

import click

from commands.common import build_config, common_options, echo_header, params_option, report_errors, report_header
from domain import storage
from domain.schemas import Command, RiskKind, RunConfig
from optimize_utils import efficient_frontier
from utils.logging_utils import get_logger

logger = get_logger(__name__)


@click.command(name=Command.FRONTIER.value)
@params_option
@click.option("--targets", default=None, help="Target grid min:max:count.")
@click.option("--starts", type=int, default=None, help="Starting points per EVaR solve.")
@common_options
@report_errors(Command.FRONTIER)
def frontier(params_in: Optional[str], targets: Optional[str], starts: Optional[int], **options):
    """Solve one portfolio per target return for both risk measures."""
    run(build_config(Command.FRONTIER, params_in=params_in, targets=targets, starts=starts, **options))


def run(config: RunConfig) -> None:
    level = config.risk_level
    echo_header(level)

    params = storage.load_params(config.params_in)
    grid = config.targets.values()
    curves = {
        kind: efficient_frontier(params, level, grid, kind, jobs=config.jobs, starts=config.starts or 1)
        for kind in (RiskKind.EVAR, RiskKind.STDEV)
    }
    header = {**report_header(level), "model": params.kind.value}
    written = storage.save_frontier(curves, params.n, config.out, config.output_format, header)

    failed = sum(1 for points in curves.values() for point in points if point.error)
    if failed:
        logger.warning("%d frontier point(s) failed; see the error fields.", failed)
    click.echo("target_return,evar,stdev")
    for point in curves[RiskKind.EVAR]:
        if point.error:
            click.echo(f"{point.target_return:.6g},error,error")
        else:
            click.echo(f"{point.target_return:.6g},{point.evar_value:.6g},{point.stdev_value:.6g}")
    click.echo("wrote " + ", ".join(str(path) for path in written))
