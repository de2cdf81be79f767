"""
`kkt-check`: KKT residuals of the EVaR portfolio problem at a given (weights, s).
"""

from typing import Optional

import click

from commands.common import build_config, common_options, echo_header, params_option, parse_weights, report_errors, report_header
from domain import storage
from domain.schemas import Command, RunConfig
from model_utils import laplace_functional, model_mean
from optimize_utils import kkt_report
from utils.errors import ConfigError


@click.command(name=Command.KKT_CHECK.value)
@params_option
@click.option("--weights", default=None, help="Comma-separated portfolio weights.")
@click.option("--s", type=float, default=None, help="EVaR scale variable s > 0.")
@click.option("--target", type=float, default=None, help="Target expected return.")
@common_options
@report_errors(Command.KKT_CHECK)
def kkt_check(
    params_in: Optional[str],
    weights: Optional[str],
    s: Optional[float],
    target: Optional[float],
    **options
):
    """Report stationarity, feasibility, complementarity and dual residuals."""
    run(build_config(Command.KKT_CHECK, params_in=params_in, weights=parse_weights(weights),
                     s=s, target=target, **options))


def run(config: RunConfig) -> None:
    level = config.risk_level
    echo_header(level)

    params = storage.load_params(config.params_in)
    if len(config.weights) != params.n:
        raise ConfigError(f"--weights has {len(config.weights)} entries, the model has n={params.n}")
    report = kkt_report(laplace_functional(params), model_mean(params), level,
                        (config.weights, config.s), config.target)
    document = {**report_header(level), "model": params.kind.value, "target_return": config.target,
                "weights": config.weights, "s": config.s, **report.model_dump(mode="json")}
    if config.out is not None:
        storage.save_json(document, config.out)
    click.echo(storage.dumps(document).decode(), nl=False)
