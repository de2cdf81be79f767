"""
`evar`: EVaR, standard deviation and VaR of one portfolio under fitted parameters.
"""

from typing import Optional

import click
import pandas as pd

from commands.common import build_config, common_options, echo_header, params_option, parse_weights, report_errors, report_header
from domain import storage
from domain.schemas import Command, OutputFormat, Portfolio, RunConfig
from model_utils import model_covariance, model_mean
from risk_utils import evar_model, stdev_portfolio, var_model
from utils.errors import ConfigError


@click.command(name=Command.EVAR.value)
@params_option
@click.option("--weights", default=None, help="Comma-separated portfolio weights.")
@common_options
@report_errors(Command.EVAR)
def evar(params_in: Optional[str], weights: Optional[str], **options):
    """Evaluate EVaR of a portfolio from the model Laplace exponent."""
    run(build_config(Command.EVAR, params_in=params_in, weights=parse_weights(weights), **options))


def run(config: RunConfig) -> None:
    level = config.risk_level
    echo_header(level)

    params = storage.load_params(config.params_in)
    if len(config.weights) != params.n:
        raise ConfigError(f"--weights has {len(config.weights)} entries, the model has n={params.n}")
    expected = float(model_mean(params) @ config.weights)
    portfolio = Portfolio(weights=config.weights, target_return=expected)

    result = evar_model(params, portfolio.weights, level)
    report = {
        **report_header(level),
        "model": params.kind.value,
        "weights": portfolio.weights,
        "expected_return": expected,
        "evar": result.value,
        "s_star": result.s_star,
        "iterations": result.iterations,
        "stdev": stdev_portfolio(model_covariance(params), portfolio.weights),
        "var": var_model(params, portfolio.weights, level, config.truncation()),
    }
    if config.out is not None:
        if config.output_format == OutputFormat.CSV:
            row = {key: value for key, value in report.items() if key != "weights"}
            row.update({f"w_{i + 1}": w for i, w in enumerate(portfolio.weights)})
            pd.DataFrame([row]).to_csv(config.out, index=False, float_format=storage.FLOAT_FORMAT,
                                       lineterminator="\n")
        else:
            storage.save_json(report, config.out)
    click.echo(storage.dumps(report).decode(), nl=False)
