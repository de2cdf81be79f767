"""
`fit`: prices -> log returns -> ELS fit -> parameter JSON.
"""

from typing import Optional, Tuple

import click

from commands.common import build_config, common_options, echo_header, parse_model, report_errors
from data_utils import load_prices, to_log_returns
from domain import storage
from domain.schemas import Command, ElsProblem, RunConfig
from estimate_utils import fit_els
from utils.errors import TooFewRowsError
from utils.logging_utils import get_logger

logger = get_logger(__name__)


@click.command(name=Command.FIT.value)
@click.option("--prices", multiple=True, type=click.Path(dir_okay=False),
              help="Price CSV; repeat for per-asset files.")
@click.option("--model", type=click.Choice(["1", "2"]), default=None, help="Model to fit.")
@click.option("--starts", type=int, default=None, help="Nelder-Mead starts.")
@click.option("--reduce-jumps", is_flag=True, default=False,
              help="Replace the jump model by the jump-free fit when its AIC is no worse.")
@common_options
@report_errors(Command.FIT)
def fit(
    prices: Tuple[str, ...],
    model: Optional[str],
    starts: Optional[int],
    reduce_jumps: bool,
    **options
):
    """Fit model parameters to price data by extended least squares."""
    run(build_config(Command.FIT, prices=list(prices), model_kind=parse_model(model), starts=starts,
                     reduce_jumps=reduce_jumps, **options))


def run(config: RunConfig) -> None:
    echo_header(config.risk_level)

    sample = to_log_returns(load_prices(config.prices))
    if sample.n_obs < sample.n_assets + 2:
        raise TooFewRowsError(
            f"fitting {sample.n_assets} assets needs at least {sample.n_assets + 2} return rows, "
            f"got {sample.n_obs}", rows=sample.n_obs,
        )
    problem = ElsProblem(data=sample, model_kind=config.model_kind)
    result = fit_els(problem, starts=config.starts, seed=config.seed, jobs=config.jobs,
                     reduce_jumps=config.reduce_jumps)
    storage.save_fit_result(result, config.out)

    logger.info("Fitted %s on %d rows: objective %.6f.", config.model_kind.value, result.n_obs, result.objective)
    click.echo(f"model={config.model_kind.value} rows={result.n_obs} objective={result.objective:.10g} "
               f"jump_free={str(result.jump_free).lower()} out={config.out}")
