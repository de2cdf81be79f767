"""
`simulate`: draw a seeded return sample from model parameters.
"""

from typing import Optional

import click

from commands.common import build_config, common_options, echo_header, params_option, report_errors
from data_utils import sample_to_prices
from domain import storage
from domain.schemas import Command, RunConfig
from model_utils import sample_model


@click.command(name=Command.SIMULATE.value)
@params_option
@click.option("--count", type=int, default=None, help="Number of return rows.")
@click.option("--prices-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the implied weekly price CSV (initial close 100).")
@common_options
@report_errors(Command.SIMULATE)
def simulate(params_in: Optional[str], count: Optional[int], prices_out: Optional[str], **options):
    """Write simulated returns as CSV `date,r_<asset>...`."""
    run(build_config(Command.SIMULATE, params_in=params_in, count=count, prices_out=prices_out, **options))


def run(config: RunConfig) -> None:
    echo_header(config.risk_level)

    params = storage.load_params(config.params_in)
    sample = sample_model(params, config.count, config.seed)
    storage.save_returns(sample, config.out)
    if config.prices_out is not None:
        storage.save_prices(sample_to_prices(sample), config.prices_out)
    click.echo(f"rows={sample.n_obs} assets={sample.n_assets} seed={config.seed} out={config.out}")
