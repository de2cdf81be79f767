"""
Shared plumbing for the command-line subcommands: option sets, config
validation, the report header and error reporting.
"""

import functools
from typing import Any, Callable, Dict, List, Optional

import click
import orjson
from pydantic import ValidationError

from domain.schemas import Command, ModelKind, OutputFormat, RiskLevel, RunConfig, TargetGrid
from domain.settings import get_settings
from utils.errors import ConfigError, EvarError, FileAccessError
from utils.logging_utils import get_logger

logger = get_logger(__name__)

CONVENTION = "confidence c <-> alpha = 1-c; R is a return, losses positive"


def report_header(level: RiskLevel) -> Dict[str, Any]:
    """Header fields written into every report and echoed to stdout."""
    return {"confidence": level.confidence, "alpha": level.alpha, "convention": CONVENTION}


def echo_header(level: RiskLevel) -> None:
    click.echo(f"# confidence {level.confidence:g} <-> alpha = {level.alpha:g}; "
               "R is a return, losses positive")


def parse_weights(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise ConfigError(f"--weights must be comma-separated numbers, got {text!r}")


def parse_model(text: Optional[str]) -> Optional[ModelKind]:
    if text is None:
        return None
    return ModelKind.MODEL1 if text == "1" else ModelKind.MODEL2


def build_config(command: Command, **fields: Any) -> RunConfig:
    """
    Validates the command-line inputs as a RunConfig.

    Raises:
        ConfigError: If any input is missing or invalid.
    """
    if fields.get("jobs") is None:
        fields["jobs"] = get_settings().jobs
    try:
        if isinstance(fields.get("targets"), str):
            fields["targets"] = TargetGrid.parse(fields["targets"])
        return RunConfig(command=command, **fields)
    except ValidationError as exc:
        raise ConfigError(_first_error(exc))
    except ValueError as exc:
        raise ConfigError(str(exc))


def _first_error(exc: ValidationError) -> str:
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error.get("loc", ())) or "config"
    return f"{location}: {error.get('msg')}"


def emit_error(exc: Exception, command: Command) -> int:
    """
    Writes the error document to stderr and returns the exit code. Validation
    failures and unreadable or unwritable paths count as configuration errors.
    """
    if isinstance(exc, ValidationError):
        exc = ConfigError(_first_error(exc))
    elif isinstance(exc, OSError):
        exc = FileAccessError(exc.strerror or str(exc), file=str(exc.filename) if exc.filename else None)
    logger.error("%s failed: %s", command.value, exc.detail)
    click.echo(orjson.dumps(exc.to_payload(command.value)).decode(), err=True)
    return exc.exit_code


def report_errors(command: Command) -> Callable:
    """
    Wraps a subcommand so toolkit errors become a JSON document on stderr and
    the matching exit code (2 config, 3 data, 4 solver).
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            ctx = click.get_current_context()
            try:
                return func(*args, **kwargs)
            except (EvarError, ValidationError, OSError) as exc:
                ctx.exit(emit_error(exc, command))
        return wrapper
    return decorator


def common_options(func: Callable) -> Callable:
    """Options every subcommand accepts."""
    options = [
        click.option("--alpha", "confidence", type=float, default=0.95, show_default=True,
                     help="Confidence level c; the EVaR level is alpha = 1 - c."),
        click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--format", "output_format", type=click.Choice([f.value for f in OutputFormat]),
                     default=OutputFormat.JSON.value, show_default=True),
        click.option("--jobs", type=int, default=None,
                     help="Worker processes (0 = available parallelism)."),
        click.option("--tail-mass", type=float, default=None, help="Poisson truncation tail mass."),
        click.option("--max-terms", type=int, default=None, help="Poisson truncation term budget."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def params_option(func: Callable) -> Callable:
    return click.option("--params", "params_in", type=click.Path(dir_okay=False), default=None,
                        help="Model parameter JSON.")(func)
