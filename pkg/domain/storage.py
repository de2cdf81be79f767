"""
File persistence for parameters, fit results, risk reports, frontiers and return samples.

JSON goes through orjson with sorted keys and a fixed indent so the same inputs
always produce byte-identical files; CSV goes through pandas.
"""

from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import orjson
import pandas as pd
from pydantic import BaseModel

from data_utils import prices_to_frame, returns_to_frame
from domain.schemas import (
    FitResult,
    FrontierPoint,
    Model1Params,
    Model2Params,
    OutputFormat,
    PriceSeries,
    ReturnSample,
    RiskKind,
)
from utils.errors import ConfigError

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
FLOAT_FORMAT = "%.17g"
FRONTIER_HEAD = ["target_return", "evar", "stdev", "s_star"]

Params = Union[Model1Params, Model2Params]


def dumps(payload: Any) -> bytes:
    """Canonical JSON bytes (sorted keys, two-space indent, trailing newline)."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json", by_alias=True)
    return orjson.dumps(payload, option=JSON_OPTIONS) + b"\n"


def save_json(payload: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(dumps(payload))
    return path


def load_json(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Reads a JSON document.

    Raises:
        ConfigError: If the file is missing or is not valid JSON.
    """
    path = Path(path)
    try:
        return orjson.loads(path.read_bytes())
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found", file=str(path))
    except orjson.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})", file=str(path))


def params_document(params: Params) -> Dict[str, Any]:
    """Parameter JSON with the exact field names (lambda, not lambda_)."""
    return params.model_dump(mode="json", by_alias=True)


def parse_params(document: Dict[str, Any]) -> Params:
    """
    Builds parameters from a JSON document; the second model is recognized by `Q`.

    Raises:
        pydantic.ValidationError: If the parameters violate a model invariant.
    """
    fields = {key: value for key, value in document.items() if key != "fit"}
    if "Q" in fields:
        return Model2Params.model_validate(fields)
    return Model1Params.model_validate(fields)


def load_params(path: Union[str, Path]) -> Params:
    """Reads a parameter file (plain parameters or a fit result)."""
    return parse_params(load_json(path))


def save_params(params: Params, path: Union[str, Path]) -> Path:
    return save_json(params_document(params), path)


def save_fit_result(result: FitResult, path: Union[str, Path]) -> Path:
    """Writes the fitted parameters at top level with the fit metadata under `fit`."""
    document = params_document(result.params)
    document["fit"] = result.model_dump(mode="json", exclude={"params"})
    document["fit"]["model"] = result.params.kind.value
    return save_json(document, path)


def frontier_frame(points: Sequence[FrontierPoint], n: int) -> pd.DataFrame:
    """Frontier table `target_return,evar,stdev,s_star,w_1..w_n`; failed points keep empty cells."""
    rows = []
    for point in points:
        weights = point.weights if point.weights is not None else [None] * n
        rows.append([point.target_return, point.evar_value, point.stdev_value, point.s_star, *weights])
    return pd.DataFrame(rows, columns=FRONTIER_HEAD + [f"w_{i + 1}" for i in range(n)])


def stdev_path(path: Union[str, Path]) -> Path:
    """Companion file for the minimum-variance curve: frontier.csv -> frontier_stdev.csv."""
    path = Path(path)
    return path.with_name(f"{path.stem}_stdev{path.suffix}")


def save_frontier(
    curves: Dict[RiskKind, List[FrontierPoint]],
    n: int,
    path: Union[str, Path],
    output_format: OutputFormat,
    header: Dict[str, Any]
) -> List[Path]:
    """
    Writes the EVaR and minimum-variance frontiers.

    JSON: one document with the report header and one record list per curve.
    CSV: the EVaR curve at `path` and the minimum-variance curve next to it.
    """
    path = Path(path)
    if output_format == OutputFormat.JSON:
        document = dict(header)
        for kind, points in curves.items():
            document[kind.value] = [p.model_dump(mode="json") for p in points]
        return [save_json(document, path)]

    written = []
    for kind, points in curves.items():
        target = path if kind == RiskKind.EVAR else stdev_path(path)
        frontier_frame(points, n).to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        written.append(target)
    return written


def save_returns(sample: ReturnSample, path: Union[str, Path]) -> Path:
    """Writes a return sample as CSV `date,r_<asset>...`."""
    path = Path(path)
    returns_to_frame(sample).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def save_prices(prices: PriceSeries, path: Union[str, Path]) -> Path:
    """Writes closes as CSV `date,<asset>...`."""
    path = Path(path)
    prices_to_frame(prices).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path
