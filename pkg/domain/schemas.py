"""
Pydantic schemas for the EVaR toolkit.

These schemas define the model parameter sets, risk results, portfolios,
frontier records, estimation results and price/return samples exchanged
between the computational modules and the command line.
"""

import datetime
import enum
from pathlib import Path
from typing import ClassVar, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from domain.settings import get_settings
from utils.numerics import validate_covariance


class ModelKind(str, enum.Enum):
    """The two jump-diffusion return models."""
    MODEL1 = "model1"
    MODEL2 = "model2"


class RiskKind(str, enum.Enum):
    """Risk measure minimized along a frontier."""
    EVAR = "evar"
    STDEV = "stdev"


class Command(str, enum.Enum):
    """Command-line subcommands."""
    FIT = "fit"
    EVAR = "evar"
    FRONTIER = "frontier"
    KKT_CHECK = "kkt-check"
    SIMULATE = "simulate"


class OutputFormat(str, enum.Enum):
    CSV = "csv"
    JSON = "json"


def _check_length(values: List[float], n: int, name: str) -> None:
    if len(values) != n:
        raise ValueError(f"{name} must have length n={n}, got {len(values)}")


def _check_nonnegative(values: List[float], name: str) -> None:
    if any(v < 0.0 for v in values):
        raise ValueError(f"{name} must be elementwise >= 0")


class Model1Params(BaseModel):
    """
    Diffusion, per-asset jump and systemic jump parameters of the first model:
    R = X + H + sum_{k<=M} W_k with X_i ~ N(mu_tilde_i, sigma^2), per-asset
    compound Poisson H_i (intensity lambda_i, jump sizes N(theta_i, sigma_jump_i^2))
    and M ~ Poisson(gamma) systemic jumps W_k ~ N(mu, A).
    """
    kind: ClassVar[ModelKind] = ModelKind.MODEL1

    n: int = Field(..., ge=1)
    mu_tilde: List[float]
    sigma: float = Field(..., ge=0.0)
    lambda_: List[float] = Field(..., alias="lambda")
    theta: List[float]
    sigma_jump: List[float]
    gamma: float = Field(..., ge=0.0)
    mu: List[float]
    A: List[List[float]]

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def check_invariants(self) -> "Model1Params":
        for name in ("mu_tilde", "lambda_", "theta", "sigma_jump", "mu"):
            _check_length(getattr(self, name), self.n, name.rstrip("_"))
        _check_nonnegative(self.lambda_, "lambda")
        _check_nonnegative(self.sigma_jump, "sigma_jump")
        if np.asarray(self.A).shape != (self.n, self.n):
            raise ValueError(f"A must be {self.n}x{self.n}")
        validate_covariance(np.asarray(self.A), "A")
        return self


class Model2Params(BaseModel):
    """
    Correlated diffusion plus systemic jump parameters of the second model:
    R = X + sum_{k<=M} W_k with X ~ N(mu_tilde, Q), M ~ Poisson(lambda), W_k ~ N(mu, A).
    """
    kind: ClassVar[ModelKind] = ModelKind.MODEL2

    n: int = Field(..., ge=1)
    mu_tilde: List[float]
    Q: List[List[float]]
    lambda_: float = Field(..., ge=0.0, alias="lambda")
    mu: List[float]
    A: List[List[float]]

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def check_invariants(self) -> "Model2Params":
        _check_length(self.mu_tilde, self.n, "mu_tilde")
        _check_length(self.mu, self.n, "mu")
        for name in ("Q", "A"):
            matrix = np.asarray(getattr(self, name))
            if matrix.shape != (self.n, self.n):
                raise ValueError(f"{name} must be {self.n}x{self.n}")
            validate_covariance(matrix, name)
        return self


ModelParams = Union[Model1Params, Model2Params]


class TruncationPolicy(BaseModel):
    """Controls the truncation of the Poisson mixture sums in the density evaluators."""
    tail_mass: float = Field(default_factory=lambda: get_settings().tail_mass, gt=0.0, lt=1.0)
    max_terms: int = Field(default_factory=lambda: get_settings().max_terms, ge=1)

    model_config = ConfigDict(frozen=True)


class RiskLevel(BaseModel):
    """The EVaR level alpha in (0, 1); a 95% report uses alpha = 0.05."""
    alpha: float = Field(..., gt=0.0, lt=1.0)

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_confidence(cls, confidence: float) -> "RiskLevel":
        return cls(alpha=1.0 - confidence)

    @property
    def confidence(self) -> float:
        return 1.0 - self.alpha


class EvarResult(BaseModel):
    """Minimum of the EVaR objective over s > 0 and its minimizer."""
    value: float
    s_star: float
    iterations: int = 0
    converged: bool = True

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_s_star(self) -> "EvarResult":
        if self.converged and not self.s_star > 0.0:
            raise ValueError("s_star must be positive for a converged result")
        return self


class Portfolio(BaseModel):
    """Long-only, fully invested weights with the return they were solved for."""
    weights: List[float]
    target_return: float

    model_config = ConfigDict(frozen=True)

    @field_validator("weights")
    @classmethod
    def check_simplex(cls, weights: List[float]) -> List[float]:
        if not weights:
            raise ValueError("weights must not be empty")
        if min(weights) < -1e-12:
            raise ValueError("weights must be elementwise >= 0")
        if abs(sum(weights) - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1, got {sum(weights)!r}")
        return weights


class Multipliers(BaseModel):
    """Lagrange multipliers: nu for -w_i <= 0 (i=1..n) and -s <= 0, eta for the two equalities."""
    nu: List[float]
    eta: List[float]


class KktReport(BaseModel):
    """Magnitudes of the Karush-Kuhn-Tucker residuals at a candidate point."""
    stationarity_inf_norm: float = Field(..., ge=0.0)
    primal_feasibility: float = Field(..., ge=0.0)
    complementarity: float = Field(..., ge=0.0)
    dual_feasibility: float = Field(..., ge=0.0)
    multipliers: Multipliers
    notes: List[str] = Field(default_factory=list)

    def max_norm(self) -> float:
        return max(self.stationarity_inf_norm, self.primal_feasibility,
                   self.complementarity, self.dual_feasibility)


class FrontierPoint(BaseModel):
    """One row of an efficient frontier; failed targets keep their error instead of numbers."""
    target_return: float
    weights: Optional[List[float]] = None
    s_star: Optional[float] = None
    evar_value: Optional[float] = None
    stdev_value: Optional[float] = None
    risk_kind: RiskKind = RiskKind.EVAR
    error: Optional[str] = None


class ReturnSample(BaseModel):
    """Matrix of per-period log returns, one row per period and one column per asset."""
    asset_names: List[str]
    returns: np.ndarray
    dates: Optional[List[datetime.date]] = None

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("returns", mode="before")
    @classmethod
    def coerce_returns(cls, value) -> np.ndarray:
        array = np.asarray(value, dtype=float)
        if array.ndim == 1:
            array = array.reshape(-1, 1)
        if array.ndim != 2:
            raise ValueError("returns must be a 2-D matrix")
        if not np.all(np.isfinite(array)):
            raise ValueError("returns must be finite")
        return array

    @model_validator(mode="after")
    def check_shape(self) -> "ReturnSample":
        if len(self.asset_names) != self.returns.shape[1]:
            raise ValueError("asset_names must match the number of return columns")
        if self.dates is not None and len(self.dates) != self.returns.shape[0]:
            raise ValueError("dates must match the number of return rows")
        return self

    @property
    def n_obs(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


class PriceSeries(BaseModel):
    """Aligned closing prices, one row per date and one column per asset."""
    asset_names: List[str]
    dates: List[datetime.date]
    closes: np.ndarray
    dropped_rows: int = 0

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("closes", mode="before")
    @classmethod
    def coerce_closes(cls, value) -> np.ndarray:
        array = np.asarray(value, dtype=float)
        if array.ndim != 2:
            raise ValueError("closes must be a 2-D matrix")
        if np.isnan(array).any():
            raise ValueError("closes must not contain missing cells")
        if np.any(array <= 0.0):
            raise ValueError("closes must be strictly positive")
        return array

    @model_validator(mode="after")
    def check_alignment(self) -> "PriceSeries":
        if self.closes.shape != (len(self.dates), len(self.asset_names)):
            raise ValueError("closes must be (dates x assets)")
        if any(later <= earlier for earlier, later in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        return self


class ElsProblem(BaseModel):
    """Observed return rows together with the model whose moments are fitted to them."""
    data: ReturnSample
    model_kind: ModelKind

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_rows(self) -> "ElsProblem":
        if self.data.n_obs < self.data.n_assets + 2:
            raise ValueError(
                f"ELS needs at least n+2={self.data.n_assets + 2} rows, got {self.data.n_obs}"
            )
        return self


class FitResult(BaseModel):
    """Outcome of an extended least squares fit with moment diagnostics."""
    params: Union[Model1Params, Model2Params]
    objective: float
    iterations: int
    converged: bool
    n_obs: int
    jump_free: bool = False
    aic: float
    sample_mean: List[float]
    sample_covariance: List[List[float]]
    implied_mean: List[float]
    implied_covariance: List[List[float]]
    mean_gap: float
    covariance_gap: float


class TargetGrid(BaseModel):
    """Evenly spaced target returns, parsed from ``min:max:count``."""
    lower: float
    upper: float
    count: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_order(self) -> "TargetGrid":
        if self.upper < self.lower:
            raise ValueError("target grid upper bound is below its lower bound")
        return self

    @classmethod
    def parse(cls, text: str) -> "TargetGrid":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"targets must look like min:max:count, got {text!r}")
        return cls(lower=float(parts[0]), upper=float(parts[1]), count=int(parts[2]))

    def values(self) -> List[float]:
        if self.count == 1:
            return [self.lower]
        return np.linspace(self.lower, self.upper, self.count).tolist()


class RunConfig(BaseModel):
    """
    Everything a command-line run needs, validated before any output is written.

    ``confidence`` is the level printed in reports (0.95 for EVaR 95%); the
    EVaR level alpha used in the formulas is ``1 - confidence``.
    """
    command: Command
    model_kind: Optional[ModelKind] = None
    confidence: float = Field(0.95, gt=0.0, lt=1.0)
    targets: Optional[TargetGrid] = None
    prices: List[Path] = Field(default_factory=list)
    params_in: Optional[Path] = None
    out: Optional[Path] = None
    prices_out: Optional[Path] = None
    seed: int = Field(0, ge=0)
    tail_mass: Optional[float] = Field(None, gt=0.0, lt=1.0)
    max_terms: Optional[int] = Field(None, ge=1)
    output_format: OutputFormat = OutputFormat.JSON
    jobs: int = Field(0, ge=0)
    weights: Optional[List[float]] = None
    s: Optional[float] = Field(None, gt=0.0)
    target: Optional[float] = None
    count: Optional[int] = Field(None, ge=1)
    starts: Optional[int] = Field(None, ge=1)
    reduce_jumps: bool = False

    @model_validator(mode="after")
    def check_command_inputs(self) -> "RunConfig":
        for name in ("out", "prices_out"):
            path = getattr(self, name)
            if path is not None and not path.parent.is_dir():
                raise ValueError(f"{name}: directory {str(path.parent)!r} does not exist")
        if self.command == Command.FIT:
            if not self.prices or self.out is None or self.model_kind is None:
                raise ValueError("fit needs --prices, --out and --model")
        elif self.command == Command.SIMULATE:
            if self.params_in is None or self.out is None or self.count is None:
                raise ValueError("simulate needs --params, --out and --count")
        else:
            if self.params_in is None:
                raise ValueError(f"{self.command.value} needs --params")
            if self.command == Command.FRONTIER and (self.targets is None or self.out is None):
                raise ValueError("frontier needs --targets and --out")
            if self.command == Command.EVAR and self.weights is None:
                raise ValueError("evar needs --weights")
            if self.command == Command.KKT_CHECK and (
                    self.weights is None or self.s is None or self.target is None):
                raise ValueError("kkt-check needs --weights, --s and --target")
        return self

    @property
    def risk_level(self) -> RiskLevel:
        return RiskLevel.from_confidence(self.confidence)

    def truncation(self) -> TruncationPolicy:
        overrides = {}
        if self.tail_mass is not None:
            overrides["tail_mass"] = self.tail_mass
        if self.max_terms is not None:
            overrides["max_terms"] = self.max_terms
        return TruncationPolicy(**overrides)
