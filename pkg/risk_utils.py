# app/risk_utils.py

"""
Risk measures of a portfolio return w.R.

EVaR is computed analytically from a model Laplace exponent kappa as
inf_{s>0} (kappa(s w) - ln alpha) / s, and empirically from a return sample by
replacing kappa with the log of the empirical moment generating function.
Empirical VaR and the model standard deviation are provided for comparison.
R is a return (gain); all measures are expressed as losses.
"""

import math
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import optimize, stats
from scipy.special import logsumexp

from domain.schemas import EvarResult, Model1Params, Model2Params, ReturnSample, RiskLevel, TruncationPolicy
from domain.settings import get_settings
from model_utils import LaplaceFunctional, laplace_functional, portfolio_mixture
from utils.errors import (
    EmptySampleError,
    ExponentOverflowError,
    NegativeQuadraticFormError,
    NoInteriorMinimumError,
)
from utils.logging_utils import get_logger

logger = get_logger(__name__)

BRACKET_FACTOR = math.log(4.0)
GOLDEN_TOLERANCE = 1e-12
POLISH_STEP = 1e-4


def _as_weights(weights) -> np.ndarray:
    return np.asarray(weights, dtype=float).ravel()


class _CountingObjective:
    """f(s) evaluated on x = ln(s / s_min) + 1, with overflow mapped to +inf."""

    def __init__(self, func: Callable[[float], float], s_min: float):
        self.func = func
        self.log_s_min = math.log(s_min)
        self.evaluations = 0

    def to_s(self, x: float) -> float:
        return math.exp(x - 1.0 + self.log_s_min)

    def to_x(self, s: float) -> float:
        return math.log(s) - self.log_s_min + 1.0

    def __call__(self, x: float) -> float:
        self.evaluations += 1
        try:
            value = self.func(self.to_s(x))
        except (ExponentOverflowError, OverflowError):
            return math.inf
        return value if math.isfinite(value) else math.inf


def minimize_over_s(
    func: Callable[[float], float],
    s_min: Optional[float] = None,
    s_max: Optional[float] = None
) -> EvarResult:
    """
    Minimizes a smooth, unimodal objective over s in [s_min, s_max].

    The minimum is bracketed by geometric expansion from s = 1 (factor 4 either
    way), refined by golden-section search in log s and polished with one Newton
    step built from finite differences. Overflowing evaluations count as +inf.

    Args:
        func (Callable[[float], float]): Objective f(s).
        s_min (Optional[float]): Lower bracket cap, defaults to settings (1e-8).
        s_max (Optional[float]): Upper bracket cap, defaults to settings (1e6).

    Returns:
        EvarResult: Minimum value, minimizer and evaluation count.

    Raises:
        NoInteriorMinimumError: If f is still decreasing at a bracket cap.
        ExponentOverflowError: If f overflows over the whole admissible range.
    """
    settings = get_settings()
    s_min = settings.s_min if s_min is None else s_min
    s_max = settings.s_max if s_max is None else s_max
    g = _CountingObjective(func, s_min)
    x_lo, x_hi = 1.0, g.to_x(s_max)

    x_mid = min(max(g.to_x(1.0), x_lo), x_hi)
    f_mid = g(x_mid)
    while not math.isfinite(f_mid):
        if x_mid <= x_lo:
            raise ExponentOverflowError("EVaR objective overflows for every admissible s")
        x_mid = max(x_mid - BRACKET_FACTOR, x_lo)
        f_mid = g(x_mid)

    x_left = max(x_mid - BRACKET_FACTOR, x_lo)
    f_left = g(x_left)
    x_right = min(x_mid + BRACKET_FACTOR, x_hi)
    f_right = g(x_right)

    while f_right < f_mid:
        if x_right >= x_hi:
            raise NoInteriorMinimumError(
                f"EVaR objective still decreasing at the bracket cap s={s_max:g}", cap=s_max
            )
        x_left, f_left = x_mid, f_mid
        x_mid, f_mid = x_right, f_right
        x_right = min(x_right + BRACKET_FACTOR, x_hi)
        f_right = g(x_right)
    while f_left < f_mid:
        if x_left <= x_lo:
            raise NoInteriorMinimumError(
                f"EVaR objective still decreasing at the bracket cap s={s_min:g}", cap=s_min
            )
        x_right, f_right = x_mid, f_mid
        x_mid, f_mid = x_left, f_left
        x_left = max(x_left - BRACKET_FACTOR, x_lo)
        f_left = g(x_left)

    if f_mid < f_left and f_mid < f_right:
        refined = optimize.minimize_scalar(
            g, bracket=(x_left, x_mid, x_right), method="golden", tol=GOLDEN_TOLERANCE
        )
    else:
        refined = optimize.minimize_scalar(
            g, bounds=(x_left, x_right), method="bounded", options={"xatol": GOLDEN_TOLERANCE}
        )
    x_best, f_best = float(refined.x), float(refined.fun)
    if f_mid < f_best:
        x_best, f_best = x_mid, f_mid

    # Newton polish
    f_plus, f_minus = g(x_best + POLISH_STEP), g(x_best - POLISH_STEP)
    curvature = (f_plus - 2.0 * f_best + f_minus) / POLISH_STEP ** 2
    if math.isfinite(curvature) and curvature > 0.0:
        slope = (f_plus - f_minus) / (2.0 * POLISH_STEP)
        x_newton = min(max(x_best - slope / curvature, x_lo), x_hi)
        f_newton = g(x_newton)
        if f_newton < f_best:
            x_best, f_best = x_newton, f_newton

    return EvarResult(value=f_best, s_star=g.to_s(x_best), iterations=g.evaluations, converged=True)


def evar_analytic(kappa: Callable[[np.ndarray], float], weights, level: RiskLevel) -> EvarResult:
    """
    EVaR of the portfolio w.R from the Laplace exponent of R.

    Args:
        kappa (Callable): u -> log E[exp(-u.R)].
        weights (array-like): Portfolio weights.
        level (RiskLevel): EVaR level alpha.

    Returns:
        EvarResult: inf_{s>0} (kappa(s w) - ln alpha) / s and its minimizer.
    """
    w = _as_weights(weights)
    log_alpha = math.log(level.alpha)
    return minimize_over_s(lambda s: (kappa(s * w) - log_alpha) / s)


def evar_model1(params: Model1Params, weights, level: RiskLevel) -> EvarResult:
    return evar_analytic(laplace_functional(params), weights, level)


def evar_model2(params: Model2Params, weights, level: RiskLevel) -> EvarResult:
    return evar_analytic(laplace_functional(params), weights, level)


def evar_model(params: Union[Model1Params, Model2Params], weights, level: RiskLevel) -> EvarResult:
    return evar_analytic(laplace_functional(params), weights, level)


def _portfolio_returns(sample: ReturnSample, weights) -> np.ndarray:
    if sample.n_obs == 0:
        raise EmptySampleError("return sample has no rows")
    return sample.returns @ _as_weights(weights)


def empirical_laplace(sample: ReturnSample) -> Callable[[np.ndarray], float]:
    """u -> log of the empirical mean of exp(-u.R), via log-sum-exp."""
    if sample.n_obs == 0:
        raise EmptySampleError("return sample has no rows")
    returns = sample.returns
    log_count = math.log(sample.n_obs)

    def kappa(u) -> float:
        return float(logsumexp(-(returns @ np.asarray(u, dtype=float)))) - log_count

    return kappa


def _evar_of_portfolio_returns(portfolio: np.ndarray, level: RiskLevel) -> EvarResult:
    if np.ptp(portfolio) == 0.0:
        # Point mass: the infimum is approached as s grows and equals the constant loss.
        return EvarResult(value=-float(portfolio[0]), s_star=get_settings().s_max,
                          iterations=0, converged=True)
    log_alpha = math.log(level.alpha)
    log_count = math.log(portfolio.shape[0])

    def objective(s: float) -> float:
        return (float(logsumexp(-s * portfolio)) - log_count - log_alpha) / s

    return minimize_over_s(objective)


def evar_empirical(sample: ReturnSample, weights, level: RiskLevel) -> EvarResult:
    """
    Sample analogue of EVaR using the empirical moment generating function.

    Raises:
        EmptySampleError: If the sample has no rows.
    """
    return _evar_of_portfolio_returns(_portfolio_returns(sample, weights), level)


def evar_bootstrap_ci(
    sample: ReturnSample,
    weights,
    level: RiskLevel,
    resamples: int = 200,
    seed: int = 0,
    coverage: float = 0.99
) -> Tuple[float, float]:
    """
    Percentile bootstrap interval for the empirical EVaR.

    Returns:
        Tuple[float, float]: Lower and upper interval bounds.
    """
    portfolio = _portfolio_returns(sample, weights)
    rng = np.random.default_rng(seed)
    values = np.empty(resamples)
    for i in range(resamples):
        draw = portfolio[rng.integers(0, portfolio.shape[0], size=portfolio.shape[0])]
        values[i] = _evar_of_portfolio_returns(draw, level).value
    tail = 0.5 * (1.0 - coverage)
    lower, upper = np.quantile(values, [tail, 1.0 - tail])
    return float(lower), float(upper)


def var_empirical(sample: ReturnSample, weights, level: RiskLevel) -> float:
    """
    Empirical VaR: the smallest loss -w.R whose empirical CDF reaches 1 - alpha.

    Raises:
        EmptySampleError: If the sample has no rows.
    """
    losses = -_portfolio_returns(sample, weights)
    return float(np.quantile(losses, 1.0 - level.alpha, method="inverted_cdf"))


def stdev_portfolio(cov, weights) -> float:
    """
    Standard deviation sqrt(w cov w^T) of the portfolio return.

    Raises:
        NegativeQuadraticFormError: If the quadratic form is below -1e-12.
    """
    w = _as_weights(weights)
    quadratic = float(w @ np.asarray(cov, dtype=float) @ w)
    if quadratic < -1e-12:
        raise NegativeQuadraticFormError(
            f"w cov w^T = {quadratic:.3e} is negative", value=quadratic
        )
    return math.sqrt(max(quadratic, 0.0))


def model_risk(kappa: LaplaceFunctional, cov, weights, level: RiskLevel) -> Tuple[EvarResult, float]:
    """EVaR and standard deviation of one portfolio under a model."""
    return evar_analytic(kappa, weights, level), stdev_portfolio(cov, weights)


def var_model(
    params: Union[Model1Params, Model2Params],
    weights,
    level: RiskLevel,
    policy: Optional[TruncationPolicy] = None
) -> float:
    """
    Model VaR: the loss -w.R exceeded with probability alpha, from the truncated
    Poisson mixture of normals for w.R.
    """
    probs, means, variances = portfolio_mixture(params, weights, policy)
    scales = np.sqrt(np.maximum(variances, 0.0))

    def cdf(y: float) -> float:
        degenerate = scales == 0.0
        z = np.where(degenerate, 0.0, (y - means) / np.where(degenerate, 1.0, scales))
        values = np.where(degenerate, (y >= means).astype(float), stats.norm.cdf(z))
        return float(probs @ values)

    spread = float(np.max(scales)) + 1.0
    lower = float(np.min(means)) - 40.0 * spread
    upper = float(np.max(means)) + 40.0 * spread
    quantile = optimize.brentq(lambda y: cdf(y) - level.alpha, lower, upper, xtol=1e-14)
    return -quantile
