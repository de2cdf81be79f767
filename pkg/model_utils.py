# app/model_utils.py

"""
Jump-diffusion return models.

This module provides the exact first and second moments of both models, their
Laplace exponents log E[exp(-u.R)] with analytic gradients and Hessians, the
truncated Poisson-mixture joint densities, and seeded Monte Carlo samplers.
"""

import itertools
import math
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg, stats

from domain.schemas import Model1Params, Model2Params, ReturnSample, TruncationPolicy
from domain.settings import get_settings
from utils.errors import (
    ConfigError,
    ExponentOverflowError,
    SingularCovarianceError,
    TruncationBudgetExceededError,
)
from utils.logging_utils import get_logger
from utils.numerics import cholesky_logdet, psd_factor

logger = get_logger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


def _guarded_exp(argument: float, cap: float) -> float:
    if argument > cap:
        raise ExponentOverflowError(
            f"exponent argument {argument:.6g} exceeds the cap {cap:g}", cap=cap
        )
    return math.exp(argument)


def _guarded_expm1(argument: float, cap: float) -> float:
    if argument > cap:
        raise ExponentOverflowError(
            f"exponent argument {argument:.6g} exceeds the cap {cap:g}", cap=cap
        )
    return math.expm1(argument)


class Model1Laplace:
    """
    Laplace exponent of the first model as a callable of the direction u.

    kappa(u) = -u.mu_tilde + sigma^2/2 u.u + gamma (exp(-u.mu + u A u / 2) - 1)
               + sum_k lambda_k (exp(-theta_k u_k + sigma_k^2 u_k^2 / 2) - 1)
    """

    def __init__(self, params: Model1Params, exponent_cap: Optional[float] = None):
        self.mu_tilde = np.asarray(params.mu_tilde, dtype=float)
        self.sigma2 = float(params.sigma) ** 2
        self.lam = np.asarray(params.lambda_, dtype=float)
        self.theta = np.asarray(params.theta, dtype=float)
        self.jump_var = np.asarray(params.sigma_jump, dtype=float) ** 2
        self.gamma = float(params.gamma)
        self.mu = np.asarray(params.mu, dtype=float)
        self.A = np.asarray(params.A, dtype=float)
        self.cap = get_settings().exponent_cap if exponent_cap is None else exponent_cap
        self.n = params.n

    def _systemic(self, u: np.ndarray) -> Tuple[float, np.ndarray]:
        au = self.A @ u
        return -u @ self.mu + 0.5 * u @ au, au

    def _per_asset_args(self, u: np.ndarray) -> np.ndarray:
        return -self.theta * u + 0.5 * self.jump_var * u * u

    def _per_asset_exp(self, u: np.ndarray) -> np.ndarray:
        args = self._per_asset_args(u)
        return np.array([
            _guarded_exp(arg, self.cap) if lam > 0.0 else 0.0
            for arg, lam in zip(args, self.lam)
        ])

    def __call__(self, u) -> float:
        u = np.asarray(u, dtype=float)
        value = -u @ self.mu_tilde + 0.5 * self.sigma2 * (u @ u)
        if self.gamma > 0.0:
            value += self.gamma * _guarded_expm1(self._systemic(u)[0], self.cap)
        for arg, lam in zip(self._per_asset_args(u), self.lam):
            if lam > 0.0:
                value += lam * _guarded_expm1(arg, self.cap)
        return float(value)

    def gradient(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        grad = -self.mu_tilde + self.sigma2 * u
        if self.gamma > 0.0:
            arg, au = self._systemic(u)
            grad = grad + self.gamma * _guarded_exp(arg, self.cap) * (au - self.mu)
        grad = grad + self.lam * self._per_asset_exp(u) * (self.jump_var * u - self.theta)
        return grad

    def hessian(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        hess = self.sigma2 * np.eye(self.n)
        if self.gamma > 0.0:
            arg, au = self._systemic(u)
            slope = au - self.mu
            hess = hess + self.gamma * _guarded_exp(arg, self.cap) * (np.outer(slope, slope) + self.A)
        slope = self.jump_var * u - self.theta
        hess = hess + np.diag(self.lam * self._per_asset_exp(u) * (slope * slope + self.jump_var))
        return hess


class Model2Laplace:
    """
    Laplace exponent of the second model as a callable of the direction u.

    kappa(u) = -u.mu_tilde + u Q u / 2 + lambda (exp(-u.mu + u A u / 2) - 1)
    """

    def __init__(self, params: Model2Params, exponent_cap: Optional[float] = None):
        self.mu_tilde = np.asarray(params.mu_tilde, dtype=float)
        self.Q = np.asarray(params.Q, dtype=float)
        self.lam = float(params.lambda_)
        self.mu = np.asarray(params.mu, dtype=float)
        self.A = np.asarray(params.A, dtype=float)
        self.cap = get_settings().exponent_cap if exponent_cap is None else exponent_cap
        self.n = params.n

    def _systemic(self, u: np.ndarray) -> Tuple[float, np.ndarray]:
        au = self.A @ u
        return -u @ self.mu + 0.5 * u @ au, au

    def __call__(self, u) -> float:
        u = np.asarray(u, dtype=float)
        value = -u @ self.mu_tilde + 0.5 * u @ self.Q @ u
        if self.lam > 0.0:
            value += self.lam * _guarded_expm1(self._systemic(u)[0], self.cap)
        return float(value)

    def gradient(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        grad = -self.mu_tilde + self.Q @ u
        if self.lam > 0.0:
            arg, au = self._systemic(u)
            grad = grad + self.lam * _guarded_exp(arg, self.cap) * (au - self.mu)
        return grad

    def hessian(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        hess = self.Q.copy()
        if self.lam > 0.0:
            arg, au = self._systemic(u)
            slope = au - self.mu
            hess = hess + self.lam * _guarded_exp(arg, self.cap) * (np.outer(slope, slope) + self.A)
        return hess


LaplaceFunctional = Union[Model1Laplace, Model2Laplace]


def laplace_functional(
    params: Union[Model1Params, Model2Params],
    exponent_cap: Optional[float] = None
) -> LaplaceFunctional:
    """Builds the Laplace exponent callable matching the parameter type."""
    if isinstance(params, Model1Params):
        return Model1Laplace(params, exponent_cap)
    return Model2Laplace(params, exponent_cap)


def laplace_exponent_model1(params: Model1Params, u, exponent_cap: Optional[float] = None) -> float:
    """
    Evaluates log E[exp(-u.R)] for the first model.

    Args:
        params (Model1Params): Model parameters.
        u (array-like): Direction of length n.
        exponent_cap (Optional[float]): Largest admissible exponent argument;
                                        defaults to the configured cap (700).

    Returns:
        float: The Laplace exponent.

    Raises:
        ExponentOverflowError: If an exponent argument exceeds the cap.
    """
    return Model1Laplace(params, exponent_cap)(u)


def laplace_exponent_model2(params: Model2Params, u, exponent_cap: Optional[float] = None) -> float:
    """Evaluates log E[exp(-u.R)] for the second model; see laplace_exponent_model1."""
    return Model2Laplace(params, exponent_cap)(u)


def laplace_gradient_model1(params: Model1Params, u) -> np.ndarray:
    return Model1Laplace(params).gradient(u)


def laplace_gradient_model2(params: Model2Params, u) -> np.ndarray:
    return Model2Laplace(params).gradient(u)


def laplace_hessian_model1(params: Model1Params, u) -> np.ndarray:
    return Model1Laplace(params).hessian(u)


def laplace_hessian_model2(params: Model2Params, u) -> np.ndarray:
    return Model2Laplace(params).hessian(u)


def mean_model1(params: Model1Params) -> np.ndarray:
    """Expected return vector mu_tilde_i + lambda_i theta_i + gamma mu_i."""
    return (np.asarray(params.mu_tilde) + np.asarray(params.lambda_) * np.asarray(params.theta)
            + params.gamma * np.asarray(params.mu))


def covariance_model1(params: Model1Params) -> np.ndarray:
    """
    Covariance matrix of the first model.

    Diagonal: sigma^2 + lambda_i (theta_i^2 + sigma_i^2) + gamma (a_ii + mu_i^2);
    off-diagonal: gamma (a_ij + mu_i mu_j).
    """
    mu = np.asarray(params.mu, dtype=float)
    theta = np.asarray(params.theta, dtype=float)
    jump_var = np.asarray(params.sigma_jump, dtype=float) ** 2
    covariance = params.gamma * (np.asarray(params.A, dtype=float) + np.outer(mu, mu))
    covariance += np.diag(params.sigma ** 2 + np.asarray(params.lambda_) * (theta ** 2 + jump_var))
    return 0.5 * (covariance + covariance.T)


def mean_model2(params: Model2Params) -> np.ndarray:
    """Expected return vector mu_tilde_i + lambda mu_i."""
    return np.asarray(params.mu_tilde) + params.lambda_ * np.asarray(params.mu)


def covariance_model2(params: Model2Params) -> np.ndarray:
    """Covariance matrix q_ij + lambda (a_ij + mu_i mu_j) of the second model."""
    mu = np.asarray(params.mu, dtype=float)
    covariance = np.asarray(params.Q, dtype=float) + params.lambda_ * (
        np.asarray(params.A, dtype=float) + np.outer(mu, mu)
    )
    return 0.5 * (covariance + covariance.T)


def model_mean(params: Union[Model1Params, Model2Params]) -> np.ndarray:
    if isinstance(params, Model1Params):
        return mean_model1(params)
    return mean_model2(params)


def model_covariance(params: Union[Model1Params, Model2Params]) -> np.ndarray:
    if isinstance(params, Model1Params):
        return covariance_model1(params)
    return covariance_model2(params)


def poisson_cutoff(intensity: float, policy: TruncationPolicy) -> int:
    """
    Smallest K with P(N <= K) >= 1 - tail_mass for N ~ Poisson(intensity).

    Raises:
        TruncationBudgetExceededError: If K + 1 terms would exceed policy.max_terms.
    """
    if intensity <= 0.0:
        return 0
    cutoff = int(stats.poisson.ppf(1.0 - policy.tail_mass, intensity))
    if cutoff + 1 > policy.max_terms:
        raise TruncationBudgetExceededError(
            f"Poisson({intensity:g}) needs {cutoff + 1} terms for tail mass "
            f"{policy.tail_mass:g}, max_terms is {policy.max_terms}",
            intensity=intensity, needed=cutoff + 1, max_terms=policy.max_terms,
        )
    return cutoff


def _mixture_density(
    points: np.ndarray,
    components: Iterable[Tuple[float, np.ndarray, np.ndarray]]
) -> np.ndarray:
    """Sums weight * N(mean, cov) density over the mixture components at each point."""
    n = points.shape[1]
    total = np.zeros(points.shape[0])
    for weight, mean, cov in components:
        if weight == 0.0:
            continue
        try:
            factor, logdet = cholesky_logdet(cov)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularCovarianceError(
                f"mixture component covariance is not positive definite: {exc}"
            ) from exc
        diff = points - mean
        solved = linalg.cho_solve(factor, diff.T, check_finite=False)
        quad = np.sum(diff.T * solved, axis=0)
        total += weight * np.exp(-0.5 * (quad + logdet + n * LOG_2PI))
    return total


def _as_points(r, n: int) -> Tuple[np.ndarray, bool]:
    points = np.asarray(r, dtype=float)
    single = points.ndim == 0 or (points.ndim == 1 and points.shape[0] == n)
    points = points.reshape(-1, n)
    return points, single


def density_model1(params: Model1Params, r, policy: Optional[TruncationPolicy] = None):
    """
    Truncated joint density of the first model.

    Sums over per-asset jump counts (k_1..k_n) and the systemic count m the Poisson
    weights times N(u, T) with u = (mu_tilde_i + k_i theta_i)_i + m mu and
    T = m A + diag(sigma^2 + k_i sigma_i^2).

    Args:
        params (Model1Params): Model parameters.
        r (array-like): One point of length n, or a (points x n) matrix.
        policy (Optional[TruncationPolicy]): Truncation of the Poisson sums.

    Returns:
        float or np.ndarray: Density value(s), always >= 0.
    """
    policy = policy or TruncationPolicy()
    points, single = _as_points(r, params.n)
    lam = np.asarray(params.lambda_, dtype=float)
    theta = np.asarray(params.theta, dtype=float)
    jump_var = np.asarray(params.sigma_jump, dtype=float) ** 2
    mu_tilde = np.asarray(params.mu_tilde, dtype=float)
    mu = np.asarray(params.mu, dtype=float)
    A = np.asarray(params.A, dtype=float)

    asset_ranges = [range(poisson_cutoff(intensity, policy) + 1) for intensity in lam]
    systemic_range = range(poisson_cutoff(params.gamma, policy) + 1)
    asset_pmf = [stats.poisson.pmf(np.arange(len(rng)), intensity)
                 for rng, intensity in zip(asset_ranges, lam)]
    systemic_pmf = stats.poisson.pmf(np.arange(len(systemic_range)), params.gamma)

    def components():
        for counts in itertools.product(*asset_ranges):
            counts_arr = np.asarray(counts, dtype=float)
            asset_weight = float(np.prod([pmf[k] for pmf, k in zip(asset_pmf, counts)]))
            diag = np.diag(params.sigma ** 2 + counts_arr * jump_var)
            for m in systemic_range:
                yield (asset_weight * systemic_pmf[m],
                       mu_tilde + counts_arr * theta + m * mu,
                       m * A + diag)

    values = _mixture_density(points, components())
    return float(values[0]) if single else values


def density_model2(params: Model2Params, r, policy: Optional[TruncationPolicy] = None):
    """
    Truncated joint density of the second model: sum over m of Poisson(lambda)
    weights times N(mu_tilde + m mu, Q + m A).
    """
    policy = policy or TruncationPolicy()
    points, single = _as_points(r, params.n)
    mu_tilde = np.asarray(params.mu_tilde, dtype=float)
    mu = np.asarray(params.mu, dtype=float)
    Q = np.asarray(params.Q, dtype=float)
    A = np.asarray(params.A, dtype=float)
    counts = np.arange(poisson_cutoff(params.lambda_, policy) + 1)
    weights = stats.poisson.pmf(counts, params.lambda_)
    values = _mixture_density(
        points,
        ((weights[m], mu_tilde + m * mu, Q + m * A) for m in counts),
    )
    return float(values[0]) if single else values


def substream(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for (seed, stream) so parallel sampling stays reproducible."""
    if seed < 0:
        raise ConfigError(f"seed must be >= 0, got {seed}")
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


def _default_names(n: int, asset_names: Optional[List[str]]) -> List[str]:
    return list(asset_names) if asset_names else [f"asset_{i + 1}" for i in range(n)]


def _compound_gaussian_sum(
    rng: np.random.Generator,
    counts: np.ndarray,
    mean: np.ndarray,
    factor: np.ndarray
) -> np.ndarray:
    """Sum of counts[j] i.i.d. N(mean, factor factor^T) vectors for every row j."""
    shocks = rng.standard_normal((counts.shape[0], mean.shape[0])) @ factor.T
    return counts[:, None] * mean + np.sqrt(counts)[:, None] * shocks


def sample_model1(
    params: Model1Params,
    count: int,
    seed: int,
    stream: int = 0,
    asset_names: Optional[List[str]] = None
) -> ReturnSample:
    """
    Draws independent return vectors from the first model.

    Each row is Gaussian diffusion plus a per-asset compound Poisson sum of Gaussian
    jumps plus a Poisson(gamma) number of multivariate Gaussian systemic jumps.
    Given N jumps, a sum of N i.i.d. Gaussians is drawn exactly as one Gaussian.

    Raises:
        ConfigError: If count < 1.
    """
    if count < 1:
        raise ConfigError(f"sample count must be >= 1, got {count}")
    rng = substream(seed, stream)
    n = params.n
    mu_tilde = np.asarray(params.mu_tilde, dtype=float)
    lam = np.asarray(params.lambda_, dtype=float)
    theta = np.asarray(params.theta, dtype=float)
    sigma_jump = np.asarray(params.sigma_jump, dtype=float)

    returns = mu_tilde + params.sigma * rng.standard_normal((count, n))
    jumps = rng.poisson(lam, size=(count, n)).astype(float)
    returns += jumps * theta + np.sqrt(jumps) * sigma_jump * rng.standard_normal((count, n))
    systemic = rng.poisson(params.gamma, size=count).astype(float)
    returns += _compound_gaussian_sum(rng, systemic, np.asarray(params.mu, dtype=float),
                                      psd_factor(np.asarray(params.A, dtype=float)))
    logger.debug("Drew %d Model 1 rows (seed=%d, stream=%d).", count, seed, stream)
    return ReturnSample(asset_names=_default_names(n, asset_names), returns=returns)


def sample_model2(
    params: Model2Params,
    count: int,
    seed: int,
    stream: int = 0,
    asset_names: Optional[List[str]] = None
) -> ReturnSample:
    """Draws independent return vectors from the second model; see sample_model1."""
    if count < 1:
        raise ConfigError(f"sample count must be >= 1, got {count}")
    rng = substream(seed, stream)
    n = params.n
    diffusion = psd_factor(np.asarray(params.Q, dtype=float))
    returns = np.asarray(params.mu_tilde, dtype=float) + rng.standard_normal((count, n)) @ diffusion.T
    systemic = rng.poisson(params.lambda_, size=count).astype(float)
    returns += _compound_gaussian_sum(rng, systemic, np.asarray(params.mu, dtype=float),
                                      psd_factor(np.asarray(params.A, dtype=float)))
    logger.debug("Drew %d Model 2 rows (seed=%d, stream=%d).", count, seed, stream)
    return ReturnSample(asset_names=_default_names(n, asset_names), returns=returns)


def sample_model(
    params: Union[Model1Params, Model2Params],
    count: int,
    seed: int,
    stream: int = 0,
    asset_names: Optional[List[str]] = None
) -> ReturnSample:
    if isinstance(params, Model1Params):
        return sample_model1(params, count, seed, stream, asset_names)
    return sample_model2(params, count, seed, stream, asset_names)


def portfolio_mixture(
    params: Union[Model1Params, Model2Params],
    weights,
    policy: Optional[TruncationPolicy] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Truncated Poisson mixture of univariate normals describing the portfolio return w.R.

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: Component probabilities (renormalized
        over the retained terms), means and variances.
    """
    policy = policy or TruncationPolicy()
    w = np.asarray(weights, dtype=float).ravel()
    jump_mean = float(w @ np.asarray(params.mu, dtype=float))
    jump_var = float(w @ np.asarray(params.A, dtype=float) @ w)
    if isinstance(params, Model2Params):
        counts = np.arange(poisson_cutoff(params.lambda_, policy) + 1)
        probs = stats.poisson.pmf(counts, params.lambda_)
        means = float(w @ np.asarray(params.mu_tilde)) + counts * jump_mean
        variances = float(w @ np.asarray(params.Q) @ w) + counts * jump_var
        return probs / probs.sum(), means, variances

    lam = np.asarray(params.lambda_, dtype=float)
    theta = np.asarray(params.theta, dtype=float)
    asset_jump_var = np.asarray(params.sigma_jump, dtype=float) ** 2
    asset_ranges = [range(poisson_cutoff(intensity, policy) + 1) for intensity in lam]
    systemic = np.arange(poisson_cutoff(params.gamma, policy) + 1)
    systemic_pmf = stats.poisson.pmf(systemic, params.gamma)
    base_mean = float(w @ np.asarray(params.mu_tilde))
    base_var = params.sigma ** 2 * float(w @ w)

    probs, means, variances = [], [], []
    for counts in itertools.product(*asset_ranges):
        k = np.asarray(counts, dtype=float)
        weight = float(np.prod(stats.poisson.pmf(k, lam)))
        mean = base_mean + float(w @ (k * theta))
        var = base_var + float((w ** 2) @ (k * asset_jump_var))
        probs.append(weight * systemic_pmf)
        means.append(mean + systemic * jump_mean)
        variances.append(var + systemic * jump_var)
    probs = np.concatenate(probs)
    return probs / probs.sum(), np.concatenate(means), np.concatenate(variances)
