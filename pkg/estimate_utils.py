# app/estimate_utils.py

"""
Extended least squares (ELS) fitting of both jump-diffusion models.

The objective is sum_i [(y_i - m) G^-1 (y_i - m)^T + ln|G|] with m and G the
model-implied mean and covariance. Since m and G do not depend on i it only
needs the sample mean and covariance. Parameters are searched in an
unconstrained space (softplus for positive scalars, lower-triangular factors
with softplus diagonals for covariance matrices) by multi-start Nelder-Mead.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import linalg, optimize

from domain.schemas import ElsProblem, FitResult, Model1Params, Model2Params, ModelKind
from domain.settings import get_settings
from model_utils import model_covariance, model_mean
from utils.errors import AllStartsFailedError, SingularGError
from utils.logging_utils import get_logger
from utils.numerics import cholesky_logdet, inverse_softplus, softplus

logger = get_logger(__name__)

START_INTENSITY = 0.1
PERTURBATION_SCALE = 0.5
XATOL = 1e-8
FATOL = 1e-10

Params = Union[Model1Params, Model2Params]


# --- Reparameterization ------------------------------------------------------

def _tri_size(n: int) -> int:
    return n * (n + 1) // 2


def _matrix_to_raw(matrix) -> np.ndarray:
    """Lower Cholesky factor with inverse-softplus diagonal, packed row-wise."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    try:
        factor = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        factor = np.linalg.cholesky(matrix + 1e-12 * np.eye(n))
    raw = factor.copy()
    raw[np.diag_indices(n)] = inverse_softplus(np.diag(factor))
    return raw[np.tril_indices(n)]


def _raw_to_matrix(raw: np.ndarray, n: int) -> np.ndarray:
    factor = np.zeros((n, n))
    factor[np.tril_indices(n)] = raw
    factor[np.diag_indices(n)] = softplus(np.diag(factor))
    matrix = factor @ factor.T
    return 0.5 * (matrix + matrix.T)


def parameter_count(kind: ModelKind, n: int) -> int:
    """Length of the unconstrained vector for a model of dimension n."""
    if kind == ModelKind.MODEL1:
        return 5 * n + 2 + _tri_size(n)
    return 2 * n + 1 + 2 * _tri_size(n)


def to_unconstrained(params: Params) -> np.ndarray:
    """
    Maps valid parameters to the unconstrained search space.

    Layout, first model: mu_tilde, sigma, lambda, theta, sigma_jump, gamma, mu, A.
    Layout, second model: mu_tilde, Q, lambda, mu, A.
    """
    if isinstance(params, Model1Params):
        return np.concatenate([
            params.mu_tilde,
            inverse_softplus([params.sigma]),
            inverse_softplus(params.lambda_),
            params.theta,
            inverse_softplus(params.sigma_jump),
            inverse_softplus([params.gamma]),
            params.mu,
            _matrix_to_raw(params.A),
        ])
    return np.concatenate([
        params.mu_tilde,
        _matrix_to_raw(params.Q),
        inverse_softplus([params.lambda_]),
        params.mu,
        _matrix_to_raw(params.A),
    ])


def from_unconstrained(kind: ModelKind, n: int, x) -> Params:
    """Inverse of to_unconstrained; always yields parameters that pass validation."""
    x = np.asarray(x, dtype=float)
    tri = _tri_size(n)
    if kind == ModelKind.MODEL1:
        mu_tilde, sigma, lam, theta, sigma_jump, gamma, mu, a_raw = np.split(
            x, np.cumsum([n, 1, n, n, n, 1, n])
        )
        return Model1Params(
            n=n,
            mu_tilde=mu_tilde.tolist(),
            sigma=float(softplus(sigma[0])),
            lambda_=softplus(lam).tolist(),
            theta=theta.tolist(),
            sigma_jump=softplus(sigma_jump).tolist(),
            gamma=float(softplus(gamma[0])),
            mu=mu.tolist(),
            A=_raw_to_matrix(a_raw, n).tolist(),
        )
    mu_tilde, q_raw, lam, mu, a_raw = np.split(x, np.cumsum([n, tri, 1, n]))
    return Model2Params(
        n=n,
        mu_tilde=mu_tilde.tolist(),
        Q=_raw_to_matrix(q_raw, n).tolist(),
        lambda_=float(softplus(lam[0])),
        mu=mu.tolist(),
        A=_raw_to_matrix(a_raw, n).tolist(),
    )


# --- Objective ---------------------------------------------------------------

class _SampleMoments:
    """Sample mean and biased covariance; all the ELS objective needs from the data."""

    def __init__(self, returns: np.ndarray):
        self.n_obs, self.n = returns.shape
        self.mean = returns.mean(axis=0)
        centred = returns - self.mean
        self.covariance = centred.T @ centred / self.n_obs

    def objective(self, mean: np.ndarray, covariance: np.ndarray) -> float:
        try:
            factor, logdet = cholesky_logdet(covariance)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularGError(f"implied covariance G is not positive definite: {exc}")
        gap = self.mean - mean
        scatter = self.covariance + np.outer(gap, gap)
        trace = float(np.trace(linalg.cho_solve(factor, scatter)))
        return self.n_obs * (logdet + trace)


def els_objective(problem: ElsProblem, params: Params) -> float:
    """
    ELS objective in trace form: n_obs ln|G| + tr(G^-1 sum_i (y_i - m)(y_i - m)^T).

    Raises:
        SingularGError: If the implied covariance is not positive definite.
    """
    moments = _SampleMoments(problem.data.returns)
    return moments.objective(model_mean(params), model_covariance(params))


def els_objective_direct(problem: ElsProblem, params: Params) -> float:
    """ELS objective summed row by row; reference for the trace form."""
    covariance = model_covariance(params)
    try:
        factor, logdet = cholesky_logdet(covariance)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularGError(f"implied covariance G is not positive definite: {exc}")
    mean = model_mean(params)
    total = 0.0
    for row in problem.data.returns:
        gap = row - mean
        total += float(gap @ linalg.cho_solve(factor, gap)) + logdet
    return total


# --- Starting points ---------------------------------------------------------

def moment_matched_start(problem: ElsProblem) -> Params:
    """
    Parameters whose implied mean equals the sample mean and whose implied
    variances equal the sample variances, with all intensities at 0.1.
    """
    moments = _SampleMoments(problem.data.returns)
    n = moments.n
    sample_cov = moments.covariance
    zeros = [0.0] * n
    if problem.model_kind == ModelKind.MODEL2:
        return Model2Params(
            n=n, mu_tilde=moments.mean.tolist(), Q=(0.5 * sample_cov).tolist(),
            lambda_=START_INTENSITY, mu=zeros,
            A=(0.5 / START_INTENSITY * sample_cov).tolist(),
        )
    variances = np.diag(sample_cov)
    diffusion = 0.25 * float(variances.min())
    jump_var = np.maximum(0.5 * variances - diffusion, 0.0) / START_INTENSITY
    return Model1Params(
        n=n, mu_tilde=moments.mean.tolist(), sigma=math.sqrt(diffusion),
        lambda_=[START_INTENSITY] * n, theta=zeros, sigma_jump=np.sqrt(jump_var).tolist(),
        gamma=START_INTENSITY, mu=zeros, A=(0.5 / START_INTENSITY * sample_cov).tolist(),
    )


def jump_free_candidate(problem: ElsProblem) -> Params:
    """Closed-form ELS minimizer with every jump intensity set to zero."""
    moments = _SampleMoments(problem.data.returns)
    n = moments.n
    zeros = [0.0] * n
    identity = np.eye(n).tolist()
    if problem.model_kind == ModelKind.MODEL2:
        return Model2Params(n=n, mu_tilde=moments.mean.tolist(), Q=moments.covariance.tolist(),
                            lambda_=0.0, mu=zeros, A=identity)
    sigma2 = float(np.trace(moments.covariance)) / n
    return Model1Params(n=n, mu_tilde=moments.mean.tolist(), sigma=math.sqrt(sigma2),
                        lambda_=zeros, theta=zeros, sigma_jump=zeros, gamma=0.0, mu=zeros, A=identity)


def free_parameters(params: Params, jump_free: bool) -> int:
    """Number of estimated parameters, used in the AIC penalty."""
    n = params.n
    if isinstance(params, Model1Params):
        return n + 1 if jump_free else parameter_count(ModelKind.MODEL1, n)
    return n + _tri_size(n) if jump_free else parameter_count(ModelKind.MODEL2, n)


# --- Fitting -----------------------------------------------------------------

def _run_start(task: Tuple[ModelKind, np.ndarray, np.ndarray, int]) -> Optional[Tuple[float, np.ndarray, int, bool]]:
    kind, returns, x0, max_evaluations = task
    moments = _SampleMoments(returns)
    n = moments.n

    def objective(x: np.ndarray) -> float:
        params = from_unconstrained(kind, n, x)
        try:
            value = moments.objective(model_mean(params), model_covariance(params))
        except SingularGError:
            return math.inf
        return value if math.isfinite(value) else math.inf

    if not math.isfinite(objective(x0)):
        return None
    result = optimize.minimize(
        objective, x0, method="Nelder-Mead",
        options={"xatol": XATOL, "fatol": FATOL, "maxfev": max_evaluations, "adaptive": True},
    )
    if not math.isfinite(result.fun):
        return None
    return float(result.fun), result.x, int(result.nfev), bool(result.success)


def _diagnostics(problem: ElsProblem, params: Params) -> dict:
    moments = _SampleMoments(problem.data.returns)
    implied_mean = model_mean(params)
    implied_cov = model_covariance(params)
    return {
        "sample_mean": moments.mean.tolist(),
        "sample_covariance": moments.covariance.tolist(),
        "implied_mean": implied_mean.tolist(),
        "implied_covariance": implied_cov.tolist(),
        "mean_gap": float(np.max(np.abs(moments.mean - implied_mean))),
        "covariance_gap": float(np.max(np.abs(moments.covariance - implied_cov))),
    }


def fit_els(
    problem: ElsProblem,
    starts: Optional[int] = None,
    seed: int = 0,
    jobs: int = 1,
    reduce_jumps: bool = False
) -> FitResult:
    """
    Fits model parameters by multi-start Nelder-Mead on the ELS objective.

    The first start is moment matched, the others perturb it with Gaussian noise
    in the unconstrained space. With reduce_jumps the closed-form jump-free fit
    replaces the jump model when its AIC is no worse. ELS sees only the first
    two moments, so for the second model that candidate always matches the best
    jump fit and wins on the penalty; the reduction is therefore opt-in.

    Args:
        problem (ElsProblem): Return rows and model kind.
        starts (Optional[int]): Number of starts, defaults to settings (16).
        seed (int): Seed for the perturbed starts.
        jobs (int): Worker processes; 0 means available parallelism.
        reduce_jumps (bool): Compare against the jump-free candidate (off by default).

    Returns:
        FitResult: Best parameters with objective, AIC and moment diagnostics.

    Raises:
        AllStartsFailedError: If no start reaches a finite objective.
    """
    settings = get_settings()
    starts = settings.els_starts if starts is None else starts
    kind = problem.model_kind
    n = problem.data.n_assets
    returns = problem.data.returns

    base = to_unconstrained(moment_matched_start(problem))
    rng = np.random.default_rng(seed)
    initial = [base] + [base + PERTURBATION_SCALE * rng.standard_normal(base.shape[0])
                        for _ in range(starts - 1)]
    tasks = [(kind, returns, x0, settings.els_max_evaluations) for x0 in initial]

    workers = jobs or os.cpu_count() or 1
    logger.info("Fitting %s by ELS from %d start(s) with %d worker(s).", kind.value, len(tasks), workers)
    if workers == 1 or len(tasks) <= 1:
        outcomes = [_run_start(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_start, tasks))

    finished: List[Tuple[float, np.ndarray, int, bool]] = [o for o in outcomes if o is not None]
    for index, outcome in enumerate(outcomes):
        if outcome is None:
            logger.warning("ELS start %d failed with a singular implied covariance.", index)
    if not finished:
        raise AllStartsFailedError(f"all {len(tasks)} ELS starts hit a singular implied covariance",
                                   starts=len(tasks))

    objective, x_best, evaluations, converged = min(finished, key=lambda o: o[0])
    params = from_unconstrained(kind, n, x_best)
    jump_free = False
    aic = objective + 2.0 * free_parameters(params, jump_free=False)

    if reduce_jumps:
        candidate = jump_free_candidate(problem)
        try:
            candidate_objective = els_objective(problem, candidate)
        except SingularGError:
            candidate_objective = math.inf
        candidate_aic = candidate_objective + 2.0 * free_parameters(candidate, jump_free=True)
        if candidate_aic <= aic:
            logger.info("Jump-free fit preferred (AIC %.6g <= %.6g).", candidate_aic, aic)
            params, objective, aic, jump_free = candidate, candidate_objective, candidate_aic, True

    return FitResult(
        params=params,
        objective=objective,
        iterations=evaluations,
        converged=converged,
        n_obs=problem.data.n_obs,
        jump_free=jump_free,
        aic=aic,
        **_diagnostics(problem, params),
    )
