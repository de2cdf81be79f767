# app/optimize_utils.py

"""
Constrained EVaR and minimum-variance portfolio problems.

The EVaR problem minimizes F(w, s) = (kappa(s w) - ln alpha) / s jointly over
long-only, fully invested weights w with a target expected return and s > 0.
It is solved by an augmented Lagrangian loop on the two equality constraints
(bound-constrained L-BFGS-B inner solves), followed by an active-set Newton
polish on the KKT system. KKT residuals are reported in the convention
L = F + sum nu_k g_k + sum eta_j h_j with g_k = -w_k, g_{n+1} = -s.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from domain.schemas import (
    EvarResult,
    FrontierPoint,
    KktReport,
    Model1Params,
    Model2Params,
    Multipliers,
    Portfolio,
    RiskKind,
    RiskLevel,
)
from domain.settings import get_settings
from model_utils import LaplaceFunctional, laplace_functional, model_covariance, model_mean
from risk_utils import evar_analytic, stdev_portfolio
from utils.errors import EvarError, ExponentOverflowError, InfeasibleTargetError, SolverStallError
from utils.logging_utils import get_logger

logger = get_logger(__name__)

S_FLOOR = 1e-8
ACTIVE_TOLERANCE = 1e-8
TIE_TOLERANCE = 1e-9
FEASIBILITY_TOLERANCE = 1e-10
MAX_OUTER_ITERATIONS = 30
MAX_NEWTON_ITERATIONS = 100

Point = Tuple[Sequence[float], float]


# --- Objective -------------------------------------------------------------

def evar_objective(kappa: LaplaceFunctional, level: RiskLevel, weights, s: float) -> float:
    """Joint objective (kappa(s w) - ln alpha) / s."""
    w = np.asarray(weights, dtype=float)
    return (kappa(s * w) - math.log(level.alpha)) / s


def evar_objective_gradient(
    kappa: LaplaceFunctional,
    level: RiskLevel,
    weights,
    s: float
) -> Tuple[np.ndarray, float]:
    """
    Analytic gradient of the joint objective.

    Returns:
        Tuple[np.ndarray, float]: (dF/dw, dF/ds) where dF/dw = grad kappa(s w) and
        dF/ds = w.grad kappa(s w) / s - (kappa(s w) - ln alpha) / s^2.
    """
    w = np.asarray(weights, dtype=float)
    u = s * w
    grad = kappa.gradient(u)
    d_s = float(w @ grad) / s - (kappa(u) - math.log(level.alpha)) / (s * s)
    return grad, d_s


def evar_objective_hessian(kappa: LaplaceFunctional, level: RiskLevel, weights, s: float) -> np.ndarray:
    """Analytic Hessian of the joint objective in the variables (w, s)."""
    w = np.asarray(weights, dtype=float)
    u = s * w
    grad = kappa.gradient(u)
    hess = kappa.hessian(u)
    excess = kappa(u) - math.log(level.alpha)
    n = w.shape[0]
    full = np.empty((n + 1, n + 1))
    full[:n, :n] = s * hess
    full[:n, n] = full[n, :n] = hess @ w
    full[n, n] = float(w @ hess @ w) / s - 2.0 * float(w @ grad) / s ** 2 + 2.0 * excess / s ** 3
    return full


# --- Feasibility -------------------------------------------------------------

def check_attainable(means: np.ndarray, mu_star: float) -> None:
    """
    Raises InfeasibleTargetError unless min(means) <= mu_star <= max(means).
    """
    lower, upper = float(np.min(means)), float(np.max(means))
    slack = FEASIBILITY_TOLERANCE * max(1.0, abs(lower), abs(upper))
    if mu_star < lower - slack or mu_star > upper + slack:
        raise InfeasibleTargetError(
            f"target return {mu_star:.6g} is outside the attainable range "
            f"[{lower:.6g}, {upper:.6g}]",
            target=mu_star, lower=lower, upper=upper,
        )


def _blend_to_target(base: np.ndarray, means: np.ndarray, mu_star: float) -> np.ndarray:
    """Mixes a simplex point with the best- or worst-mean vertex to hit mu_star."""
    base_mean = float(means @ base)
    if math.isclose(base_mean, mu_star, rel_tol=0.0, abs_tol=1e-15):
        return base
    vertex = int(np.argmax(means)) if mu_star > base_mean else int(np.argmin(means))
    gap = float(means[vertex]) - base_mean
    t = 1.0 if gap == 0.0 else min(max((mu_star - base_mean) / gap, 0.0), 1.0)
    point = (1.0 - t) * base
    point[vertex] += t
    return point


def feasible_start(means, mu_star: float) -> np.ndarray:
    """Deterministic feasible weights: uniform weights blended toward one vertex."""
    means = np.asarray(means, dtype=float)
    check_attainable(means, mu_star)
    return _blend_to_target(np.full(means.shape[0], 1.0 / means.shape[0]), means, mu_star)


def random_feasible_weights(means, mu_star: float, rng: np.random.Generator) -> np.ndarray:
    """Random feasible weights: a Dirichlet draw blended toward one vertex."""
    means = np.asarray(means, dtype=float)
    check_attainable(means, mu_star)
    return _blend_to_target(rng.dirichlet(np.ones(means.shape[0])), means, mu_star)


def _constraints(means: np.ndarray, mu_star: float, with_s: bool) -> Tuple[np.ndarray, np.ndarray]:
    n = means.shape[0]
    width = n + 1 if with_s else n
    matrix = np.zeros((2, width))
    matrix[0, :n] = means
    matrix[1, :n] = 1.0
    return matrix, np.array([mu_star, 1.0])


# --- Solvers -----------------------------------------------------------------

def _safe_value(fun: Callable[[np.ndarray], float], z: np.ndarray) -> float:
    try:
        value = fun(z)
    except (ExponentOverflowError, OverflowError):
        return math.inf
    return value if math.isfinite(value) else math.inf


def _augmented_lagrangian(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    matrix: np.ndarray,
    rhs: np.ndarray,
    z0: np.ndarray,
    bounds: List[Tuple[Optional[float], Optional[float]]]
) -> Tuple[np.ndarray, int]:
    """Augmented Lagrangian outer loop with bound-constrained inner minimizations."""
    eta = np.zeros(matrix.shape[0])
    rho = 10.0
    z = z0.copy()
    previous = math.inf
    outer = 0
    for outer in range(1, MAX_OUTER_ITERATIONS + 1):
        def merit(x: np.ndarray, eta=eta, rho=rho):
            residual = matrix @ x - rhs
            try:
                value = fun(x)
                gradient = grad(x)
            except (ExponentOverflowError, OverflowError):
                return 1e100, np.zeros_like(x)
            value += eta @ residual + 0.5 * rho * residual @ residual
            return value, gradient + matrix.T @ (eta + rho * residual)

        inner = optimize.minimize(
            merit, z, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": 1000, "ftol": 1e-15, "gtol": 1e-11},
        )
        z = inner.x
        residual = matrix @ z - rhs
        eta = eta + rho * residual
        violation = float(np.max(np.abs(residual)))
        logger.debug("AL outer %d: violation=%.3e rho=%.1e", outer, violation, rho)
        if violation <= FEASIBILITY_TOLERANCE:
            break
        if violation > 0.25 * previous:
            rho *= 10.0
        previous = violation
    return z, outer


def _active_set_newton(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    hess: Callable[[np.ndarray], np.ndarray],
    matrix: np.ndarray,
    rhs: np.ndarray,
    z0: np.ndarray,
    lower: np.ndarray
) -> Tuple[np.ndarray, int]:
    """
    Newton iterations on the equality-constrained problem restricted to the free
    variables, adding blocking bounds to the active set and releasing bounds whose
    multiplier turns negative.
    """
    z = np.maximum(z0, lower)
    active = z <= lower + ACTIVE_TOLERANCE
    z[active] = lower[active]
    frozen = np.zeros_like(active)
    m = matrix.shape[0]
    iteration = 0
    for iteration in range(1, MAX_NEWTON_ITERATIONS + 1):
        g = grad(z)
        free = ~active
        nf = int(free.sum())
        kkt = np.zeros((nf + m, nf + m))
        kkt[:nf, :nf] = hess(z)[np.ix_(free, free)]
        kkt[:nf, nf:] = matrix[:, free].T
        kkt[nf:, :nf] = matrix[:, free]
        solution = np.linalg.lstsq(kkt, np.concatenate([-g[free], rhs - matrix @ z]), rcond=None)[0]
        step = np.zeros_like(z)
        step[free] = solution[:nf]
        eta = solution[nf:]

        t_max, blocking = 1.0, None
        for i in np.flatnonzero(free & (step < 0.0)):
            ratio = (z[i] - lower[i]) / -step[i]
            if ratio < t_max:
                t_max, blocking = ratio, i

        restoring = np.max(np.abs(matrix @ z - rhs)) > 1e-13
        f0 = fun(z)
        descent = min(float(g @ step), 0.0)
        t = t_max
        while True:
            trial = np.maximum(z + t * step, lower)
            f_trial = _safe_value(fun, trial)
            if math.isfinite(f_trial) and (
                    restoring or f_trial <= f0 + 1e-4 * t * descent + 1e-14 * max(1.0, abs(f0))):
                break
            t *= 0.5
            if t < 1e-12:
                trial, t = z, 0.0
                break
        z = trial

        if blocking is not None and t == t_max:
            active[blocking] = True
            z[blocking] = lower[blocking]
            continue
        if np.max(np.abs(t * step)) <= 1e-13 * (1.0 + np.max(np.abs(z))):
            nu = g + matrix.T @ eta
            candidates = np.flatnonzero(active & ~frozen & (nu < -1e-12))
            if candidates.size == 0:
                break
            release = candidates[np.argmin(nu[candidates])]
            active[release] = False
            frozen[release] = True
    return z, iteration


def _pick_tie_break(candidates: List[Tuple[float, np.ndarray]]) -> Tuple[np.ndarray, List[str]]:
    """Lexicographically smallest weights among candidates within TIE_TOLERANCE of the best."""
    best = min(value for value, _ in candidates)
    near = [z for value, z in candidates if value <= best + TIE_TOLERANCE]
    chosen = min(near, key=lambda z: tuple(np.round(z, 12)))
    notes = []
    if any(np.max(np.abs(z - chosen)) > 1e-6 for z in near):
        notes.append("multiple optimal weight vectors within 1e-9 of the optimum; "
                     "returned the lexicographically smallest")
    return chosen, notes


def _clean_weights(w: np.ndarray) -> np.ndarray:
    w = np.where(w < ACTIVE_TOLERANCE * 1e-2, 0.0, w)
    return w / w.sum()


def solve_evar(
    kappa: LaplaceFunctional,
    means,
    cov,
    level: RiskLevel,
    mu_star: float,
    starts: int = 1,
    seed: int = 0,
    start: Optional[Point] = None
) -> Tuple[Portfolio, EvarResult, KktReport]:
    """
    Minimizes the joint EVaR objective over (w, s) on the feasible set.

    Args:
        kappa (LaplaceFunctional): Model Laplace exponent with gradient and Hessian.
        means (array-like): Model expected returns.
        cov (array-like): Model covariance, used for the Gaussian starting point.
        level (RiskLevel): EVaR level alpha.
        mu_star (float): Target expected return.
        starts (int): Number of starting points; extra ones are random feasible points.
        seed (int): Seed for the random starting points.
        start (Optional[Point]): Explicit (weights, s) for the first start.

    Returns:
        Tuple[Portfolio, EvarResult, KktReport]: Solution, EVaR at the solution, KKT residuals.

    Raises:
        InfeasibleTargetError: If mu_star is not attainable.
        SolverStallError: If the KKT residuals stay above the configured tolerance.
    """
    means = np.asarray(means, dtype=float)
    cov = np.asarray(cov, dtype=float)
    check_attainable(means, mu_star)
    n = means.shape[0]
    settings = get_settings()

    if n == 1:
        result = evar_analytic(kappa, [1.0], level)
        portfolio = Portfolio(weights=[1.0], target_return=mu_star)
        report = kkt_report(kappa, means, level, ([1.0], result.s_star), mu_star)
        return portfolio, result, report

    matrix, rhs = _constraints(means, mu_star, with_s=True)
    lower = np.concatenate([np.zeros(n), [S_FLOOR]])
    bounds = [(0.0, 1.0)] * n + [(S_FLOOR, settings.s_max)]

    def fun(z: np.ndarray) -> float:
        return evar_objective(kappa, level, z[:n], z[n])

    def grad(z: np.ndarray) -> np.ndarray:
        d_w, d_s = evar_objective_gradient(kappa, level, z[:n], z[n])
        return np.append(d_w, d_s)

    def hess(z: np.ndarray) -> np.ndarray:
        return evar_objective_hessian(kappa, level, z[:n], z[n])

    rng = np.random.default_rng(seed)
    starting_points = []
    if start is not None:
        starting_points.append((np.asarray(start[0], dtype=float), float(start[1])))
    else:
        w0 = solve_min_variance(cov, means, mu_star).weights
        starting_points.append((np.asarray(w0), None))
    while len(starting_points) < starts:
        starting_points.append((random_feasible_weights(means, mu_star, rng), None))

    candidates: List[Tuple[float, np.ndarray]] = []
    iterations = 0
    for w0, s0 in starting_points:
        if s0 is None:
            s0 = evar_analytic(kappa, w0, level).s_star
        z0 = np.append(w0, s0)
        z_al, outer = _augmented_lagrangian(fun, grad, matrix, rhs, z0, bounds)
        z, newton = _active_set_newton(fun, grad, hess, matrix, rhs, z_al, lower)
        iterations += outer + newton
        candidates.append((fun(z), z))
        logger.debug("EVaR start done: objective=%.12g (AL %d, Newton %d)", candidates[-1][0], outer, newton)

    z, notes = _pick_tie_break(candidates)
    weights = _clean_weights(z[:n])
    s_star = float(z[n])
    report = kkt_report(kappa, means, level, (weights, s_star), mu_star)
    report = report.model_copy(update={"notes": report.notes + notes})
    if report.max_norm() > settings.kkt_tolerance:
        raise SolverStallError(
            f"KKT residual {report.max_norm():.3e} above tolerance {settings.kkt_tolerance:g}",
            weights=weights.tolist(), s=s_star, report=report.model_dump(),
        )
    portfolio = Portfolio(weights=weights.tolist(), target_return=mu_star)
    result = EvarResult(value=evar_objective(kappa, level, weights, s_star), s_star=s_star,
                        iterations=iterations, converged=True)
    return portfolio, result, report


def solve_evar_model1(
    params: Model1Params,
    level: RiskLevel,
    mu_star: float,
    starts: int = 1,
    seed: int = 0,
    start: Optional[Point] = None
) -> Tuple[Portfolio, EvarResult, KktReport]:
    """EVaR-optimal portfolio for the first model at target return mu_star."""
    return solve_evar(laplace_functional(params), model_mean(params), model_covariance(params),
                      level, mu_star, starts=starts, seed=seed, start=start)


def solve_evar_model2(
    params: Model2Params,
    level: RiskLevel,
    mu_star: float,
    starts: int = 1,
    seed: int = 0,
    start: Optional[Point] = None
) -> Tuple[Portfolio, EvarResult, KktReport]:
    """EVaR-optimal portfolio for the second model at target return mu_star."""
    return solve_evar(laplace_functional(params), model_mean(params), model_covariance(params),
                      level, mu_star, starts=starts, seed=seed, start=start)


def solve_min_variance(cov, means, mu_star: float) -> Portfolio:
    """
    Markowitz minimum-variance weights for a target expected return.

    Args:
        cov (array-like): Return covariance matrix.
        means (array-like): Expected returns.
        mu_star (float): Target expected return.

    Returns:
        Portfolio: Long-only, fully invested minimum-variance weights.

    Raises:
        InfeasibleTargetError: If mu_star is not attainable.
        SolverStallError: If the KKT residuals stay above the configured tolerance.
    """
    cov = np.asarray(cov, dtype=float)
    means = np.asarray(means, dtype=float)
    w0 = feasible_start(means, mu_star)
    matrix, rhs = _constraints(means, mu_star, with_s=False)
    w, _ = _active_set_newton(
        lambda w: float(w @ cov @ w),
        lambda w: 2.0 * cov @ w,
        lambda w: 2.0 * cov,
        matrix, rhs, w0, np.zeros(means.shape[0]),
    )
    w = _clean_weights(w)
    report = min_variance_kkt_report(cov, means, w, mu_star)
    if report.max_norm() > get_settings().kkt_tolerance:
        raise SolverStallError(
            f"minimum-variance KKT residual {report.max_norm():.3e} above tolerance",
            weights=w.tolist(), report=report.model_dump(),
        )
    return Portfolio(weights=w.tolist(), target_return=mu_star)


# --- KKT ---------------------------------------------------------------------

def _fit_multipliers(gradient: np.ndarray, active: np.ndarray, means: np.ndarray) -> Multipliers:
    """
    Bounded least-squares fit of the stationarity system
    gradient - nu + eta_1 (means, 0) + eta_2 (1, 0) = 0 with nu >= 0 on active
    bounds and nu = 0 elsewhere.
    """
    size = gradient.shape[0]
    n = means.shape[0]
    active_idx = np.flatnonzero(active)
    columns = [-np.eye(size)[:, i] for i in active_idx]
    eta_mean = np.zeros(size)
    eta_mean[:n] = means
    eta_budget = np.zeros(size)
    eta_budget[:n] = 1.0
    design = np.column_stack(columns + [eta_mean, eta_budget])
    lower = np.concatenate([np.zeros(active_idx.size), [-np.inf, -np.inf]])
    upper = np.full(active_idx.size + 2, np.inf)
    fit = optimize.lsq_linear(design, -gradient, bounds=(lower, upper), method="bvls",
                              tol=1e-14, lsmr_tol="auto")
    nu = np.zeros(size)
    nu[active_idx] = np.maximum(fit.x[:active_idx.size], 0.0)
    return Multipliers(nu=nu.tolist(), eta=fit.x[active_idx.size:].tolist())


def _report(
    gradient: np.ndarray,
    point: np.ndarray,
    means: np.ndarray,
    mu_star: float,
    multipliers: Multipliers
) -> KktReport:
    n = means.shape[0]
    nu = np.asarray(multipliers.nu, dtype=float)
    eta = np.asarray(multipliers.eta, dtype=float)
    stationarity = gradient - nu
    stationarity[:n] += eta[0] * means + eta[1]
    inequality = -point
    equality = np.array([means @ point[:n] - mu_star, point[:n].sum() - 1.0])
    return KktReport(
        stationarity_inf_norm=float(np.max(np.abs(stationarity))),
        primal_feasibility=float(max(np.max(np.abs(equality)), np.max(inequality), 0.0)),
        complementarity=float(np.max(np.abs(nu * inequality))),
        dual_feasibility=float(max(0.0, -np.min(nu))),
        multipliers=multipliers,
    )


def lagrangian_value(
    kappa: LaplaceFunctional,
    means,
    level: RiskLevel,
    point: Point,
    mu_star: float,
    multipliers: Multipliers
) -> float:
    """L(w, s) = F(w, s) - sum nu_i w_i - nu_{n+1} s + eta_1 h_1 + eta_2 h_2."""
    w = np.asarray(point[0], dtype=float)
    s = float(point[1])
    means = np.asarray(means, dtype=float)
    nu = np.asarray(multipliers.nu, dtype=float)
    eta = np.asarray(multipliers.eta, dtype=float)
    return (evar_objective(kappa, level, w, s) - nu[:-1] @ w - nu[-1] * s
            + eta[0] * (means @ w - mu_star) + eta[1] * (w.sum() - 1.0))


def lagrangian_gradient(
    kappa: LaplaceFunctional,
    means,
    level: RiskLevel,
    point: Point,
    multipliers: Multipliers
) -> Tuple[np.ndarray, float]:
    """
    Analytic (dL/dw, dL/ds).

    dL/dw_i = dF/dw_i - nu_i + eta_1 mean_i + eta_2 and dL/ds = dF/ds - nu_{n+1}.
    """
    w = np.asarray(point[0], dtype=float)
    means = np.asarray(means, dtype=float)
    nu = np.asarray(multipliers.nu, dtype=float)
    eta = np.asarray(multipliers.eta, dtype=float)
    d_w, d_s = evar_objective_gradient(kappa, level, w, float(point[1]))
    return d_w - nu[:-1] + eta[0] * means + eta[1], d_s - nu[-1]


def kkt_report(
    kappa: LaplaceFunctional,
    means,
    level: RiskLevel,
    point: Point,
    mu_star: float,
    multipliers: Optional[Multipliers] = None
) -> KktReport:
    """
    KKT residuals of the EVaR problem at (w, s); multipliers are recovered by
    bounded least squares when not supplied.
    """
    means = np.asarray(means, dtype=float)
    z = np.append(np.asarray(point[0], dtype=float), float(point[1]))
    d_w, d_s = evar_objective_gradient(kappa, level, z[:-1], z[-1])
    gradient = np.append(d_w, d_s)
    if multipliers is None:
        active = z <= ACTIVE_TOLERANCE
        multipliers = _fit_multipliers(gradient, active, means)
    return _report(gradient, z, means, mu_star, multipliers)


def kkt_check_model1(
    params: Model1Params,
    level: RiskLevel,
    point: Point,
    mu_star: float,
    multipliers: Optional[Multipliers] = None
) -> KktReport:
    """KKT residuals of the first-model EVaR problem at point = (weights, s)."""
    return kkt_report(laplace_functional(params), model_mean(params), level, point, mu_star, multipliers)


def kkt_check_model2(
    params: Model2Params,
    level: RiskLevel,
    point: Point,
    mu_star: float,
    multipliers: Optional[Multipliers] = None
) -> KktReport:
    """KKT residuals of the second-model EVaR problem at point = (weights, s)."""
    return kkt_report(laplace_functional(params), model_mean(params), level, point, mu_star, multipliers)


def min_variance_kkt_report(cov, means, weights, mu_star: float) -> KktReport:
    """KKT residuals of the minimum-variance problem at the given weights."""
    w = np.asarray(weights, dtype=float)
    means = np.asarray(means, dtype=float)
    gradient = 2.0 * np.asarray(cov, dtype=float) @ w
    multipliers = _fit_multipliers(gradient, w <= ACTIVE_TOLERANCE, means)
    return _report(gradient, w, means, mu_star, multipliers)


# --- Frontier ----------------------------------------------------------------

def frontier_targets(params: Union[Model1Params, Model2Params], count: int) -> List[float]:
    """Evenly spaced targets over the attainable range [min mean, max mean]."""
    means = model_mean(params)
    if count == 1:
        return [float(means.min())]
    return np.linspace(means.min(), means.max(), count).tolist()


def _solve_frontier_point(
    task: Tuple[Union[Model1Params, Model2Params], RiskLevel, float, RiskKind, int]
) -> FrontierPoint:
    params, level, target, risk_kind, starts = task
    kappa = laplace_functional(params)
    means = model_mean(params)
    cov = model_covariance(params)
    try:
        if risk_kind == RiskKind.EVAR:
            portfolio, result, _ = solve_evar(kappa, means, cov, level, target, starts=starts)
        else:
            portfolio = solve_min_variance(cov, means, target)
            result = evar_analytic(kappa, portfolio.weights, level)
        return FrontierPoint(
            target_return=target,
            weights=portfolio.weights,
            s_star=result.s_star,
            evar_value=result.value,
            stdev_value=stdev_portfolio(cov, portfolio.weights),
            risk_kind=risk_kind,
        )
    except EvarError as exc:
        logger.warning("Frontier target %.6g (%s) failed: %s", target, risk_kind.value, exc.detail)
        return FrontierPoint(target_return=target, risk_kind=risk_kind, error=f"{exc.code}: {exc.detail}")


def efficient_frontier(
    params: Union[Model1Params, Model2Params],
    level: RiskLevel,
    targets: Sequence[float],
    risk_kind: RiskKind = RiskKind.EVAR,
    jobs: int = 1,
    starts: int = 1
) -> List[FrontierPoint]:
    """
    Solves one portfolio per target return and reports both EVaR and standard deviation.

    Args:
        params: Model parameters.
        level (RiskLevel): EVaR level alpha.
        targets (Sequence[float]): Target expected returns.
        risk_kind (RiskKind): EVAR minimizes EVaR, STDEV minimizes variance.
        jobs (int): Worker processes; 0 means available parallelism, 1 runs in-process.
        starts (int): Starting points per EVaR solve.

    Returns:
        List[FrontierPoint]: One point per target, in target order; failures carry `error`.
    """
    tasks = [(params, level, float(target), risk_kind, starts) for target in targets]
    workers = jobs or os.cpu_count() or 1
    logger.info("Solving %d %s frontier targets with %d worker(s).", len(tasks), risk_kind.value, workers)
    if workers == 1 or len(tasks) <= 1:
        return [_solve_frontier_point(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve_frontier_point, tasks))
