# tests/test_optimize.py

import numpy as np
import pytest

from domain.schemas import Model2Params, Multipliers, RiskKind
from model_utils import laplace_functional, model_covariance, model_mean
from optimize_utils import (
    _pick_tie_break,
    efficient_frontier,
    evar_objective,
    evar_objective_gradient,
    evar_objective_hessian,
    feasible_start,
    frontier_targets,
    kkt_check_model1,
    kkt_check_model2,
    lagrangian_gradient,
    lagrangian_value,
    min_variance_kkt_report,
    random_feasible_weights,
    solve_evar_model1,
    solve_evar_model2,
    solve_min_variance,
)
from risk_utils import evar_analytic, evar_model
from utils.errors import InfeasibleTargetError
from utils.numerics import central_difference_gradient, central_difference_hessian
from test_helpers import grid_minimum, make_model1, make_model2

KKT_TOLERANCE = 1e-6


def _interior_target(params, fraction: float = 0.4) -> float:
    means = model_mean(params)
    return float(means.min() + fraction * (means.max() - means.min()))


def _assert_feasible(portfolio, means, mu_star):
    weights = np.asarray(portfolio.weights)
    assert weights.min() >= 0.0
    assert weights.sum() == pytest.approx(1.0, abs=1e-10)
    assert float(means @ weights) == pytest.approx(mu_star, abs=1e-8)


# --- Objective and Lagrangian derivatives ---

@pytest.mark.parametrize("params", [make_model1(), make_model2()])
def test_lagrangian_gradient_matches_finite_differences(params, level):
    kappa = laplace_functional(params)
    means = model_mean(params)
    rng = np.random.default_rng(31)
    for _ in range(100):
        weights = rng.dirichlet(np.ones(params.n))
        s = rng.uniform(0.5, 15.0)
        multipliers = Multipliers(nu=rng.uniform(0.0, 1.0, params.n + 1).tolist(),
                                  eta=rng.normal(size=2).tolist())
        mu_star = float(means @ weights)

        def lagrangian(z):
            return lagrangian_value(kappa, means, level, (z[:-1], z[-1]), mu_star, multipliers)

        d_w, d_s = lagrangian_gradient(kappa, means, level, (weights, s), multipliers)
        analytic = np.append(d_w, d_s)
        numeric = central_difference_gradient(lagrangian, np.append(weights, s))
        assert np.max(np.abs(analytic - numeric)) <= 1e-5 * max(1.0, np.max(np.abs(analytic)))


@pytest.mark.parametrize("params", [make_model1(), make_model2()])
def test_joint_hessian_matches_finite_differences(params, level):
    kappa = laplace_functional(params)
    weights = np.array([0.2, 0.5, 0.3])
    s = 4.0

    def objective(z):
        return evar_objective(kappa, level, z[:-1], z[-1])

    numeric = central_difference_hessian(objective, np.append(weights, s))
    np.testing.assert_allclose(evar_objective_hessian(kappa, level, weights, s), numeric, rtol=1e-4, atol=1e-6)
    d_w, d_s = evar_objective_gradient(kappa, level, weights, s)
    np.testing.assert_allclose(np.append(d_w, d_s), central_difference_gradient(objective, np.append(weights, s)),
                               rtol=1e-6, atol=1e-9)


# --- EVaR solver ---

def test_single_asset_is_constraint_determined(level):
    params = Model2Params(n=1, mu_tilde=[0.05], Q=[[0.04]], lambda_=0.1, mu=[-0.1], A=[[0.01]])
    mu_star = float(model_mean(params)[0])
    portfolio, result, report = solve_evar_model2(params, level, mu_star)
    assert portfolio.weights == [1.0]
    assert result.value == evar_analytic(laplace_functional(params), [1.0], level).value
    assert report.max_norm() <= KKT_TOLERANCE


@pytest.mark.parametrize("solve, params", [
    (solve_evar_model1, make_model1()),
    (solve_evar_model2, make_model2()),
])
def test_unattainable_target_is_rejected(solve, params, level):
    with pytest.raises(InfeasibleTargetError):
        solve(params, level, float(model_mean(params).max()) + 0.01)
    with pytest.raises(InfeasibleTargetError):
        solve(params, level, float(model_mean(params).min()) - 0.01)


@pytest.mark.parametrize("solve, params", [
    (solve_evar_model1, make_model1()),
    (solve_evar_model2, make_model2()),
])
def test_solution_satisfies_kkt_and_constraints(solve, params, level):
    mu_star = _interior_target(params)
    portfolio, result, report = solve(params, level, mu_star)
    _assert_feasible(portfolio, model_mean(params), mu_star)
    assert report.stationarity_inf_norm <= KKT_TOLERANCE
    assert report.primal_feasibility <= KKT_TOLERANCE
    assert report.complementarity <= KKT_TOLERANCE
    assert report.dual_feasibility <= KKT_TOLERANCE
    assert result.value == pytest.approx(evar_model(params, portfolio.weights, level).value, abs=1e-7)


@pytest.mark.parametrize("solve, params, step", [
    (solve_evar_model1, make_model1(), 0.01),
    (solve_evar_model2, make_model2(), 0.005),
])
def test_joint_optimum_matches_grid_search(solve, params, step, level):
    mu_star = _interior_target(params, 0.5)
    _, result, _ = solve(params, level, mu_star)
    oracle = grid_minimum(laplace_functional(params), model_mean(params), level, mu_star, step)
    assert result.value <= oracle + 1e-9
    assert result.value == pytest.approx(oracle, abs=1e-4)


def test_solution_beats_random_feasible_points(model1, level):
    mu_star = _interior_target(model1)
    _, result, _ = solve_evar_model1(model1, level, mu_star)
    means = model_mean(model1)
    rng = np.random.default_rng(5)
    for _ in range(200):
        weights = random_feasible_weights(means, mu_star, rng)
        assert result.value <= evar_model(model1, weights, level).value + 1e-9


def test_random_restarts_agree(model1, level):
    mu_star = _interior_target(model1, 0.6)
    means = model_mean(model1)
    rng = np.random.default_rng(17)
    values = []
    for _ in range(20):
        start = (random_feasible_weights(means, mu_star, rng), float(rng.uniform(0.5, 20.0)))
        values.append(solve_evar_model1(model1, level, mu_star, start=start)[1].value)
    assert max(values) - min(values) <= 1e-6


def test_multi_start_solve_matches_single_start(model2, level):
    mu_star = _interior_target(model2)
    single = solve_evar_model2(model2, level, mu_star)[1].value
    multi = solve_evar_model2(model2, level, mu_star, starts=4, seed=3)[1].value
    assert multi == pytest.approx(single, abs=1e-8)


def test_jump_free_optimum_equals_min_variance(gaussian_model2, level):
    means = model_mean(gaussian_model2)
    cov = model_covariance(gaussian_model2)
    for mu_star in np.linspace(means.min(), means.max(), 12)[1:-1]:
        portfolio, _, _ = solve_evar_model2(gaussian_model2, level, float(mu_star))
        markowitz = solve_min_variance(cov, means, float(mu_star))
        np.testing.assert_allclose(portfolio.weights, markowitz.weights, atol=1e-4)


# --- KKT checker ---

def test_perturbed_solution_fails_stationarity(model2, level):
    mu_star = _interior_target(model2)
    portfolio, result, report = solve_evar_model2(model2, level, mu_star)
    weights = np.asarray(portfolio.weights)
    weights[int(np.argmax(weights))] += 0.01
    weights /= weights.sum()
    perturbed = kkt_check_model2(model2, level, (weights, result.s_star), mu_star, report.multipliers)
    assert perturbed.stationarity_inf_norm > 1e-3


def test_interior_point_with_zero_multipliers_has_zero_complementarity(model1, level):
    weights = [0.3, 0.3, 0.4]
    mu_star = float(model_mean(model1) @ weights)
    multipliers = Multipliers(nu=[0.0] * 4, eta=[0.0, 0.0])
    report = kkt_check_model1(model1, level, (weights, 3.0), mu_star, multipliers)
    assert report.complementarity == 0.0
    assert report.dual_feasibility == 0.0
    assert report.primal_feasibility <= 1e-15


def test_recovered_multipliers_are_dual_feasible(model1, level):
    mu_star = _interior_target(model1)
    portfolio, result, _ = solve_evar_model1(model1, level, mu_star)
    report = kkt_check_model1(model1, level, (portfolio.weights, result.s_star), mu_star)
    assert min(report.multipliers.nu) >= 0.0
    assert len(report.multipliers.nu) == model1.n + 1
    assert len(report.multipliers.eta) == 2
    assert report.max_norm() <= KKT_TOLERANCE


def test_tie_break_prefers_lexicographically_smallest():
    candidates = [(1.0, np.array([0.5, 0.5, 2.0])), (1.0 + 1e-12, np.array([0.2, 0.8, 2.0])),
                  (1.5, np.array([0.0, 1.0, 2.0]))]
    chosen, notes = _pick_tie_break(candidates)
    np.testing.assert_array_equal(chosen, [0.2, 0.8, 2.0])
    assert notes


# --- Minimum variance ---

def test_min_variance_symmetric_case():
    portfolio = solve_min_variance(np.eye(4), np.full(4, 0.05), 0.05)
    np.testing.assert_allclose(portfolio.weights, [0.25] * 4, atol=1e-12)


def test_min_variance_target_at_one_asset_mean():
    cov = np.array([[0.04, 0.01], [0.01, 0.09]])
    portfolio = solve_min_variance(cov, np.array([0.05, 0.1]), 0.05)
    np.testing.assert_allclose(portfolio.weights, [1.0, 0.0], atol=1e-12)


def test_min_variance_matches_grid_search(model1):
    cov = model_covariance(model1)
    means = model_mean(model1)
    mu_star = _interior_target(model1, 0.3)
    portfolio = solve_min_variance(cov, means, mu_star)
    _assert_feasible(portfolio, means, mu_star)
    best = np.inf
    m1, m2, m3 = means
    for w1 in np.arange(0.0, 1.005, 0.01):
        w2 = (mu_star - m1 * w1 - m3 * (1.0 - w1)) / (m2 - m3)
        w3 = 1.0 - w1 - w2
        if w2 >= 0.0 and w3 >= 0.0:
            w = np.array([w1, w2, w3])
            best = min(best, float(w @ cov @ w))
    weights = np.asarray(portfolio.weights)
    assert float(weights @ cov @ weights) == pytest.approx(best, abs=1e-4)
    assert min_variance_kkt_report(cov, means, weights, mu_star).max_norm() <= KKT_TOLERANCE


def test_min_variance_rejects_unattainable_target():
    with pytest.raises(InfeasibleTargetError):
        solve_min_variance(np.eye(2), np.array([0.01, 0.02]), 0.05)


def test_feasible_start_hits_target(model1):
    means = model_mean(model1)
    mu_star = _interior_target(model1, 0.9)
    weights = feasible_start(means, mu_star)
    assert weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert float(means @ weights) == pytest.approx(mu_star, abs=1e-12)


# --- Frontier ---

def test_reference_evar_frontier_is_unimodal(reference_model1, level):
    targets = frontier_targets(reference_model1, 9)
    points = efficient_frontier(reference_model1, level, targets, RiskKind.EVAR, jobs=1)
    assert [p.target_return for p in points] == targets
    assert all(p.error is None for p in points)
    for point in points:
        assert sum(point.weights) == pytest.approx(1.0, abs=1e-10)
        assert np.isfinite(point.evar_value)
        assert np.isfinite(point.stdev_value)
    values = [p.evar_value for p in points]
    lowest = int(np.argmin(values))
    assert all(a >= b - 1e-9 for a, b in zip(values[:lowest], values[1:lowest + 1]))
    assert all(a <= b + 1e-9 for a, b in zip(values[lowest:], values[lowest + 1:]))


def test_stdev_frontier_reports_both_measures(reference_model2, level):
    targets = frontier_targets(reference_model2, 5)
    points = efficient_frontier(reference_model2, level, targets, RiskKind.STDEV, jobs=1)
    assert all(p.risk_kind == RiskKind.STDEV and p.error is None for p in points)
    stdevs = [p.stdev_value for p in points]
    lowest = int(np.argmin(stdevs))
    assert all(a >= b - 1e-12 for a, b in zip(stdevs[:lowest], stdevs[1:lowest + 1]))
    assert all(a <= b + 1e-12 for a, b in zip(stdevs[lowest:], stdevs[lowest + 1:]))
    assert all(np.isfinite(p.evar_value) for p in points)


def test_single_target_sweep_equals_single_solve(model1, level):
    mu_star = _interior_target(model1)
    [point] = efficient_frontier(model1, level, [mu_star], RiskKind.EVAR, jobs=1)
    portfolio, result, _ = solve_evar_model1(model1, level, mu_star)
    assert point.evar_value == result.value
    assert point.weights == portfolio.weights


def test_frontier_collects_per_point_errors(model1, level):
    means = model_mean(model1)
    points = efficient_frontier(model1, level, [float(means.mean()), float(means.max()) + 1.0],
                                RiskKind.EVAR, jobs=1)
    assert points[0].error is None
    assert points[1].error.startswith("INFEASIBLE_TARGET")
    assert points[1].weights is None


def test_parallel_frontier_matches_serial(model2, level):
    targets = frontier_targets(model2, 4)[1:3]
    serial = efficient_frontier(model2, level, targets, RiskKind.EVAR, jobs=1)
    parallel = efficient_frontier(model2, level, targets, RiskKind.EVAR, jobs=2)
    assert [p.evar_value for p in parallel] == [p.evar_value for p in serial]
