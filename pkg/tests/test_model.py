# tests/test_model.py

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats
from scipy.integrate import trapezoid

from domain.schemas import Model1Params, Model2Params, TruncationPolicy
from model_utils import (
    covariance_model1,
    covariance_model2,
    density_model1,
    density_model2,
    laplace_exponent_model1,
    laplace_exponent_model2,
    laplace_functional,
    laplace_gradient_model1,
    laplace_hessian_model1,
    mean_model1,
    mean_model2,
    model_covariance,
    model_mean,
    poisson_cutoff,
    portfolio_mixture,
    sample_model,
    sample_model1,
    sample_model2,
)
from utils.errors import ConfigError, ExponentOverflowError, TruncationBudgetExceededError
from utils.numerics import central_difference_gradient, central_difference_hessian
from test_helpers import correlated, make_model1, make_model2, random_model1, random_model2


def _one_asset_model1() -> Model1Params:
    return Model1Params(n=1, mu_tilde=[0.01], sigma=0.02, lambda_=[0.3], theta=[-0.04],
                        sigma_jump=[0.03], gamma=0.2, mu=[-0.05], A=[[0.0025]])


def _one_asset_model2() -> Model2Params:
    return Model2Params(n=1, mu_tilde=[0.01], Q=[[0.0004]], lambda_=0.3, mu=[-0.05], A=[[0.0025]])


# --- Moments ---

def test_mean_model1_is_componentwise(model1):
    expected = np.array([0.05 - 0.2 * 0.05 - 0.1 * 0.1,
                         0.08 - 0.3 * 0.08 - 0.1 * 0.05,
                         0.12 - 0.1 * 0.1 - 0.1 * 0.08])
    np.testing.assert_allclose(mean_model1(model1), expected, atol=1e-15)


def test_covariance_model1_entries(model1):
    cov = covariance_model1(model1)
    a = np.asarray(model1.A)
    assert cov[0, 1] == pytest.approx(0.1 * (a[0, 1] + 0.1 * 0.05), abs=1e-15)
    assert cov[2, 2] == pytest.approx(0.15 ** 2 + 0.1 * (0.1 ** 2 + 0.15 ** 2) + 0.1 * (a[2, 2] + 0.08 ** 2),
                                      abs=1e-15)
    np.testing.assert_array_equal(cov, cov.T)


def test_covariance_model2_entries(model2):
    cov = covariance_model2(model2)
    q = np.asarray(model2.Q)
    a = np.asarray(model2.A)
    mu = np.asarray(model2.mu)
    np.testing.assert_allclose(cov, q + 0.2 * (a + np.outer(mu, mu)), atol=1e-15)
    np.testing.assert_allclose(mean_model2(model2), np.asarray(model2.mu_tilde) + 0.2 * mu, atol=1e-15)


@pytest.mark.parametrize("params", [make_model1(), make_model2()])
def test_laplace_derivatives_at_zero_give_moments(params):
    kappa = laplace_functional(params)
    zero = np.zeros(params.n)
    assert kappa(zero) == 0.0
    np.testing.assert_allclose(-kappa.gradient(zero), model_mean(params), atol=1e-14)
    np.testing.assert_allclose(kappa.hessian(zero), model_covariance(params), atol=1e-14)


@pytest.mark.parametrize("params", [make_model1(), make_model2()])
def test_laplace_gradient_and_hessian_match_finite_differences(params):
    kappa = laplace_functional(params)
    rng = np.random.default_rng(7)
    for _ in range(10):
        u = rng.uniform(-3.0, 3.0, size=params.n)
        np.testing.assert_allclose(kappa.gradient(u), central_difference_gradient(kappa, u),
                                   rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(kappa.hessian(u), central_difference_hessian(kappa, u),
                                   rtol=1e-4, atol=1e-6)


def test_module_level_laplace_helpers_agree(model1, model2):
    u = np.array([0.5, -1.0, 2.0])
    assert laplace_exponent_model1(model1, u) == laplace_functional(model1)(u)
    assert laplace_exponent_model2(model2, u) == laplace_functional(model2)(u)
    np.testing.assert_array_equal(laplace_gradient_model1(model1, u), laplace_functional(model1).gradient(u))
    np.testing.assert_array_equal(laplace_hessian_model1(model1, u), laplace_functional(model1).hessian(u))


@pytest.mark.parametrize("make_random", [random_model1, random_model2])
def test_laplace_is_log_mgf_under_monte_carlo(make_random):
    draws = 1_000_000
    rng = np.random.default_rng(11)
    failures = 0
    cases = 0
    for index in range(20):
        params = make_random(rng)
        kappa = laplace_functional(params)
        sample = sample_model(params, draws, seed=100 + index).returns
        for _ in range(10):
            u = rng.uniform(-2.0, 2.0, size=params.n)
            values = np.exp(-sample @ u)
            empirical = np.log(values.mean())
            standard_error = values.std() / (values.mean() * np.sqrt(draws))
            cases += 1
            if abs(kappa(u) - empirical) > 3.0 * standard_error:
                failures += 1
    assert failures <= 0.05 * cases, f"{failures} of {cases} directions outside 3 standard errors"


def test_exponent_overflow_is_reported(model2):
    with pytest.raises(ExponentOverflowError):
        laplace_exponent_model2(model2, np.array([1e3, 1e3, 1e3]))


def test_exponent_cap_is_configurable(model2):
    u = np.array([10.0, 10.0, 10.0])
    assert np.isfinite(laplace_exponent_model2(model2, u))
    with pytest.raises(ExponentOverflowError):
        laplace_exponent_model2(model2, u, exponent_cap=1.0)


# --- Densities ---

def test_poisson_cutoff_and_budget():
    policy = TruncationPolicy(tail_mass=1e-10, max_terms=64)
    assert poisson_cutoff(0.0, policy) == 0
    assert 5 <= poisson_cutoff(0.3, policy) <= 12
    with pytest.raises(TruncationBudgetExceededError):
        poisson_cutoff(100.0, policy)


@pytest.mark.parametrize("density, params", [
    (density_model1, _one_asset_model1()),
    (density_model2, _one_asset_model2()),
])
def test_one_asset_density_integrates_to_one(density, params):
    grid = np.linspace(-2.0, 2.0, 400_001)
    values = density(params, grid)
    assert np.all(values >= 0.0)
    assert trapezoid(values, grid) == pytest.approx(1.0, abs=1e-6)


def test_density_single_point_returns_float():
    params = _one_asset_model2()
    value = density_model2(params, 0.01)
    assert isinstance(value, float)
    assert value > 0.0


def test_gaussian_density_matches_closed_form():
    params = Model2Params(n=2, mu_tilde=[0.0, 0.0], Q=[[1.0, 0.0], [0.0, 1.0]], lambda_=0.0,
                          mu=[0.0, 0.0], A=[[1.0, 0.0], [0.0, 1.0]])
    assert density_model2(params, [0.0, 0.0]) == pytest.approx(1.0 / (2.0 * np.pi), rel=1e-12)


def test_density_model1_budget_is_enforced():
    params = make_model1(lambda_=[60.0, 0.3, 0.1])
    with pytest.raises(TruncationBudgetExceededError):
        density_model1(params, [0.0, 0.0, 0.0], TruncationPolicy(max_terms=64))


@pytest.mark.parametrize("density, params", [
    (density_model1, _one_asset_model1()),
    (density_model2, _one_asset_model2()),
    (density_model1, make_model1()),
    (density_model2, make_model2()),
])
def test_finer_truncation_leaves_density_unchanged(density, params):
    points = np.random.default_rng(9).multivariate_normal(model_mean(params), model_covariance(params), size=25)
    reference = density(params, points, TruncationPolicy(tail_mass=1e-10, max_terms=64))
    for policy in (TruncationPolicy(tail_mass=1e-10, max_terms=128), TruncationPolicy(tail_mass=5e-11, max_terms=64)):
        np.testing.assert_allclose(density(params, points, policy), reference, rtol=0.0, atol=1e-9)


@pytest.mark.parametrize("density, params", [
    (density_model1, _one_asset_model1()),
    (density_model2, _one_asset_model2()),
])
def test_one_asset_density_matches_kernel_estimate(density, params):
    draws = sample_model(params, 1_000_000, seed=31).returns[:, 0]
    kde = stats.gaussian_kde(draws)
    bandwidth = float(np.sqrt(kde.covariance[0, 0]))
    # expected KDE value: the density smoothed by the same Gaussian kernel
    grid = np.linspace(draws.mean() - 12.0 * draws.std(), draws.mean() + 12.0 * draws.std(), 40_001)
    values = density(params, grid)
    points = np.quantile(draws, [0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.98])
    smoothed = np.array([trapezoid(values * stats.norm.pdf(x - grid, scale=bandwidth), grid) for x in points])
    standard_error = np.sqrt(smoothed / (2.0 * np.sqrt(np.pi) * draws.size * bandwidth))
    np.testing.assert_array_less(np.abs(kde(points) - smoothed), 5.0 * standard_error)


# --- Portfolio mixture ---

@pytest.mark.parametrize("params", [make_model1(), make_model2()])
def test_portfolio_mixture_reproduces_moments(params):
    weights = np.array([0.2, 0.5, 0.3])
    probs, means, variances = portfolio_mixture(params, weights)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    mixture_mean = probs @ means
    mixture_var = probs @ (variances + means ** 2) - mixture_mean ** 2
    assert mixture_mean == pytest.approx(float(model_mean(params) @ weights), abs=1e-9)
    assert mixture_var == pytest.approx(float(weights @ model_covariance(params) @ weights), rel=1e-7)


# --- Samplers ---

@pytest.mark.parametrize("params", [make_model1(), make_model2()])
def test_sampler_moments_match_model(params):
    draws = 200_000
    sample = sample_model(params, draws, seed=3).returns
    cov = model_covariance(params)
    standard_error = np.sqrt(np.diag(cov) / draws)
    assert np.all(np.abs(sample.mean(axis=0) - model_mean(params)) < 4.0 * standard_error)
    np.testing.assert_allclose(np.cov(sample, rowvar=False), cov, rtol=0.05, atol=5e-4)


def test_sampler_is_reproducible(model1, model2):
    first = sample_model1(model1, 100, seed=5)
    again = sample_model1(model1, 100, seed=5)
    other_stream = sample_model1(model1, 100, seed=5, stream=1)
    np.testing.assert_array_equal(first.returns, again.returns)
    assert not np.array_equal(first.returns, other_stream.returns)
    assert sample_model2(model2, 10, seed=1).asset_names == ["asset_1", "asset_2", "asset_3"]


def test_sampler_handles_semidefinite_jump_covariance():
    params = make_model2(A=[[0.01, 0.01, 0.0], [0.01, 0.01, 0.0], [0.0, 0.0, 0.0]])
    sample = sample_model2(params, 1000, seed=2)
    assert np.all(np.isfinite(sample.returns))


def test_sampler_rejects_empty_count(model2):
    with pytest.raises(ConfigError):
        sample_model2(model2, 0, seed=1)


@pytest.mark.parametrize("sampler, params", [(sample_model1, make_model1()), (sample_model2, make_model2())])
def test_sampler_rejects_negative_seed(sampler, params):
    with pytest.raises(ConfigError):
        sampler(params, 10, seed=-1)


# --- Parameter validation ---

def test_params_reject_indefinite_jump_covariance():
    with pytest.raises(ValidationError):
        make_model2(A=[[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def test_params_reject_negative_intensity():
    with pytest.raises(ValidationError):
        make_model1(lambda_=[-0.1, 0.3, 0.1])
    with pytest.raises(ValidationError):
        make_model2(lambda_=-1.0)


def test_params_reject_wrong_lengths():
    with pytest.raises(ValidationError):
        make_model2(mu=[0.0, 0.0])
    with pytest.raises(ValidationError):
        make_model1(A=correlated([0.1, 0.1], 0.0))


def test_params_accept_lambda_alias():
    params = Model2Params.model_validate({
        "n": 1, "mu_tilde": [0.0], "Q": [[1.0]], "lambda": 0.5, "mu": [0.0], "A": [[1.0]],
    })
    assert params.lambda_ == 0.5
    assert params.model_dump(by_alias=True)["lambda"] == 0.5
