# tests/test_helpers.py

import datetime
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from domain.schemas import Model1Params, Model2Params, RiskLevel
from risk_utils import evar_analytic


def correlated(stdevs: Sequence[float], correlation: float) -> List[List[float]]:
    """Covariance with the given standard deviations and one common correlation."""
    stdevs = np.asarray(stdevs, dtype=float)
    corr = np.full((stdevs.size, stdevs.size), correlation)
    np.fill_diagonal(corr, 1.0)
    return (corr * np.outer(stdevs, stdevs)).tolist()


def make_model1(**overrides) -> Model1Params:
    """
    Three-asset first-model parameters on a unit scale where every term
    contributes visibly to the moments.
    """
    fields = dict(
        n=3,
        mu_tilde=[0.05, 0.08, 0.12],
        sigma=0.15,
        lambda_=[0.2, 0.3, 0.1],
        theta=[-0.05, -0.08, -0.1],
        sigma_jump=[0.1, 0.1, 0.15],
        gamma=0.1,
        mu=[-0.1, -0.05, -0.08],
        A=correlated([0.1, 0.1, 0.1], 0.3),
    )
    fields.update(overrides)
    return Model1Params(**fields)


def make_model2(**overrides) -> Model2Params:
    fields = dict(
        n=3,
        mu_tilde=[0.04, 0.07, 0.11],
        Q=[[0.04, 0.006, 0.004], [0.006, 0.09, 0.012], [0.004, 0.012, 0.16]],
        lambda_=0.2,
        mu=[-0.08, -0.06, -0.1],
        A=correlated([0.1, 0.12, 0.15], 0.4),
    )
    fields.update(overrides)
    return Model2Params(**fields)


def make_gaussian_model2(**overrides) -> Model2Params:
    fields = dict(lambda_=0.0)
    fields.update(overrides)
    return make_model2(**fields)


def make_jump_free_model1(n: int = 3, sigma: float = 0.1) -> Model1Params:
    zeros = [0.0] * n
    return Model1Params(n=n, mu_tilde=list(np.linspace(0.01, 0.03, n)), sigma=sigma, lambda_=zeros,
                        theta=zeros, sigma_jump=zeros, gamma=0.0, mu=zeros, A=np.eye(n).tolist())


def random_model1(rng: np.random.Generator, n: int = 3) -> Model1Params:
    """First-model parameters drawn from ranges typical of annual-scale returns."""
    return Model1Params(
        n=n,
        mu_tilde=rng.uniform(-0.05, 0.12, n).tolist(),
        sigma=float(rng.uniform(0.05, 0.2)),
        lambda_=rng.uniform(0.0, 0.5, n).tolist(),
        theta=rng.uniform(-0.1, 0.05, n).tolist(),
        sigma_jump=rng.uniform(0.02, 0.15, n).tolist(),
        gamma=float(rng.uniform(0.0, 0.5)),
        mu=rng.uniform(-0.1, 0.05, n).tolist(),
        A=correlated(rng.uniform(0.05, 0.15, n), float(rng.uniform(0.0, 0.5))),
    )


def random_model2(rng: np.random.Generator, n: int = 3) -> Model2Params:
    return Model2Params(
        n=n,
        mu_tilde=rng.uniform(-0.05, 0.12, n).tolist(),
        Q=correlated(rng.uniform(0.1, 0.3, n), float(rng.uniform(-0.2, 0.6))),
        lambda_=float(rng.uniform(0.0, 0.5)),
        mu=rng.uniform(-0.1, 0.05, n).tolist(),
        A=correlated(rng.uniform(0.05, 0.15, n), float(rng.uniform(0.0, 0.5))),
    )


def feasible_weights_for(means: np.ndarray, mu_star: float, w1: float) -> Optional[np.ndarray]:
    """Three-asset weights with w_1 fixed that meet the budget and return equalities, if nonnegative."""
    m1, m2, m3 = means
    w2 = (mu_star - m1 * w1 - m3 * (1.0 - w1)) / (m2 - m3)
    w3 = 1.0 - w1 - w2
    if w2 < 0.0 or w3 < 0.0:
        return None
    return np.array([w1, w2, w3])


def grid_minimum(kappa, means: np.ndarray, level: RiskLevel, mu_star: float, step: float = 0.01) -> float:
    """Nested EVaR minimum over a simplex grid in w_1 with a 1-D EVaR solve per point."""
    best = np.inf
    for w1 in np.arange(0.0, 1.0 + step / 2, step):
        weights = feasible_weights_for(means, mu_star, w1)
        if weights is not None:
            best = min(best, evar_analytic(kappa, weights, level).value)
    return best


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> Path:
    """Writes a small CSV file by hand, exactly as given."""
    lines = [",".join(header)] + [",".join(str(cell) for cell in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def weekly_dates(count: int, start: datetime.date = datetime.date(2010, 9, 20)) -> List[str]:
    return [(start + datetime.timedelta(days=7 * i)).isoformat() for i in range(count)]
