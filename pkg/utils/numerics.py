# app/utils/numerics.py

"""
Small numerical helpers shared by the model, risk, optimization and estimation modules.
"""

from typing import Callable

import numpy as np
from scipy import linalg

SYMMETRY_TOLERANCE = 1e-12
EIGENVALUE_FLOOR = -1e-10
CHOLESKY_JITTER = 1e-12


def validate_covariance(matrix: np.ndarray, name: str) -> np.ndarray:
    """
    Checks that a matrix is square, symmetric and positive semidefinite.

    Args:
        matrix (np.ndarray): Candidate covariance matrix.
        name (str): Field name used in error messages.

    Returns:
        np.ndarray: The matrix as a float array.

    Raises:
        ValueError: If any check fails (pydantic turns this into a ValidationError).
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{name} has non-finite entries")
    if np.max(np.abs(matrix - matrix.T), initial=0.0) > SYMMETRY_TOLERANCE:
        raise ValueError(f"{name} is not symmetric within {SYMMETRY_TOLERANCE}")
    smallest = np.linalg.eigvalsh(matrix).min() if matrix.size else 0.0
    if smallest < EIGENVALUE_FLOOR:
        raise ValueError(f"{name} is not positive semidefinite (smallest eigenvalue {smallest:.3e})")
    return matrix


def psd_factor(matrix: np.ndarray) -> np.ndarray:
    """
    Square-root factor L with L @ L.T ~= matrix for a PSD matrix.

    Tries a plain Cholesky, then one with a small diagonal jitter, and finally an
    eigen-decomposition with clipped eigenvalues.
    """
    matrix = np.asarray(matrix, dtype=float)
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(matrix + CHOLESKY_JITTER * np.eye(matrix.shape[0]))
    except np.linalg.LinAlgError:
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
        return eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def cholesky_logdet(matrix: np.ndarray):
    """
    Cholesky factorization together with the log-determinant.

    Returns:
        tuple: (cho_factor result, log|matrix|).

    Raises:
        np.linalg.LinAlgError: If the matrix is not positive definite.
    """
    factor = linalg.cho_factor(matrix, lower=True, check_finite=False)
    diagonal = np.diag(factor[0])
    if np.any(diagonal <= 0.0) or not np.all(np.isfinite(diagonal)):
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return factor, 2.0 * float(np.sum(np.log(diagonal)))


def softplus(x):
    """log(1 + e^x), stable for large |x|."""
    return np.logaddexp(0.0, x)


def inverse_softplus(y):
    """Inverse of softplus; zero maps to a very negative but finite value."""
    y = np.maximum(np.asarray(y, dtype=float), 1e-300)
    return y + np.log(-np.expm1(-y))


def central_difference_gradient(
    func: Callable[[np.ndarray], float],
    x: np.ndarray,
    step: float = 1e-6
) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    gradient = np.empty_like(x)
    for i in range(x.size):
        offset = np.zeros_like(x)
        offset[i] = step
        gradient[i] = (func(x + offset) - func(x - offset)) / (2.0 * step)
    return gradient


def central_difference_hessian(
    func: Callable[[np.ndarray], float],
    x: np.ndarray,
    step: float = 1e-5
) -> np.ndarray:
    """Central finite-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=float)
    size = x.size
    hessian = np.empty((size, size))
    for i in range(size):
        for j in range(i, size):
            ei = np.zeros(size)
            ej = np.zeros(size)
            ei[i] = step
            ej[j] = step
            value = (func(x + ei + ej) - func(x + ei - ej)
                     - func(x - ei + ej) + func(x - ei - ej)) / (4.0 * step * step)
            hessian[i, j] = hessian[j, i] = value
    return hessian
