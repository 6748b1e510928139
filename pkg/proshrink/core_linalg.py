"""
Dense float64 linear algebra used by every solver.

Matrices are plain 2-D NumPy arrays of shape (m, n) acting as A: R^n -> R^m,
vectors are 1-D float64 arrays. The helpers here validate shapes once and
keep the products in a single, deterministic summation order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

DenseMatrix = NDArray[np.float64]
Vector = NDArray[np.float64]


class DimensionMismatchError(ValueError):
    """Raised when array lengths or shapes do not line up."""


def as_matrix(A: ArrayLike, name: str = "A") -> DenseMatrix:
    """
    Validate and convert a matrix to a C-contiguous float64 array.

    Args:
        A: Anything NumPy can turn into a 2-D array
        name: Name used in error messages

    Returns:
        float64 array of shape (m, n) with m, n >= 1

    Raises:
        DimensionMismatchError: If A is not 2-D or has an empty dimension
        ValueError: If any entry is not finite
    """
    arr = np.ascontiguousarray(A, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatchError(f"{name} must have at least one row and column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_vector(x: ArrayLike, name: str = "x", length: Optional[int] = None) -> Vector:
    """
    Validate and convert a vector to a 1-D float64 array.

    Args:
        x: Scalar or 1-D array-like
        name: Name used in error messages
        length: Expected length, checked when given

    Returns:
        1-D float64 array (a copy only when conversion requires one)

    Raises:
        DimensionMismatchError: On wrong dimensionality or length
        ValueError: If any entry is not finite
    """
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DimensionMismatchError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def matvec(A: DenseMatrix, x: Vector) -> Vector:
    """Return A @ x, checking that len(x) equals the column count."""
    if x.shape != (A.shape[1],):
        raise DimensionMismatchError(
            f"matvec: x has shape {x.shape}, A has {A.shape[1]} columns"
        )
    return A @ x


def rmatvec(A: DenseMatrix, y: Vector) -> Vector:
    """Return A^T @ y, checking that len(y) equals the row count."""
    if y.shape != (A.shape[0],):
        raise DimensionMismatchError(
            f"rmatvec: y has shape {y.shape}, A has {A.shape[0]} rows"
        )
    return A.T @ y


class VectorNorms(NamedTuple):
    l1: float
    l2: float
    linf: float


def norms(x: Vector) -> VectorNorms:
    """l1, l2 and l-infinity norms of x (all zero for the zero vector)."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return VectorNorms(0.0, 0.0, 0.0)
    return VectorNorms(
        l1=float(np.linalg.norm(x, 1)),
        l2=float(np.linalg.norm(x, 2)),
        linf=float(np.linalg.norm(x, np.inf)),
    )


@dataclass(frozen=True)
class SpectralNormEstimate:
    """
    Result of a power-iteration run on A^T A.

    Attributes:
        sigma: Estimated largest singular value (a lower bound on ||A||_2)
        iterations: Power iterations performed
        converged: False when max_iter was hit before the relative change
            dropped below tol; sigma is then the best estimate seen
        tol: Tolerance the run was asked for
    """

    sigma: float
    iterations: int
    converged: bool
    tol: float

    @property
    def inflated(self) -> float:
        """sigma * (1 + 10 * tol), the value step-size rules divide by."""
        return self.sigma * (1.0 + 10.0 * self.tol)


def spectral_norm(
    A: DenseMatrix,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    seed: int = 0,
) -> SpectralNormEstimate:
    """
    Estimate ||A||_2 by power iteration on A^T A.

    Starts from a seeded standard-normal vector, and after each
    multiplication measures sigma = ||A v|| for the unit iterate v, so the
    estimate never exceeds the true norm. Stops when the relative change
    in sigma falls below tol.

    Args:
        A: Dense (m, n) matrix
        tol: Relative-change stopping tolerance, must be positive
        max_iter: Iteration cap, must be >= 1
        seed: Seed for the start vector

    Returns:
        SpectralNormEstimate; converged=False signals the cap was hit

    Raises:
        ValueError: If tol <= 0 or max_iter < 1

    Example:
        ```python
        est = spectral_norm(np.diag([3.0, 4.0]))
        print(est.sigma)  # 4.0
        ```
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)

    sigma = float(np.linalg.norm(A @ v))
    for it in range(1, max_iter + 1):
        w = A.T @ (A @ v)
        w_norm = np.linalg.norm(w)
        if w_norm == 0.0:
            # v lies in the null space; A is zero on every direction tried
            return SpectralNormEstimate(0.0, it, True, tol)
        v = w / w_norm
        sigma_new = float(np.linalg.norm(A @ v))
        if abs(sigma_new - sigma) <= tol * sigma_new:
            return SpectralNormEstimate(max(sigma, sigma_new), it, True, tol)
        sigma = max(sigma, sigma_new)

    logger.warning(
        "Power iteration did not reach tol=%g in %d iterations; using sigma=%.17g",
        tol, max_iter, sigma,
    )
    return SpectralNormEstimate(sigma, max_iter, False, tol)
