"""
Shrinkage, projected shrinkage and the exact prox oracles that check them.

The central fact used everywhere else in the package is that, for a box X
and tau > 0,

    clamp_X(tau * shrink(v / tau)) == prox of (tau * ||x||_1 + indicator_X) at v

so the proximal step of the box-constrained l1 term costs one soft
threshold and one clip. The oracle functions in this module compute the
same prox independently (by exhaustive candidate comparison) and exist so
that identity can be tested rather than trusted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from proshrink.boxset import BoxSet, Interval, IntervalError
from proshrink.core_linalg import Vector, as_vector

if TYPE_CHECKING:
    from proshrink.dual import Problem


@dataclass(frozen=True)
class ProxSpec:
    """
    Parameters of the function tau * ||x||_1 + indicator of X.

    Attributes:
        tau: Positive l1 weight
        box: The constraint box X
    """

    tau: float
    box: BoxSet

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def shrink(s: ArrayLike) -> NDArray[np.float64]:
    """sign(s) * max(|s| - 1, 0), elementwise."""
    s = np.asarray(s, dtype=np.float64)
    return np.sign(s) * np.maximum(np.abs(s) - 1.0, 0.0)


def shrink_vec(v: ArrayLike, tau: float) -> Vector:
    """
    Soft threshold at level tau: tau * shrink(v / tau).

    Raises:
        ValueError: If tau <= 0
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return tau * shrink(np.asarray(v, dtype=np.float64) / tau)


def scaled_projected_shrink(w: Vector, tau: float, box: BoxSet) -> Vector:
    """
    clamp_X(tau * shrink(w)).

    This is the form the iterations are written in: the argument is already
    divided by tau (w = u / tau + A^T y for the dual map), so no extra
    rescaling happens inside the loop.
    """
    return box.project(tau * shrink(w))


def projected_shrink(v: ArrayLike, spec: ProxSpec) -> Vector:
    """
    Prox of tau * ||.||_1 + indicator_X at v, via projected shrinkage.

    Args:
        v: Point of length n = len(spec.box)
        spec: tau and box

    Returns:
        clamp_X(tau * shrink(v / tau)); always a member of the box

    Raises:
        DimensionMismatchError: If len(v) != len(spec.box)

    Example:
        ```python
        spec = ProxSpec(1.0, BoxSet.uniform(1, -1.0, 1.0))
        projected_shrink([3.0], spec)  # array([1.])
        ```
    """
    v = np.asarray(v, dtype=np.float64)
    return scaled_projected_shrink(v / spec.tau, spec.tau, spec.box)


def _objective_gap(
    t: NDArray[np.float64],
    s: NDArray[np.float64],
    tau: NDArray[np.float64],
    q: NDArray[np.float64],
) -> NDArray[np.float64]:
    # f(t) - f(s) for f(t) = tau|t| + (t - q)^2 / 2, factored so it stays
    # accurate when t and s nearly coincide
    return tau * (np.abs(t) - np.abs(s)) + 0.5 * (t - s) * ((t - q) + (s - q))


def prox_oracle(
    lower: ArrayLike,
    upper: ArrayLike,
    tau: ArrayLike,
    q: ArrayLike,
) -> NDArray[np.float64]:
    """
    Exact minimizer of tau|t| + (t - q)^2 / 2 over [lower, upper], batched.

    The objective is piecewise quadratic with its only kink at 0, and the
    unconstrained minimizers of the two pieces are q - tau and q + tau. The
    constrained minimizer is therefore one of {lower, upper, q - tau,
    q + tau, 0} intersected with the interval; this function compares every
    feasible finite candidate and keeps the best one.

    All arguments broadcast against each other.

    Returns:
        Array of minimizers with the broadcast shape

    Raises:
        ValueError: If tau is not positive somewhere
        IntervalError: If some interval has no feasible candidate, which
            only happens when lower > upper
    """
    lower, upper, tau, q = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64) for a in (lower, upper, tau, q))
    )
    if np.any(~(tau > 0)):
        raise ValueError("tau must be positive")

    candidates = (lower, upper, q - tau, q + tau, np.zeros_like(q))
    best = np.full(q.shape, np.nan)
    for c in candidates:
        feasible = np.isfinite(c) & (c >= lower) & (c <= upper)
        unset = np.isnan(best)
        with np.errstate(invalid="ignore"):
            better = _objective_gap(c, np.where(unset, c, best), tau, q) < 0
        best = np.where(feasible & (unset | better), c, best)

    # 0 or one of q -/+ tau is always feasible for a doubly unbounded interval,
    # and a finite endpoint is feasible otherwise
    empty = np.isnan(best)
    if np.any(empty):
        i = int(np.flatnonzero(empty)[0])
        raise IntervalError(
            f"empty candidate set at index {i}: interval [{lower.flat[i]}, {upper.flat[i]}]"
        )
    return best


def prox_oracle_1d(interval: Interval, tau: float, q: float) -> float:
    """Scalar form of prox_oracle for a single interval."""
    return float(prox_oracle(interval.lower, interval.upper, tau, q))


def sign_shift_projection(interval: Interval, q: float) -> float:
    """
    Project q - sign(c) onto a T1 interval, c being its endpoint nearest 0.

    On T1 intervals this equals project(shrink(q)): the dead zone of the
    shrinkage lands outside the interval and gets clamped to c either way.

    Raises:
        IntervalError: If the interval is not T1
    """
    return interval.project(q - interval.sign_anchor())


def projected_subgradient_residual(
    lower: ArrayLike,
    upper: ArrayLike,
    t: ArrayLike,
    smooth_grad: ArrayLike,
    tau: float,
) -> NDArray[np.float64]:
    """
    Per-coordinate distance from the projected-subgradient optimality condition.

    For f(t) = tau|t| + g(t) with g smooth, t is optimal over [lower, upper]
    iff t = clamp(t - h) for some h in tau * d|t| + g'(t). This returns

        min over such h of |t - clamp(t - h)|

    which is zero exactly at a constrained minimizer. For t != 0 the
    subgradient is a single point; at t = 0 the best choice of the l1 part is
    clip(-g'(t), -tau, tau).

    Args:
        lower, upper: Interval bounds (broadcastable)
        t: Candidate point, must lie in the interval
        smooth_grad: g'(t)
        tau: l1 weight

    Returns:
        Nonnegative residual array
    """
    lower, upper, t, smooth_grad = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64) for a in (lower, upper, t, smooth_grad))
    )
    l1_part = np.where(
        t > 0, tau, np.where(t < 0, -tau, np.clip(-smooth_grad, -tau, tau))
    )
    h = smooth_grad + l1_part
    return np.abs(t - np.clip(t - h, lower, upper))


class OptimalityResidual(NamedTuple):
    primal_feas: float
    fixed_point: float


def optimality_residual(problem: Problem, x: ArrayLike, y: ArrayLike) -> OptimalityResidual:
    """
    Distance of a primal-dual pair from optimality for the anchored model.

    Args:
        problem: A, b, box, tau and anchor u
        x: Primal point, length n
        y: Dual point, length m

    Returns:
        primal_feas = ||Ax - b|| / max(1, ||b||) and
        fixed_point = ||x - x*(y)|| / max(1, ||x||) where
        x*(y) = clamp_X(tau * shrink(u / tau + A^T y)). Both vanish exactly at
        a primal-dual solution.

    Raises:
        DimensionMismatchError: On inconsistent lengths
    """
    x = as_vector(x, "x", problem.n)
    y = as_vector(y, "y", problem.m)
    A, b = problem.A, problem.b

    primal_feas = np.linalg.norm(A @ x - b) / max(1.0, float(np.linalg.norm(b)))
    x_of_y = scaled_projected_shrink(problem.u / problem.tau + A.T @ y, problem.tau, problem.box)
    fixed_point = np.linalg.norm(x - x_of_y) / max(1.0, float(np.linalg.norm(x)))
    return OptimalityResidual(float(primal_feas), float(fixed_point))
