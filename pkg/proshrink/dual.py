"""
Lagrange dual of the anchored box-constrained model

    minimize ||x||_1 + ||x - u||^2 / (2 tau)   subject to  Ax = b, x in X.

With L(x, y) = ||x||_1 + ||x - u||^2 / (2 tau) + <y, b - Ax>, the inner
minimization over X has the closed form

    x*(y) = clamp_X(tau * shrink(u / tau + A^T y))

and D(y) = L(x*(y), y) is concave and differentiable with gradient
b - A x*(y). Dual solutions are the points where that gradient vanishes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

from proshrink.boxset import BoxSet
from proshrink.core_linalg import (
    DenseMatrix,
    DimensionMismatchError,
    Vector,
    as_matrix,
    as_vector,
    matvec,
    rmatvec,
)
from proshrink.operators import ProxSpec, scaled_projected_shrink


@dataclass(frozen=True, eq=False)
class Problem:
    """
    One instance of the anchored model.

    Feasibility of X intersected with {Ax = b} is assumed, not checked.

    Attributes:
        A: Sensing matrix, shape (m, n)
        b: Measurements, length m
        box: Constraint box, length n
        tau: Augmentation parameter, positive
        u: Anchor, length n; zeros when omitted (the plain augmented model)

    Example:
        ```python
        problem = Problem(A, A @ x0, BoxSet.uniform(n, -1.0, 1.0), tau=10.0)
        problem.m, problem.n
        ```
    """

    A: DenseMatrix
    b: Vector
    box: BoxSet
    tau: float
    u: Optional[Vector] = field(default=None)

    def __post_init__(self) -> None:
        A = as_matrix(self.A, "A")
        m, n = A.shape
        b = as_vector(self.b, "b", m)
        if len(self.box) != n:
            raise DimensionMismatchError(f"box has {len(self.box)} coordinates, A has {n} columns")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        u = np.zeros(n) if self.u is None else as_vector(self.u, "u", n)

        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def m(self) -> int:
        return int(self.A.shape[0])

    @property
    def n(self) -> int:
        return int(self.A.shape[1])

    @property
    def prox_spec(self) -> ProxSpec:
        return ProxSpec(self.tau, self.box)

    def with_anchor(self, u: ArrayLike, tau: float) -> Problem:
        """Same data with a new anchor and augmentation (proximal-point subproblem)."""
        return dataclasses.replace(self, u=np.asarray(u, dtype=np.float64), tau=tau)

    def unconstrained(self) -> Problem:
        """Same data on the whole-line box."""
        return dataclasses.replace(self, box=BoxSet.whole_line(self.n))


def primal_from_dual(problem: Problem, y: ArrayLike) -> Vector:
    """
    Minimizer of the Lagrangian over the box at dual point y.

    Args:
        problem: Problem instance
        y: Dual point, length m

    Returns:
        clamp_X(tau * shrink(u / tau + A^T y)), the prox of tau||.||_1 + indicator_X
        at u + tau A^T y

    Raises:
        DimensionMismatchError: If len(y) != m
    """
    y = np.asarray(y, dtype=np.float64)
    w = problem.u / problem.tau + rmatvec(problem.A, y)
    return scaled_projected_shrink(w, problem.tau, problem.box)


def lagrangian(problem: Problem, x: Vector, y: Vector) -> float:
    diff = x - problem.u
    return float(
        np.sum(np.abs(x))
        + diff @ diff / (2.0 * problem.tau)
        + y @ (problem.b - matvec(problem.A, x))
    )


def dual_value(problem: Problem, y: ArrayLike) -> float:
    """D(y) = L(x*(y), y)."""
    y = np.asarray(y, dtype=np.float64)
    return lagrangian(problem, primal_from_dual(problem, y), y)


def dual_gradient(problem: Problem, y: ArrayLike) -> Vector:
    """Gradient of D at y: b - A x*(y). Zero exactly on the dual solution set."""
    y = np.asarray(y, dtype=np.float64)
    return problem.b - matvec(problem.A, primal_from_dual(problem, y))
