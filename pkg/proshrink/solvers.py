"""
Iterative solvers built on projected shrinkage.

- proshrink: dual gradient ascent on the anchored model
      x^{k}   = clamp_X(tau * shrink(u / tau + A^T y^{k-1}))
      y^{k}   = y^{k-1} + h (b - A x^{k})
  converging for h in (0, 2 / (tau ||A||^2)) from y^0 = 0.
- lbreg: the same loop on the whole-line box with u = 0 (linearized Bregman).
- proshrink_accelerated: the momentum variant with a theta recursion and an
  optional gradient restart.
- proximal_point_bp: outer proximal-point loop for min ||x||_1 s.t. Ax = b,
  x in X, each subproblem being an anchored model solved by proshrink.
- fbs_box_bpdn: forward-backward splitting for
      min over X of ||x||_1 + ||Ax - b||^2 / (2 lambda).

Every primal iterate is a projected-shrinkage output and so lies in the box.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Literal, Optional, Sequence, Union

import numpy as np
import polars as pl
from numpy.typing import ArrayLike

from proshrink.boxset import BoxSet
from proshrink.core_linalg import (
    DenseMatrix,
    DimensionMismatchError,
    SpectralNormEstimate,
    Vector,
    as_matrix,
    as_vector,
    matvec,
    norms,
    rmatvec,
    spectral_norm,
)
from proshrink.dual import Problem, lagrangian, primal_from_dual
from proshrink.operators import scaled_projected_shrink, shrink

logger = logging.getLogger(__name__)

IterationCallback = Callable[[int, Vector, Vector], None]
MomentumRule = Literal["printed", "squared"]

# The momentum scheme is only stable up to h = 1 / (tau sigma^2)
ACCELERATED_MAX_SAFETY = 1.0


class Termination(str, Enum):
    FEAS_TOL = "FEAS_TOL"
    FP_TOL = "FP_TOL"
    MAX_ITER = "MAX_ITER"
    STALLED = "STALLED"


class SolverDivergenceError(RuntimeError):
    """
    Raised when an iteration produces non-finite values or its residual
    explodes past divergence_factor times the reference residual.

    Attributes:
        iteration: Iteration at which divergence was detected
        residual: Relative primal residual at that iteration
    """

    def __init__(self, message: str, iteration: int, residual: float) -> None:
        super().__init__(message)
        self.iteration = iteration
        self.residual = residual


@dataclass(frozen=True)
class HistoryRecord:
    iteration: int
    primal_feas: float
    fixed_point: float
    dual_value: float


@dataclass
class SolverConfig:
    """
    Knobs shared by the dual solvers.

    Attributes:
        h: Dual step size; None selects step_safety / (tau * sigma^2) with
            sigma the inflated spectral-norm estimate of A
        step_safety: Factor in (0, 2) used by the automatic step. Default 1.9
        tol_feas: Stop once ||Ax - b|| / max(1, ||b||) <= tol_feas
        tol_fp: Optional extra requirement on the fixed-point residual
        max_iter: Iteration cap; hitting it is reported, not raised
        record_history: Keep a per-iteration HistoryRecord list
        theta0: Seed of the momentum recursion (accelerated scheme)
        restart: Enable gradient restart (accelerated scheme)
        momentum_rule: "printed" uses sqrt(theta + 4) in the recursion,
            "squared" the classical sqrt(theta^2 + 4)
        divergence_factor: Residual blow-up factor that aborts a run
        norm_tol: Tolerance of the power iteration estimating ||A||
        norm_seed: Seed of the power iteration start vector
        stall_window: ProShrink only. Once the primal residual is below
            stall_floor, stop with STALLED if it has not dropped under
            stall_ratio times its best value for this many iterations.
            None disables the check
        stall_ratio: Required improvement factor within the window
        stall_floor: Residual level below which stalls are detected
    """

    h: Optional[float] = None
    step_safety: float = 1.9
    tol_feas: float = 1e-10
    tol_fp: Optional[float] = None
    max_iter: int = 50_000
    record_history: bool = False
    theta0: float = 1.0
    restart: bool = False
    momentum_rule: MomentumRule = "printed"
    divergence_factor: float = 1e6
    norm_tol: float = 1e-10
    norm_seed: int = 0
    stall_window: Optional[int] = None
    stall_ratio: float = 0.5
    stall_floor: float = 1e-8

    def __post_init__(self) -> None:
        if self.h is not None and not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if not 0 < self.step_safety < 2:
            raise ValueError(f"step_safety must lie in (0, 2), got {self.step_safety}")
        if self.tol_feas < 0:
            raise ValueError(f"tol_feas must be >= 0, got {self.tol_feas}")
        if self.tol_fp is not None and self.tol_fp < 0:
            raise ValueError(f"tol_fp must be >= 0, got {self.tol_fp}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.theta0 > 0:
            raise ValueError(f"theta0 must be positive, got {self.theta0}")
        if self.momentum_rule not in ("printed", "squared"):
            raise ValueError(f"unknown momentum_rule {self.momentum_rule!r}")
        if not self.divergence_factor > 1:
            raise ValueError(f"divergence_factor must exceed 1, got {self.divergence_factor}")
        if self.stall_window is not None and self.stall_window < 1:
            raise ValueError(f"stall_window must be >= 1, got {self.stall_window}")
        if not 0 < self.stall_ratio < 1:
            raise ValueError(f"stall_ratio must lie in (0, 1), got {self.stall_ratio}")


@dataclass
class SolverResult:
    """
    Outcome of a solver run.

    Attributes:
        x: Final primal iterate (inside the box)
        y: Dual iterate paired with x
        iterations: Iterations of the (final inner) loop
        termination: Why the loop stopped
        history: Per-iteration records when requested, else None
        step: Step size used (h for dual schemes, gamma for FBS)
        sigma: Spectral-norm estimate of A behind the step, if computed
        outer_iterations: Outer steps taken by proximal_point_bp, else 0
    """

    x: Vector
    y: Vector
    iterations: int
    termination: Termination
    history: Optional[list[HistoryRecord]] = None
    step: float = math.nan
    sigma: Optional[float] = None
    outer_iterations: int = 0

    @property
    def converged(self) -> bool:
        return self.termination in (Termination.FEAS_TOL, Termination.FP_TOL)


@dataclass(frozen=True)
class StepChoice:
    """Resolved dual step h, the norm estimate and the bound 2 / (tau sigma^2)."""

    h: float
    estimate: SpectralNormEstimate
    bound: float

    @property
    def exceeds_bound(self) -> bool:
        return self.h >= self.bound


def resolve_dual_step(
    problem: Problem,
    config: SolverConfig,
    estimate: Optional[SpectralNormEstimate] = None,
    max_safety: float = 2.0,
) -> StepChoice:
    """
    Pick the dual step size for a problem.

    The automatic rule is min(step_safety, max_safety) / (tau * sigma_inf^2)
    with sigma_inf = sigma * (1 + 10 tol), so a slightly low power-iteration
    result still leaves h strictly inside (0, 2 / (tau ||A||^2)). A
    user-supplied h is honored even above the bound, with a warning.

    Args:
        problem: Problem instance
        config: Solver settings
        estimate: Reuse a spectral-norm estimate of problem.A
        max_safety: Upper limit on the automatic safety factor; the
            momentum scheme passes 1.0
    """
    if estimate is None:
        estimate = spectral_norm(problem.A, tol=config.norm_tol, seed=config.norm_seed)
    sigma = estimate.sigma
    bound = 2.0 / (problem.tau * sigma**2) if sigma > 0 else math.inf

    if config.h is None:
        inflated = estimate.inflated
        safety = min(config.step_safety, max_safety)
        h = safety / (problem.tau * inflated**2) if inflated > 0 else 1.0
        logger.info("Automatic step h=%.6g (sigma=%.6g, tau=%g, safety=%g)", h, sigma, problem.tau, safety)
    else:
        h = config.h
        if h >= bound:
            logger.warning(
                "Step h=%.6g is not below the convergence bound 2/(tau*sigma^2)=%.6g; "
                "the iteration may diverge", h, bound,
            )
    return StepChoice(h=h, estimate=estimate, bound=bound)


class _DivergenceGuard:
    # Reference residual is floored at 1.0 so warm starts that begin almost
    # feasible do not turn ordinary fluctuations into false alarms
    def __init__(self, factor: float, scheme: str, hint: str) -> None:
        self.factor = factor
        self.scheme = scheme
        self.hint = hint
        self.reference: Optional[float] = None

    def check(self, iteration: int, residual: float, *arrays: Vector) -> None:
        if not math.isfinite(residual) or not all(np.all(np.isfinite(a)) for a in arrays):
            message = f"{self.scheme} produced non-finite values at iteration {iteration}; {self.hint}"
            logger.error(message)
            raise SolverDivergenceError(message, iteration, residual)
        if self.reference is None:
            self.reference = max(residual, 1.0)
            return
        if residual > self.factor * self.reference:
            message = (
                f"{self.scheme} diverged at iteration {iteration}: residual {residual:.3e} "
                f"exceeds {self.factor:.0e} x initial {self.reference:.3e}; {self.hint}"
            )
            logger.error(message)
            raise SolverDivergenceError(message, iteration, residual)


class _StallMonitor:
    def __init__(self, window: int, ratio: float, floor: float) -> None:
        self.window = window
        self.ratio = ratio
        self.floor = floor
        self.best = math.inf
        self.mark = 0

    def stalled(self, iteration: int, residual: float) -> bool:
        if residual > self.floor:
            self.mark = iteration
            return False
        if residual < self.ratio * self.best:
            self.best, self.mark = residual, iteration
            return False
        return iteration - self.mark >= self.window


def _relative_change(new: Vector, old: Vector) -> float:
    return float(np.linalg.norm(new - old) / max(1.0, float(np.linalg.norm(old))))


def _initial_dual(problem: Problem, y0: Optional[ArrayLike]) -> Vector:
    if y0 is None:
        return np.zeros(problem.m)
    return as_vector(y0, "y0", problem.m).copy()


def _is_converged(feas: float, fixed_point: float, config: SolverConfig) -> bool:
    if feas > config.tol_feas:
        return False
    return config.tol_fp is None or fixed_point <= config.tol_fp


def proshrink(
    problem: Problem,
    config: Optional[SolverConfig] = None,
    y0: Optional[ArrayLike] = None,
    callback: Optional[IterationCallback] = None,
    norm_estimate: Optional[SpectralNormEstimate] = None,
) -> SolverResult:
    """
    Solve the anchored box-constrained model by projected shrinkage.

    Iteration k computes x^k = x*(y^{k-1}) and y^k = y^{k-1} + h (b - A x^k),
    stopping as soon as x^k meets the feasibility target (and the optional
    fixed-point target ||x^k - x*(y^k)|| / max(1, ||x^k||) <= tol_fp).

    Args:
        problem: Problem instance
        config: Solver settings; defaults to SolverConfig()
        y0: Starting dual point (zeros when omitted)
        callback: Called as callback(k, x^k, y^k) after every iteration
        norm_estimate: Reuse a spectral-norm estimate of problem.A

    Returns:
        SolverResult with the last (x^k, y^k) pair

    Raises:
        SolverDivergenceError: On non-finite iterates or residual blow-up,
            which signals a manual h outside the stable range

    Example:
        ```python
        problem = Problem(np.array([[1.0]]), np.array([0.5]), BoxSet.uniform(1, -1, 1), tau=1.0)
        result = proshrink(problem, SolverConfig(h=1.0))
        result.x, result.y, result.iterations  # [0.5], [1.5], 4
        ```
    """
    cfg = config or SolverConfig()
    step = resolve_dual_step(problem, cfg, norm_estimate)
    h = step.h
    A, b = problem.A, problem.b
    b_scale = max(1.0, float(np.linalg.norm(b)))
    guard = _DivergenceGuard(
        cfg.divergence_factor, "ProShrink",
        f"step h={h:.6g} against bound {step.bound:.6g}",
    )

    y = _initial_dual(problem, y0)
    x = primal_from_dual(problem, y)
    history: Optional[list[HistoryRecord]] = [] if cfg.record_history else None
    termination = Termination.MAX_ITER
    stall = (
        _StallMonitor(cfg.stall_window, cfg.stall_ratio, cfg.stall_floor)
        if cfg.stall_window is not None else None
    )

    k = 0
    for k in range(1, cfg.max_iter + 1):
        residual = b - matvec(A, x)
        y = y + h * residual
        x_next = primal_from_dual(problem, y)

        feas = float(np.linalg.norm(residual)) / b_scale
        fixed_point = _relative_change(x_next, x)
        guard.check(k, feas, y)

        if history is not None:
            history.append(HistoryRecord(k, feas, fixed_point, lagrangian(problem, x_next, y)))
        if callback is not None:
            callback(k, x, y)
        if _is_converged(feas, fixed_point, cfg):
            termination = Termination.FEAS_TOL
            break
        if stall is not None and stall.stalled(k, feas):
            termination = Termination.STALLED
            break
        x = x_next

    logger.info("ProShrink finished: %s after %d iterations", termination.value, k)
    return SolverResult(
        x=x, y=y, iterations=k, termination=termination, history=history,
        step=h, sigma=step.estimate.sigma,
    )


def lbreg(
    A: ArrayLike,
    b: ArrayLike,
    tau: float,
    config: Optional[SolverConfig] = None,
    callback: Optional[IterationCallback] = None,
) -> SolverResult:
    """Linearized Bregman: proshrink with no box and zero anchor."""
    A = as_matrix(A)
    problem = Problem(A, b, BoxSet.whole_line(A.shape[1]), tau)
    return proshrink(problem, config, callback=callback)


def momentum_coefficients(theta: float, rule: MomentumRule = "printed") -> tuple[float, float]:
    """
    One step of the theta recursion.

    Returns:
        (beta_next, theta_next) with gamma = (sqrt(r + 4) - theta) / 2,
        beta_next = (1 - theta) * gamma and theta_next = theta * gamma, where
        r = theta for the printed rule and r = theta^2 for the squared rule
    """
    radicand = theta if rule == "printed" else theta * theta
    gamma = (math.sqrt(radicand + 4.0) - theta) / 2.0
    return (1.0 - theta) * gamma, theta * gamma


def proshrink_accelerated(
    problem: Problem,
    config: Optional[SolverConfig] = None,
    y0: Optional[ArrayLike] = None,
    callback: Optional[IterationCallback] = None,
    norm_estimate: Optional[SpectralNormEstimate] = None,
) -> SolverResult:
    """
    Momentum-accelerated projected shrinkage.

    Per iteration, starting from z^0 = y^0:
        x^{k+1} = x*(y^k)
        z^{k+1} = y^k + h (b - A x^{k+1})
        beta_{k+1}, theta_{k+1} from momentum_coefficients(theta_k)
        y^{k+1} = z^{k+1} + beta_{k+1} (z^{k+1} - z^k)
    With restart enabled, beta is zeroed and theta reset to theta0 whenever
    <y^k - z^{k+1}, z^{k+1} - z^k> > 0.
    The automatic step uses min(step_safety, 1) / (tau sigma^2); above it the
    iterates can settle into a 2-cycle.

    Returns:
        SolverResult whose x = x*(y) for the returned y. The fixed_point
        history column holds the relative change between successive x.

    Raises:
        SolverDivergenceError: If the residual grows past divergence_factor
            times its initial value; the message points at the theta recursion
    """
    cfg = config or SolverConfig()
    step = resolve_dual_step(problem, cfg, norm_estimate, ACCELERATED_MAX_SAFETY)
    h = step.h
    A, b = problem.A, problem.b
    b_scale = max(1.0, float(np.linalg.norm(b)))
    guard = _DivergenceGuard(
        cfg.divergence_factor, "Accelerated ProShrink",
        f"suspect the theta recursion (momentum_rule={cfg.momentum_rule!r}, theta0={cfg.theta0}); "
        "try momentum_rule='squared' or restart=True",
    )

    y = _initial_dual(problem, y0)
    z_prev = y.copy()
    theta = cfg.theta0
    x = primal_from_dual(problem, y)
    history: Optional[list[HistoryRecord]] = [] if cfg.record_history else None
    termination = Termination.MAX_ITER

    k = 0
    for k in range(1, cfg.max_iter + 1):
        residual = b - matvec(A, x)
        feas = float(np.linalg.norm(residual)) / b_scale
        dual_value = lagrangian(problem, x, y) if history is not None else math.nan

        z = y + h * residual
        beta, theta = momentum_coefficients(theta, cfg.momentum_rule)
        if cfg.restart and float((y - z) @ (z - z_prev)) > 0:
            beta, theta = 0.0, cfg.theta0
        y_next = z + beta * (z - z_prev)
        x_next = primal_from_dual(problem, y_next)
        fixed_point = _relative_change(x_next, x)
        guard.check(k, feas, y_next)

        if history is not None:
            history.append(HistoryRecord(k, feas, fixed_point, dual_value))
        if callback is not None:
            callback(k, x, y)
        if _is_converged(feas, fixed_point, cfg):
            termination = Termination.FEAS_TOL
            break
        z_prev, y, x = z, y_next, x_next

    logger.info("Accelerated ProShrink finished: %s after %d iterations", termination.value, k)
    return SolverResult(
        x=x, y=y, iterations=k, termination=termination, history=history,
        step=h, sigma=step.estimate.sigma,
    )


LambdaSchedule = Union[float, Sequence[float], None]


@dataclass
class OuterConfig:
    """
    Settings of the proximal-point loop.

    Attributes:
        lambda_schedule: A float for a constant lambda, a sequence for an
            explicit schedule (its length caps the outer steps), or None
            for lambda_k = lambda_factor * max(||z^k||_inf, lambda_floor)
        max_outer: Outer step cap K for constant and adaptive schedules
        outer_tol: Stop when ||z^{k+1} - z^k|| / max(1, ||z^k||) <= outer_tol
        inner: Settings of each subproblem solve
        accelerated: Solve subproblems with the accelerated scheme
        lambda_factor: Multiplier of the adaptive schedule
        lambda_floor: Floor on the ||z^k||_inf estimate
    """

    lambda_schedule: LambdaSchedule = None
    max_outer: int = 20
    outer_tol: float = 1e-10
    inner: SolverConfig = field(default_factory=lambda: SolverConfig(tol_feas=1e-13))
    accelerated: bool = False
    lambda_factor: float = 10.0
    lambda_floor: float = 1.0

    def __post_init__(self) -> None:
        schedule = self.lambda_schedule
        if isinstance(schedule, (int, float)):
            if not schedule > 0:
                raise ValueError(f"constant lambda must be positive, got {schedule}")
        elif schedule is not None:
            schedule = [float(v) for v in schedule]
            if not schedule or any(not v > 0 for v in schedule):
                raise ValueError("lambda schedule must be a non-empty list of positive values")
            self.lambda_schedule = schedule
        if self.max_outer < 1:
            raise ValueError(f"max_outer must be >= 1, got {self.max_outer}")
        if self.outer_tol < 0:
            raise ValueError(f"outer_tol must be >= 0, got {self.outer_tol}")
        if not self.lambda_factor > 0 or not self.lambda_floor > 0:
            raise ValueError("lambda_factor and lambda_floor must be positive")

    @property
    def outer_steps(self) -> int:
        if isinstance(self.lambda_schedule, list):
            return len(self.lambda_schedule)
        return self.max_outer

    def lambda_at(self, k: int, z: Vector) -> float:
        schedule = self.lambda_schedule
        if isinstance(schedule, (int, float)):
            return float(schedule)
        if isinstance(schedule, list):
            return schedule[k]
        return self.lambda_factor * max(norms(z).linf, self.lambda_floor)


def proximal_point_bp(
    A: ArrayLike,
    b: ArrayLike,
    box: BoxSet,
    config: Optional[OuterConfig] = None,
) -> SolverResult:
    """
    Solve min ||x||_1 s.t. Ax = b, x in X by the proximal-point method.

    Each outer step solves the anchored model with u = z^k and tau = lambda_k,
    warm-starting the dual variable from the previous outer step, and sets
    z^{k+1} to its solution.

    Returns:
        The final inner SolverResult with outer_iterations filled in;
        termination is MAX_ITER if either the outer loop or the last inner
        solve ran out of iterations

    Example:
        ```python
        result = proximal_point_bp(A, b, BoxSet.uniform(n, -1.0, 1.0))
        result.outer_iterations
        ```
    """
    cfg = config or OuterConfig()
    base = Problem(as_matrix(A), b, box, tau=1.0)
    estimate = spectral_norm(base.A, tol=cfg.inner.norm_tol, seed=cfg.inner.norm_seed)
    solve = proshrink_accelerated if cfg.accelerated else proshrink

    z = np.zeros(base.n)
    y = np.zeros(base.m)
    outer_converged = False
    result: Optional[SolverResult] = None

    k = 0
    for k in range(1, cfg.outer_steps + 1):
        lam = cfg.lambda_at(k - 1, z)
        result = solve(base.with_anchor(z, lam), cfg.inner, y0=y, norm_estimate=estimate)
        change = _relative_change(result.x, z)
        logger.info(
            "Outer step %d: lambda=%.6g, inner %s in %d iterations, change=%.3e",
            k, lam, result.termination.value, result.iterations, change,
        )
        z, y = result.x, result.y
        if change <= cfg.outer_tol:
            outer_converged = True
            break

    assert result is not None
    termination = result.termination
    if not outer_converged:
        logger.warning("Proximal-point loop hit %d outer steps without reaching outer_tol", k)
        termination = Termination.MAX_ITER
    return dataclasses.replace(result, termination=termination, outer_iterations=k)


def fbs_step(
    A: DenseMatrix,
    b: Vector,
    box: BoxSet,
    lam: float,
    gamma: float,
    x: Vector,
) -> Vector:
    """
    One forward-backward step for min over X of ||x||_1 + ||Ax - b||^2 / (2 lam).

    Computes clamp_X(gamma * shrink(x / gamma - A^T (Ax - b) / lam)), which is
    the prox of gamma||.||_1 + indicator_X at the gradient point
    x - (gamma / lam) A^T (Ax - b).
    """
    w = x / gamma - rmatvec(A, matvec(A, x) - b) / lam
    return scaled_projected_shrink(w, gamma, box)


def fbs_box_bpdn(
    A: ArrayLike,
    b: ArrayLike,
    box: BoxSet,
    lam: float,
    gamma: Optional[float] = None,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    step_safety: float = 1.0,
    record_history: bool = False,
    callback: Optional[IterationCallback] = None,
    x0: Optional[ArrayLike] = None,
    norm_estimate: Optional[SpectralNormEstimate] = None,
    divergence_factor: float = 1e6,
) -> SolverResult:
    """
    Forward-backward splitting for the box-constrained l1 least-squares model.

    Args:
        A, b: Data, shapes (m, n) and (m,)
        box: Constraint box
        lam: Data-fit weight lambda > 0
        gamma: Step; None selects step_safety * lam / sigma^2, the gradient of
            ||Ax - b||^2 / (2 lam) being (sigma^2 / lam)-Lipschitz
        tol: Stop when ||x^{k+1} - x^k|| / max(1, ||x^k||) <= tol
        max_iter: Iteration cap
        step_safety: Factor of the automatic step (classical range is (0, 2))
        record_history: Keep per-iteration records; dual_value is NaN here
        callback: Called as callback(k, x^k, y^k)
        x0: Starting point (zeros when omitted)
        norm_estimate: Reuse a spectral-norm estimate of A
        divergence_factor: Residual blow-up factor that aborts the run

    Returns:
        SolverResult with y = (b - Ax) / lam, termination FP_TOL or MAX_ITER

    Raises:
        ValueError: If lam, gamma or step_safety is not positive
        SolverDivergenceError: On non-finite iterates or residual blow-up
    """
    A = as_matrix(A)
    m, n = A.shape
    b = as_vector(b, "b", m)
    if len(box) != n:
        raise DimensionMismatchError(f"box has {len(box)} coordinates, A has {n} columns")
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if not step_safety > 0:
        raise ValueError(f"step_safety must be positive, got {step_safety}")

    estimate = norm_estimate or spectral_norm(A)
    if gamma is None:
        inflated = estimate.inflated
        gamma = step_safety * lam / inflated**2 if inflated > 0 else step_safety * lam
        logger.info("Automatic FBS step gamma=%.6g (sigma=%.6g, lambda=%g)", gamma, estimate.sigma, lam)
    elif not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")

    b_scale = max(1.0, float(np.linalg.norm(b)))
    guard = _DivergenceGuard(
        divergence_factor, "Forward-backward splitting",
        f"step gamma={gamma:.6g} should stay below 2*lambda/sigma^2",
    )
    x = np.zeros(n) if x0 is None else box.project(as_vector(x0, "x0", n))
    history: Optional[list[HistoryRecord]] = [] if record_history else None
    termination = Termination.MAX_ITER

    k = 0
    for k in range(1, max_iter + 1):
        x_next = fbs_step(A, b, box, lam, gamma, x)
        change = _relative_change(x_next, x)
        residual = b - matvec(A, x_next)
        feas = float(np.linalg.norm(residual)) / b_scale
        guard.check(k, feas, x_next)

        x = x_next
        if history is not None:
            history.append(HistoryRecord(k, feas, change, math.nan))
        if callback is not None:
            callback(k, x, residual / lam)
        if change <= tol:
            termination = Termination.FP_TOL
            break

    logger.info("FBS finished: %s after %d iterations", termination.value, k)
    return SolverResult(
        x=x, y=(b - matvec(A, x)) / lam, iterations=k, termination=termination,
        history=history, step=gamma, sigma=estimate.sigma,
    )


TRACE_COLUMNS = ("iter", "primal_feas", "fixed_point", "dual_value")


def residual_trace(result: SolverResult) -> pl.DataFrame:
    """
    Per-iteration residual table of a run recorded with history on.

    Returns:
        DataFrame with columns iter, primal_feas, fixed_point, dual_value in
        iteration order

    Raises:
        ValueError: If the run did not record history
    """
    if result.history is None:
        raise ValueError("Result has no history; run the solver with record_history=True")
    return pl.DataFrame(
        {
            "iter": [r.iteration for r in result.history],
            "primal_feas": [r.primal_feas for r in result.history],
            "fixed_point": [r.fixed_point for r in result.history],
            "dual_value": [r.dual_value for r in result.history],
        },
        schema={"iter": pl.Int64, "primal_feas": pl.Float64, "fixed_point": pl.Float64, "dual_value": pl.Float64},
    )
