"""
Sparse-recovery experiments: seeded Gaussian instances, recovery tests and
sparsity sweeps comparing box-constrained ProShrink against linearized
Bregman (the same solver on the whole-line box).

Random numbers come from numpy's PCG64 generator (np.random.default_rng).
Per-trial seeds are derived from (base_seed, s, trial) through
np.random.SeedSequence, so a sweep gives the same report whatever order or
thread its trials run in.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import polars as pl
from numpy.typing import ArrayLike

from proshrink.boxset import BoxSet
from proshrink.core_linalg import (
    DenseMatrix,
    DimensionMismatchError,
    SpectralNormEstimate,
    Vector,
    as_vector,
    spectral_norm,
)
from proshrink.dual import Problem
from proshrink.solvers import SolverConfig, SolverDivergenceError, proshrink

logger = logging.getLogger(__name__)

RECOVERY_THRESHOLD = 1e-12
REPORT_COLUMNS = (
    "s",
    "trials",
    "recovered_proshrink",
    "recovered_lbreg",
    "rate_proshrink",
    "rate_lbreg",
)


@dataclass(frozen=True)
class InstanceSpec:
    """
    Shape and seed of one random recovery instance.

    Attributes:
        m: Number of measurements
        n: Signal length
        sparsity: Number of nonzeros s, 1 <= s <= n
        amplitude: Magnitude of every nonzero. Default: 1.0
        seed: Seed for numpy's default generator
    """

    m: int
    n: int
    sparsity: int
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ValueError(f"m and n must be >= 1, got m={self.m}, n={self.n}")
        if not 1 <= self.sparsity <= self.n:
            raise ValueError(f"sparsity must lie in [1, n={self.n}], got {self.sparsity}")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")


def generate_instance(spec: InstanceSpec) -> tuple[DenseMatrix, Vector, Vector]:
    """
    Draw a Gaussian sensing matrix and a +/-amplitude sparse signal.

    Draw order from np.random.default_rng(spec.seed): A as an (m, n)
    standard-normal block, then the support via choice(n, s, replace=False),
    then the signs via choice([-1, 1], s).

    Returns:
        (A, x0, b) with b = A @ x0

    Example:
        ```python
        A, x0, b = generate_instance(InstanceSpec(m=50, n=100, sparsity=5, seed=7))
        np.count_nonzero(x0)  # 5
        ```
    """
    rng = np.random.default_rng(spec.seed)
    A = rng.standard_normal((spec.m, spec.n))
    support = rng.choice(spec.n, size=spec.sparsity, replace=False)
    signs = rng.choice(np.array([-1.0, 1.0]), size=spec.sparsity)

    x0 = np.zeros(spec.n)
    x0[support] = spec.amplitude * signs
    return A, x0, A @ x0


def derive_trial_seed(base_seed: int, s: int, trial: int) -> int:
    """Seed of trial `trial` at sparsity `s`, independent of execution order."""
    if base_seed < 0:
        raise ValueError(f"base_seed must be non-negative, got {base_seed}")
    state = np.random.SeedSequence((base_seed, s, trial)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def relative_error(x: ArrayLike, x0: ArrayLike) -> float:
    """
    ||x - x0|| / ||x0|| with x0 the ground truth.

    Raises:
        DimensionMismatchError: If lengths differ
        ValueError: If x0 is the zero vector
    """
    x0 = as_vector(x0, "x0")
    x = as_vector(x, "x", len(x0))
    ref = float(np.linalg.norm(x0))
    if ref == 0.0:
        raise ValueError("relative error is undefined for a zero ground truth")
    return float(np.linalg.norm(x - x0)) / ref


def recovered(x: ArrayLike, x0: ArrayLike, threshold: float = RECOVERY_THRESHOLD) -> bool:
    """True iff relative_error(x, x0) <= threshold."""
    return relative_error(x, x0) <= threshold


@dataclass(frozen=True)
class TrialOutcome:
    s: int
    trial: int
    seed: int
    recovered_proshrink: bool
    recovered_lbreg: bool
    diverged_proshrink: bool = False
    diverged_lbreg: bool = False


@dataclass(frozen=True)
class SweepRow:
    """Tally for one sparsity level; recovered + failed + diverged == trials per arm."""

    s: int
    trials: int
    recovered_proshrink: int
    recovered_lbreg: int
    diverged_proshrink: int = 0
    diverged_lbreg: int = 0

    @property
    def rate_proshrink(self) -> float:
        return self.recovered_proshrink / self.trials

    @property
    def rate_lbreg(self) -> float:
        return self.recovered_lbreg / self.trials


@dataclass
class SweepReport:
    """
    Recovery rates per sparsity level, rows ordered by s.

    Example:
        ```python
        report = sweep(50, 100, [5, 10], trials=10, tau=10.0, box=BoxSet.uniform(100, -1, 1))
        report.to_frame()
        report.write_csv("recovery.csv")
        ```
    """

    rows: list[SweepRow] = field(default_factory=list)

    def to_frame(self) -> pl.DataFrame:
        return pl.DataFrame(
            {
                "s": [r.s for r in self.rows],
                "trials": [r.trials for r in self.rows],
                "recovered_proshrink": [r.recovered_proshrink for r in self.rows],
                "recovered_lbreg": [r.recovered_lbreg for r in self.rows],
                "rate_proshrink": [r.rate_proshrink for r in self.rows],
                "rate_lbreg": [r.rate_lbreg for r in self.rows],
            },
            schema={
                "s": pl.Int64,
                "trials": pl.Int64,
                "recovered_proshrink": pl.Int64,
                "recovered_lbreg": pl.Int64,
                "rate_proshrink": pl.Float64,
                "rate_lbreg": pl.Float64,
            },
        )

    def write_csv(self, path: str | Path) -> Path:
        """Write the report as CSV (LF line endings) and return the path."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().write_csv(path)
        return path

    def row(self, s: int) -> SweepRow:
        for r in self.rows:
            if r.s == s:
                return r
        raise KeyError(f"no row for s={s}")


@dataclass(frozen=True)
class SweepPlan:
    """Named sweep parameters used by the CLI presets."""

    m: int
    n: int
    s_values: tuple[int, ...]
    trials: int
    tau: float
    box_bound: float

    def box(self) -> BoxSet:
        return BoxSet.uniform(self.n, -self.box_bound, self.box_bound)


FULL_SCALE = SweepPlan(m=200, n=400, s_values=tuple(range(1, 81)), trials=100, tau=10.0, box_bound=1.0)
DESK_SCALE = SweepPlan(m=50, n=100, s_values=tuple(range(5, 41, 5)), trials=50, tau=10.0, box_bound=1.0)


def default_sweep_config() -> SolverConfig:
    # Runs that stop improving below 1e-8 end at the stall check, not at max_iter
    return SolverConfig(tol_feas=1e-14, max_iter=50_000, stall_window=5_000)


def _solve_arm(
    problem: Problem,
    x0: Vector,
    config: SolverConfig,
    estimate: SpectralNormEstimate,
    threshold: float,
    label: str,
) -> tuple[bool, bool]:
    try:
        result = proshrink(problem, config, norm_estimate=estimate)
    except SolverDivergenceError as exc:
        logger.warning("%s arm diverged, counted as not recovered: %s", label, exc)
        return False, True
    return recovered(result.x, x0, threshold), False


def run_trial(
    m: int,
    n: int,
    s: int,
    trial: int,
    tau: float,
    box: BoxSet,
    config: SolverConfig,
    base_seed: int,
    threshold: float = RECOVERY_THRESHOLD,
) -> TrialOutcome:
    """Generate one instance and solve it on `box` and on the whole line."""
    seed = derive_trial_seed(base_seed, s, trial)
    A, x0, b = generate_instance(InstanceSpec(m=m, n=n, sparsity=s, seed=seed))
    estimate = spectral_norm(A, tol=config.norm_tol, seed=config.norm_seed)

    boxed = Problem(A, b, box, tau)
    ok_box, div_box = _solve_arm(boxed, x0, config, estimate, threshold, f"ProShrink (s={s}, trial={trial})")
    ok_line, div_line = _solve_arm(
        boxed.unconstrained(), x0, config, estimate, threshold, f"LBreg (s={s}, trial={trial})"
    )
    return TrialOutcome(s, trial, seed, ok_box, ok_line, div_box, div_line)


def _tally(s: int, trials: int, outcomes: Iterable[TrialOutcome]) -> SweepRow:
    outcomes = list(outcomes)
    return SweepRow(
        s=s,
        trials=trials,
        recovered_proshrink=sum(o.recovered_proshrink for o in outcomes),
        recovered_lbreg=sum(o.recovered_lbreg for o in outcomes),
        diverged_proshrink=sum(o.diverged_proshrink for o in outcomes),
        diverged_lbreg=sum(o.diverged_lbreg for o in outcomes),
    )


def sweep(
    m: int,
    n: int,
    s_list: Sequence[int],
    trials: int,
    tau: float,
    box: BoxSet,
    config: Optional[SolverConfig] = None,
    base_seed: int = 0,
    workers: int = 1,
    threshold: float = RECOVERY_THRESHOLD,
) -> SweepReport:
    """
    Recovery-rate sweep over sparsity levels.

    Every (s, trial) pair gets its own derived seed, instance and pair of
    solves; results are collected by key, so the report does not depend on
    `workers`.

    Args:
        m, n: Instance shape
        s_list: Sparsity levels, each in [1, n]
        trials: Instances per level, >= 1
        tau: Augmentation parameter of the solved model
        box: Box of the ProShrink arm (the LBreg arm uses the whole line)
        config: Solver settings. Default: tol_feas 1e-14, max_iter 50000
        base_seed: Non-negative master seed
        workers: Thread count for running trials
        threshold: Relative-error threshold for exact recovery

    Returns:
        SweepReport with one row per distinct s, ascending

    Raises:
        ValueError: On invalid counts or sparsity levels
        DimensionMismatchError: If len(box) != n
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if len(box) != n:
        raise DimensionMismatchError(f"box has {len(box)} coordinates, expected n={n}")
    levels = sorted(set(int(s) for s in s_list))
    if not levels or levels[0] < 1 or levels[-1] > n:
        raise ValueError(f"sparsity levels must be non-empty and lie in [1, {n}], got {list(s_list)}")
    cfg = config or default_sweep_config()

    keys = [(s, t) for s in levels for t in range(trials)]

    def work(key: tuple[int, int]) -> TrialOutcome:
        s, t = key
        return run_trial(m, n, s, t, tau, box, cfg, base_seed, threshold)

    if workers == 1:
        outcomes = {key: work(key) for key in keys}
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = dict(zip(keys, pool.map(work, keys)))

    rows = []
    for s in levels:
        row = _tally(s, trials, (outcomes[(s, t)] for t in range(trials)))
        logger.info(
            "s=%d: ProShrink %d/%d, LBreg %d/%d recovered",
            s, row.recovered_proshrink, trials, row.recovered_lbreg, trials,
        )
        rows.append(row)
    return SweepReport(rows)


def dominance_shortfall(report: SweepReport) -> float:
    """Largest amount by which the LBreg rate exceeds the ProShrink rate (0 if never)."""
    return max(0.0, max((r.rate_lbreg - r.rate_proshrink for r in report.rows), default=0.0))


def statistical_slack(trials: int) -> float:
    """2 / sqrt(trials), the tolerance used when comparing sampled rates."""
    return 2.0 / math.sqrt(trials)
