"""
Randomized self-test batteries behind `main.py check`.

Each battery draws its cases from a seeded generator, compares an operator
against an independent computation and reports the first counterexample
with enough data to replay it by hand:

- key identity: projected shrinkage vs. the candidate-set prox oracle
- sign shift: projection of shrink(q) vs. projection of q - sign(c) on T1
- firm nonexpansiveness: ||Tv - Tw||^2 <= <v - w, Tv - Tw> and 1-Lipschitz
- dual gradient: central finite differences of D vs. b - A x*(y)

Operators are looked up on the operators module at call time, so a patched
shrink is what gets tested.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from numpy.typing import NDArray

from proshrink import operators
from proshrink.boxset import BoxSet, Interval
from proshrink.dual import Problem, dual_gradient, dual_value

logger = logging.getLogger(__name__)

KEY_IDENTITY_CASES = 100_000
SIGN_SHIFT_CASES = 10_000
FIRM_CASES = 10_000
DUAL_GRADIENT_PROBLEMS = 100
CHUNK = 1_000


@dataclass
class BatteryResult:
    """
    Outcome of one battery.

    Attributes:
        name: Battery name as printed by the CLI
        cases: Number of cases evaluated
        failures: Number of cases outside tolerance
        counterexample: Data of the first failing case, None when all pass
        seconds: Wall time spent
    """

    name: str
    cases: int
    failures: int = 0
    counterexample: Optional[dict[str, Any]] = None
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, failures: int, example: Callable[[], dict[str, Any]]) -> None:
        if failures and self.counterexample is None:
            self.counterexample = example()
        self.failures += failures


def random_intervals(
    rng: np.random.Generator, size: int, t1_only: bool = False
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Draw interval bounds covering every family.

    T1: [a, inf), (-inf, -a], [a, b], [-b, -a]; T2: [-a, b];
    closure cases: [0, b], [-b, 0], the whole line, [-a, inf),
    (-inf, a] and the point [a, a]. Here 0 < a < b.
    """
    kinds = rng.integers(0, 4 if t1_only else 11, size)
    a = rng.uniform(0.05, 5.0, size)
    b = a + rng.uniform(0.05, 5.0, size)
    inf = np.full(size, np.inf)
    zero = np.zeros(size)
    table = [
        (a, inf), (-inf, -a), (a, b), (-b, -a),
        (-a, b),
        (zero, b), (-b, zero), (-inf, inf), (-a, inf), (-inf, a), (a, a),
    ]
    lower = np.select([kinds == k for k in range(len(table))], [lo for lo, _ in table])
    upper = np.select([kinds == k for k in range(len(table))], [hi for _, hi in table])
    return lower, upper


def _chunks(total: int) -> list[int]:
    sizes = [CHUNK] * (total // CHUNK)
    if total % CHUNK:
        sizes.append(total % CHUNK)
    return sizes


def key_identity_battery(rng: np.random.Generator, cases: int = KEY_IDENTITY_CASES) -> BatteryResult:
    """
    Projected shrinkage against prox_oracle.

    Every (interval, tau, q) triple draws its own tau, log-uniform on
    [1e-3, 1e3]; the interval and q are drawn on the scale of that tau so
    every branch of the prox is reached.
    """
    result = BatteryResult("key identity", cases)
    for size in _chunks(cases):
        tau = 10.0 ** rng.uniform(-3.0, 3.0, size)
        lower, upper = random_intervals(rng, size)
        lower, upper = tau * lower, tau * upper
        q = tau * rng.uniform(-10.0, 10.0, size)

        fast = operators.scaled_projected_shrink(q / tau, tau, BoxSet(lower, upper))
        exact = operators.prox_oracle(lower, upper, tau, q)
        scale = np.maximum(1.0, np.maximum(np.abs(q), tau))
        bad = np.flatnonzero(~(np.abs(fast - exact) <= 1e-12 * scale))

        def example(i: int = int(bad[0]) if bad.size else 0) -> dict[str, Any]:
            return {
                "interval": str(Interval(lower[i], upper[i])),
                "tau": float(tau[i]), "q": float(q[i]),
                "projected_shrink": float(fast[i]), "oracle": float(exact[i]),
            }

        result.record(int(bad.size), example)
    return result


def sign_shift_battery(rng: np.random.Generator, cases: int = SIGN_SHIFT_CASES) -> BatteryResult:
    """On T1 intervals, project(shrink(q)) equals project(q - sign(c))."""
    result = BatteryResult("sign shift", cases)
    lower, upper = random_intervals(rng, cases, t1_only=True)
    q = rng.uniform(-10.0, 10.0, cases)
    for i in range(cases):
        interval = Interval(lower[i], upper[i])
        lhs = interval.project(float(operators.shrink(q[i])))
        rhs = operators.sign_shift_projection(interval, float(q[i]))
        if not abs(lhs - rhs) <= 1e-15:
            result.record(1, lambda: {
                "interval": str(interval), "q": float(q[i]),
                "project_shrink": lhs, "project_shifted": rhs,
            })
    return result


def firm_nonexpansive_battery(
    rng: np.random.Generator, cases: int = FIRM_CASES, dim: int = 5
) -> BatteryResult:
    """Firm nonexpansiveness and the 1-Lipschitz bound on random pairs."""
    result = BatteryResult("firm nonexpansive", cases)
    slack = 1e-12
    for size in _chunks(cases):
        tau = float(rng.uniform(0.1, 10.0))
        lower, upper = random_intervals(rng, dim)
        spec = operators.ProxSpec(tau, BoxSet(lower, upper))
        v = tau * rng.uniform(-4.0, 4.0, (size, dim))
        w = tau * rng.uniform(-4.0, 4.0, (size, dim))

        tv = np.stack([operators.projected_shrink(row, spec) for row in v])
        tw = np.stack([operators.projected_shrink(row, spec) for row in w])
        dt = tv - tw
        dv = v - w
        scale = np.maximum(1.0, np.sum(dv * dv, axis=1))
        firm = np.sum(dt * dt, axis=1) <= np.sum(dv * dt, axis=1) + slack * scale
        lipschitz = np.linalg.norm(dt, axis=1) <= np.linalg.norm(dv, axis=1) + slack * np.sqrt(scale)
        bad = np.flatnonzero(~(firm & lipschitz))

        def example(i: int = int(bad[0]) if bad.size else 0) -> dict[str, Any]:
            return {
                "box_lower": lower.tolist(), "box_upper": upper.tolist(), "tau": tau,
                "v": v[i].tolist(), "w": w[i].tolist(),
                "Tv": tv[i].tolist(), "Tw": tw[i].tolist(),
            }

        result.record(int(bad.size), example)
    return result


def _kink_margin(problem: Problem, y: NDArray[np.float64]) -> float:
    w = problem.u / problem.tau + problem.A.T @ y
    t = problem.tau * operators.shrink(w)
    gaps = [np.abs(np.abs(w) - 1.0)]
    for bound in (problem.box.lower, problem.box.upper):
        finite = np.isfinite(bound)
        gaps.append(np.abs(t - bound)[finite] / problem.tau)
    return float(min(np.min(g) for g in gaps if g.size))


def dual_gradient_battery(
    rng: np.random.Generator,
    problems: int = DUAL_GRADIENT_PROBLEMS,
    m: int = 10,
    n: int = 20,
    eps: float = 1e-6,
    margin: float = 1e-3,
) -> BatteryResult:
    """Central differences of D against the closed-form gradient, away from kinks."""
    result = BatteryResult("dual gradient", problems)
    for _ in range(problems):
        tau = float(rng.uniform(0.5, 5.0))
        lower, upper = random_intervals(rng, n)
        problem = Problem(
            rng.standard_normal((m, n)), rng.standard_normal(m),
            BoxSet(lower, upper), tau, rng.uniform(-1.0, 1.0, n),
        )
        y = rng.standard_normal(m)
        for _attempt in range(100):
            if _kink_margin(problem, y) > margin:
                break
            y = rng.standard_normal(m)
        else:
            logger.warning("No kink-free dual point found after 100 draws; testing the last one")

        grad = dual_gradient(problem, y)
        fd = np.empty(m)
        for j in range(m):
            step = np.zeros(m)
            step[j] = eps
            fd[j] = (dual_value(problem, y + step) - dual_value(problem, y - step)) / (2.0 * eps)
        error = float(np.linalg.norm(fd - grad)) / max(1.0, float(np.linalg.norm(grad)))
        if not error <= 1e-5:
            result.record(1, lambda: {
                "tau": tau, "y": y.tolist(), "gradient": grad.tolist(),
                "finite_difference": fd.tolist(), "relative_error": error,
            })
    return result


@dataclass
class CheckReport:
    batteries: list[BatteryResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(b.passed for b in self.batteries)

    @property
    def first_failure(self) -> Optional[BatteryResult]:
        return next((b for b in self.batteries if not b.passed), None)


def run_all(seed: int = 0, scale: float = 1.0) -> CheckReport:
    """
    Run every battery in a fixed order.

    Args:
        seed: Seed of the shared generator
        scale: Multiplier on the case counts (at least one case each)

    Returns:
        CheckReport with one BatteryResult per battery
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    rng = np.random.default_rng(seed)

    def count(base: int) -> int:
        return max(1, math.ceil(base * scale))

    runs: list[Callable[[], BatteryResult]] = [
        lambda: key_identity_battery(rng, count(KEY_IDENTITY_CASES)),
        lambda: sign_shift_battery(rng, count(SIGN_SHIFT_CASES)),
        lambda: firm_nonexpansive_battery(rng, count(FIRM_CASES)),
        lambda: dual_gradient_battery(rng, count(DUAL_GRADIENT_PROBLEMS)),
    ]
    report = CheckReport()
    for run in runs:
        start = time.perf_counter()
        battery = run()
        battery.seconds = time.perf_counter() - start
        logger.info("%s: %d cases, %d failures", battery.name, battery.cases, battery.failures)
        report.batteries.append(battery)
    return report
