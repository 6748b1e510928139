from __future__ import annotations

import os
from typing import Callable

import numpy as np
import pytest

from proshrink.boxset import BoxSet
from proshrink.dual import Problem
from proshrink.experiments import InstanceSpec, generate_instance


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if os.environ.get("PROSHRINK_FULL_SCALE") == "1":
        return
    skip = pytest.mark.skip(reason="set PROSHRINK_FULL_SCALE=1 to run the full-size sweep")
    for item in items:
        if "full_scale" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test data."""
    return np.random.default_rng(20240611)


@pytest.fixture
def one_d_problem() -> Problem:
    """A=[1], b=0.5, X=[-1, 1], tau=1, u=0; solution x=0.5 with dual y=1.5."""
    return Problem(np.array([[1.0]]), np.array([0.5]), BoxSet.uniform(1, -1.0, 1.0), tau=1.0)


@pytest.fixture
def unit_box() -> Callable[[int], BoxSet]:
    """Factory for the box [-1, 1]^n."""
    return lambda n: BoxSet.uniform(n, -1.0, 1.0)


@pytest.fixture
def recovery_problem() -> tuple[Problem, np.ndarray]:
    """40x80 Gaussian instance with 5 +/-1 spikes, box [-1, 1]^80, tau=10."""
    A, x0, b = generate_instance(InstanceSpec(m=40, n=80, sparsity=5, seed=3))
    return Problem(A, b, BoxSet.uniform(80, -1.0, 1.0), tau=10.0), x0


@pytest.fixture
def small_random_problem(rng: np.random.Generator) -> Problem:
    """20x40 Gaussian problem with mixed intervals and a nonzero anchor."""
    m, n = 20, 40
    lower = np.where(rng.random(n) < 0.5, -1.0, -np.inf)
    upper = np.where(rng.random(n) < 0.5, 2.0, np.inf)
    A = rng.standard_normal((m, n))
    x_feasible = np.clip(rng.standard_normal(n), lower, upper)
    return Problem(A, A @ x_feasible, BoxSet(lower, upper), tau=3.0, u=rng.uniform(-1.0, 1.0, n))
