"""
Tests for operators - shrinkage, projected shrinkage and the prox oracles.

The randomized classes here are the small, fast counterparts of the
self_check batteries; test_self_check.py runs the full-size ones.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from proshrink.boxset import BoxSet, Interval, IntervalError
from proshrink.core_linalg import DimensionMismatchError
from proshrink.dual import Problem
from proshrink.operators import (
    ProxSpec,
    optimality_residual,
    projected_shrink,
    projected_subgradient_residual,
    prox_oracle,
    prox_oracle_1d,
    scaled_projected_shrink,
    shrink,
    shrink_vec,
    sign_shift_projection,
)
from proshrink.self_check import random_intervals


class TestShrink:
    """Test the unit soft threshold."""

    @pytest.mark.parametrize("s,expected", [(2.5, 1.5), (0.5, 0.0), (-3.0, -2.0), (1.0, 0.0)])
    def test_values(self, s: float, expected: float) -> None:
        """Test shrink on hand-computed points."""
        assert shrink(s) == expected

    def test_vector_scaled(self) -> None:
        """Test tau * shrink(v / tau) on two examples."""
        np.testing.assert_array_equal(shrink_vec(np.array([3.0, -0.5]), 1.0), [2.0, 0.0])
        np.testing.assert_array_equal(shrink_vec(np.array([3.0, -5.0]), 2.0), [1.0, -3.0])

    def test_shrink_vec_rejects_nonpositive_tau(self) -> None:
        """Test tau <= 0 raises."""
        with pytest.raises(ValueError):
            shrink_vec(np.ones(2), 0.0)

    def test_shrink_vec_matches_candidates(self, rng: np.random.Generator) -> None:
        """Test shrink_vec is the unconstrained prox of tau|t| via {v-tau, v+tau, 0}."""
        tau = 0.7
        v = rng.uniform(-3.0, 3.0, 500)
        candidates = np.stack([v - tau, v + tau, np.zeros_like(v)])
        objective = tau * np.abs(candidates) + 0.5 * (candidates - v) ** 2
        best = candidates[np.argmin(objective, axis=0), np.arange(v.size)]
        np.testing.assert_allclose(shrink_vec(v, tau), best, atol=1e-14)


class TestProjectedShrink:
    """Test clamp_X(tau * shrink(v / tau))."""

    def test_clamped_from_above(self) -> None:
        """Test tau=1, I=[-1,1], q=3 gives 1."""
        spec = ProxSpec(1.0, BoxSet.uniform(1, -1.0, 1.0))
        np.testing.assert_array_equal(projected_shrink([3.0], spec), [1.0])

    def test_t1_dead_zone_lands_on_endpoint(self) -> None:
        """Test tau=1, I=[1,2], q=0.4 gives 1."""
        spec = ProxSpec(1.0, BoxSet([1.0], [2.0]))
        np.testing.assert_array_equal(projected_shrink([0.4], spec), [1.0])

    def test_t2_dead_zone(self) -> None:
        """Test tau=1, I=[-1,1], q=0.3 gives 0."""
        spec = ProxSpec(1.0, BoxSet.uniform(1, -1.0, 1.0))
        np.testing.assert_array_equal(projected_shrink([0.3], spec), [0.0])

    def test_output_in_box(self, rng: np.random.Generator) -> None:
        """Test every output lies in the box."""
        lower, upper = random_intervals(rng, 1000)
        box = BoxSet(lower, upper)
        out = projected_shrink(rng.uniform(-20.0, 20.0, 1000), ProxSpec(2.0, box))
        assert box.contains(out)

    def test_scaled_form_agrees(self, rng: np.random.Generator) -> None:
        """Test projected_shrink(v) equals scaled_projected_shrink(v / tau)."""
        box = BoxSet.uniform(50, -1.0, 1.5)
        v = rng.uniform(-5.0, 5.0, 50)
        np.testing.assert_array_equal(
            projected_shrink(v, ProxSpec(2.5, box)), scaled_projected_shrink(v / 2.5, 2.5, box)
        )

    def test_length_mismatch(self) -> None:
        """Test v and box of different lengths raise."""
        with pytest.raises(DimensionMismatchError):
            projected_shrink(np.ones(3), ProxSpec(1.0, BoxSet.uniform(2, -1.0, 1.0)))

    def test_prox_spec_validates_tau(self) -> None:
        """Test ProxSpec rejects tau <= 0."""
        with pytest.raises(ValueError):
            ProxSpec(-1.0, BoxSet.uniform(1, -1.0, 1.0))


class TestProxOracle:
    """Test the exact candidate-set minimizer."""

    def test_clamped(self) -> None:
        """Test I=[-1,1], tau=1, q=3 gives 1."""
        assert prox_oracle_1d(Interval(-1.0, 1.0), 1.0, 3.0) == 1.0

    def test_increasing_on_interval(self) -> None:
        """Test I=[2,5], tau=1, q=0 gives 2."""
        assert prox_oracle_1d(Interval(2.0, 5.0), 1.0, 0.0) == 2.0

    def test_whole_line(self) -> None:
        """Test the whole line reduces to plain soft threshold."""
        assert prox_oracle_1d(Interval.whole_line(), 1.0, -4.0) == -3.0

    def test_degenerate_interval(self) -> None:
        """Test a single-point interval returns that point."""
        assert prox_oracle_1d(Interval(0.7, 0.7), 2.0, -9.0) == 0.7

    def test_rejects_nonpositive_tau(self) -> None:
        """Test tau <= 0 raises."""
        with pytest.raises(ValueError):
            prox_oracle([0.0], [1.0], [0.0], [0.5])

    def test_reversed_bounds_raise(self) -> None:
        """Test lower > upper leaves no candidate and raises IntervalError."""
        with pytest.raises(IntervalError, match="index 1"):
            prox_oracle([-1.0, 2.0], [1.0, 1.0], 1.0, [0.0, 0.0])

    def test_certificate(self, rng: np.random.Generator) -> None:
        """Test oracle outputs satisfy the projected-subgradient condition."""
        tau = 1.3
        lower, upper = random_intervals(rng, 2000)
        q = rng.uniform(-10.0, 10.0, 2000)
        t = prox_oracle(lower, upper, tau, q)
        residual = projected_subgradient_residual(lower, upper, t, t - q, tau)
        assert np.max(residual) <= 1e-12

    def test_subgradient_residual_detects_non_optimal(self) -> None:
        """Test a non-minimizer has a positive residual."""
        residual = projected_subgradient_residual(-1.0, 1.0, 0.5, 0.5 - 3.0, 1.0)
        assert residual > 0.1


class TestKeyIdentity:
    """Test projected shrinkage equals the exact prox on all interval families."""

    @settings(max_examples=500, deadline=None)
    @given(
        ends=st.lists(
            st.one_of(st.floats(-50, 50), st.just(-math.inf), st.just(math.inf)),
            min_size=2, max_size=2,
        ),
        tau=st.floats(1e-3, 1e3),
        q=st.floats(-1e4, 1e4),
    )
    def test_random_triples(self, ends: list[float], tau: float, q: float) -> None:
        """Test projected_shrink == prox_oracle_1d within scaled 1e-12."""
        lower, upper = sorted(ends)
        assume(lower != math.inf and upper != -math.inf)
        I = Interval(lower, upper)
        fast = float(projected_shrink([q], ProxSpec(tau, BoxSet([lower], [upper])))[0])
        exact = prox_oracle_1d(I, tau, q)
        assert abs(fast - exact) <= 1e-12 * max(1.0, abs(q), tau)

    def test_vectorized_batch(self, rng: np.random.Generator) -> None:
        """Test 10^4 cases across T1, T2 and CLOSURE at several tau."""
        for tau in (1e-3, 0.5, 1.0, 10.0, 1e3):
            lower, upper = random_intervals(rng, 2000)
            lower, upper = tau * lower, tau * upper
            q = tau * rng.uniform(-10.0, 10.0, 2000)
            fast = projected_shrink(q, ProxSpec(tau, BoxSet(lower, upper)))
            exact = prox_oracle(lower, upper, tau, q)
            assert np.all(np.abs(fast - exact) <= 1e-12 * np.maximum(1.0, np.maximum(np.abs(q), tau)))


class TestSignShift:
    """Test project(shrink(q)) = project(q - sign(c)) on T1 intervals."""

    @pytest.mark.parametrize(
        "lower,upper,q,expected",
        [(1.0, 2.0, 0.4, 1.0), (-math.inf, -2.0, 5.0, -2.0), (1.0, 2.0, 2.7, 1.7)],
    )
    def test_examples(self, lower: float, upper: float, q: float, expected: float) -> None:
        """Test hand-evaluated right-hand sides."""
        assert sign_shift_projection(Interval(lower, upper), q) == pytest.approx(expected, abs=1e-15)

    def test_matches_shrink_form(self, rng: np.random.Generator) -> None:
        """Test the identity on random T1 intervals."""
        lower, upper = random_intervals(rng, 2000, t1_only=True)
        for lo, hi, q in zip(lower, upper, rng.uniform(-10.0, 10.0, 2000)):
            I = Interval(lo, hi)
            assert abs(I.project(float(shrink(q))) - sign_shift_projection(I, q)) <= 1e-15

    def test_rejects_non_t1(self) -> None:
        """Test a T2 interval raises."""
        with pytest.raises(IntervalError):
            sign_shift_projection(Interval(-1.0, 1.0), 0.0)


class TestFirmNonexpansive:
    """Test the prox is firmly nonexpansive and 1-Lipschitz."""

    def test_random_pairs(self, rng: np.random.Generator) -> None:
        """Test both inequalities on random pairs and boxes."""
        for _ in range(500):
            lower, upper = random_intervals(rng, 6)
            spec = ProxSpec(float(rng.uniform(0.1, 5.0)), BoxSet(lower, upper))
            v, w = rng.uniform(-10.0, 10.0, (2, 6))
            dt = projected_shrink(v, spec) - projected_shrink(w, spec)
            dv = v - w
            assert dt @ dt <= dv @ dt + 1e-12 * max(1.0, dv @ dv)
            assert np.linalg.norm(dt) <= np.linalg.norm(dv) + 1e-12


class TestOptimalityResidual:
    """Test the primal-dual optimality measure."""

    def test_solved_pair(self, one_d_problem: Problem) -> None:
        """Test x=0.5, y=1.5 is optimal on the 1-D instance."""
        res = optimality_residual(one_d_problem, [0.5], [1.5])
        assert res.primal_feas == 0.0
        assert res.fixed_point == 0.0

    def test_zero_dual(self, one_d_problem: Problem) -> None:
        """Test y=0 leaves a fixed-point gap of 0.5."""
        assert optimality_residual(one_d_problem, [0.5], [0.0]).fixed_point == pytest.approx(0.5)

    def test_infeasible_primal(self, one_d_problem: Problem) -> None:
        """Test Ax != b gives positive feasibility residual."""
        assert optimality_residual(one_d_problem, [0.0], [1.5]).primal_feas > 0

    def test_dimension_check(self, one_d_problem: Problem) -> None:
        """Test wrong lengths raise."""
        with pytest.raises(DimensionMismatchError):
            optimality_residual(one_d_problem, [0.5, 0.1], [1.5])
