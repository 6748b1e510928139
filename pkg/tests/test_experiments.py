"""
Tests for experiments - instance generation, recovery checks and sweeps.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import polars as pl
import pytest

from proshrink.boxset import BoxSet
from proshrink.core_linalg import DimensionMismatchError
from proshrink.experiments import (
    DESK_SCALE,
    FULL_SCALE,
    REPORT_COLUMNS,
    InstanceSpec,
    SweepReport,
    SweepRow,
    default_sweep_config,
    derive_trial_seed,
    dominance_shortfall,
    generate_instance,
    recovered,
    relative_error,
    run_trial,
    statistical_slack,
    sweep,
)
from proshrink.solvers import SolverConfig

QUICK = SolverConfig(tol_feas=1e-12, max_iter=5000)


class TestInstanceSpec:
    """Test InstanceSpec validation."""

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"m": 0, "n": 10, "sparsity": 1},
            {"m": 5, "n": 10, "sparsity": 0},
            {"m": 5, "n": 10, "sparsity": 11},
            {"m": 5, "n": 10, "sparsity": 2, "amplitude": 0.0},
        ],
    )
    def test_invalid(self, kwargs: dict) -> None:
        """Test out-of-range fields raise ValueError."""
        with pytest.raises(ValueError):
            InstanceSpec(**kwargs)


class TestGenerateInstance:
    """Test the seeded Gaussian instance generator."""

    def test_shapes_and_support(self) -> None:
        """Test shapes, exactly s nonzeros and +/-amplitude entries."""
        A, x0, b = generate_instance(InstanceSpec(m=30, n=60, sparsity=7, amplitude=2.0, seed=1))
        assert A.shape == (30, 60)
        assert b.shape == (30,)
        assert np.count_nonzero(x0) == 7
        assert set(np.abs(x0[x0 != 0])) == {2.0}

    def test_measurements_exact(self) -> None:
        """Test b is exactly A @ x0."""
        A, x0, b = generate_instance(InstanceSpec(m=20, n=40, sparsity=4, seed=9))
        np.testing.assert_array_equal(b, A @ x0)

    def test_deterministic(self) -> None:
        """Test the same seed gives identical draws and another seed does not."""
        spec = InstanceSpec(m=10, n=20, sparsity=3, seed=42)
        first = generate_instance(spec)
        second = generate_instance(spec)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)
        other = generate_instance(InstanceSpec(m=10, n=20, sparsity=3, seed=43))
        assert not np.array_equal(first[0], other[0])

    def test_draw_order(self) -> None:
        """Test the matrix is drawn first from default_rng(seed)."""
        A, _, _ = generate_instance(InstanceSpec(m=4, n=6, sparsity=2, seed=5))
        np.testing.assert_array_equal(A, np.random.default_rng(5).standard_normal((4, 6)))

    def test_full_support(self) -> None:
        """Test s = n fills every coordinate."""
        _, x0, _ = generate_instance(InstanceSpec(m=3, n=5, sparsity=5, seed=0))
        assert np.count_nonzero(x0) == 5

    def test_entry_statistics(self) -> None:
        """Test a 200x400 sample has mean ~0 and variance ~1 within 5 sigma."""
        A, _, _ = generate_instance(InstanceSpec(m=200, n=400, sparsity=10, seed=0))
        count = A.size
        assert abs(A.mean()) <= 5.0 / math.sqrt(count)
        assert abs(A.var() - 1.0) <= 5.0 * math.sqrt(2.0 / count)


class TestRecoveryMeasures:
    """Test relative_error and recovered."""

    def test_exact_match(self) -> None:
        """Test identical vectors count as recovered."""
        assert relative_error([1.0, 0.0, -1.0], [1.0, 0.0, -1.0]) == 0.0
        assert recovered([1.0, 0.0, -1.0], [1.0, 0.0, -1.0])

    def test_threshold(self) -> None:
        """Test a 1e-6 relative error fails the default threshold but passes a loose one."""
        x0 = np.array([1.0, 0.0])
        x = np.array([1.0 + 1e-6, 0.0])
        assert relative_error(x, x0) == pytest.approx(1e-6)
        assert not recovered(x, x0)
        assert recovered(x, x0, threshold=1e-5)

    def test_zero_truth(self) -> None:
        """Test a zero ground truth raises."""
        with pytest.raises(ValueError, match="zero"):
            relative_error([0.0, 0.0], [0.0, 0.0])

    def test_length_mismatch(self) -> None:
        """Test vectors of different lengths raise."""
        with pytest.raises(DimensionMismatchError):
            relative_error([1.0], [1.0, 2.0])


class TestTrialSeeds:
    """Test per-trial seed derivation."""

    def test_stable(self) -> None:
        """Test the same key always gives the same seed."""
        assert derive_trial_seed(0, 5, 3) == derive_trial_seed(0, 5, 3)

    def test_distinct_keys(self) -> None:
        """Test distinct (base, s, trial) keys give distinct seeds."""
        seeds = {derive_trial_seed(b, s, t) for b in range(2) for s in range(1, 6) for t in range(10)}
        assert len(seeds) == 100

    def test_rejects_negative_base(self) -> None:
        """Test a negative base seed raises."""
        with pytest.raises(ValueError):
            derive_trial_seed(-1, 1, 0)


class TestRunTrial:
    """Test a single paired trial."""

    def test_low_sparsity_recovered_by_both(self) -> None:
        """Test one spike in a 20x40 instance is recovered by both arms."""
        outcome = run_trial(20, 40, 1, 0, 10.0, BoxSet.uniform(40, -1.0, 1.0), default_sweep_config(), 0)
        assert outcome.recovered_proshrink
        assert outcome.recovered_lbreg
        assert not outcome.diverged_proshrink
        assert outcome.seed == derive_trial_seed(0, 1, 0)

    def test_divergence_counted(self) -> None:
        """Test an unstable manual step is tallied as diverged, not raised."""
        outcome = run_trial(
            10, 20, 2, 0, 10.0, BoxSet.uniform(20, -1.0, 1.0), SolverConfig(h=100.0, max_iter=2000), 0
        )
        assert outcome.diverged_proshrink or outcome.diverged_lbreg
        assert not (outcome.diverged_lbreg and outcome.recovered_lbreg)


class TestSweep:
    """Test the sparsity sweep and its report."""

    def test_rows_and_tallies(self) -> None:
        """Test rows are sorted by s and counts stay within trials."""
        report = sweep(15, 30, [6, 2], trials=3, tau=10.0, box=BoxSet.uniform(30, -1.0, 1.0), config=QUICK)
        assert [r.s for r in report.rows] == [2, 6]
        for row in report.rows:
            assert row.trials == 3
            assert 0 <= row.recovered_proshrink <= 3
            assert 0 <= row.recovered_lbreg <= 3
            assert row.recovered_proshrink + row.diverged_proshrink <= 3
            assert row.rate_proshrink == row.recovered_proshrink / 3

    def test_independent_of_workers(self) -> None:
        """Test one and four worker threads give the same report."""
        kwargs = dict(tau=10.0, box=BoxSet.uniform(30, -1.0, 1.0), config=QUICK, base_seed=11)
        serial = sweep(15, 30, [2, 4, 6], trials=4, workers=1, **kwargs)
        threaded = sweep(15, 30, [2, 4, 6], trials=4, workers=4, **kwargs)
        assert serial.rows == threaded.rows

    def test_same_base_seed_reproduces(self) -> None:
        """Test the report is reproducible for a fixed base seed."""
        kwargs = dict(tau=10.0, box=BoxSet.uniform(30, -1.0, 1.0), config=QUICK)
        assert sweep(15, 30, [3], trials=3, base_seed=1, **kwargs).rows == sweep(
            15, 30, [3], trials=3, base_seed=1, **kwargs
        ).rows

    @pytest.mark.parametrize(
        "kwargs",
        [{"trials": 0}, {"workers": 0}, {"s_list": []}, {"s_list": [0]}, {"s_list": [31]}],
    )
    def test_invalid_arguments(self, kwargs: dict) -> None:
        """Test bad counts and sparsity levels raise ValueError."""
        args = dict(m=15, n=30, s_list=[2], trials=1, tau=10.0, box=BoxSet.uniform(30, -1.0, 1.0))
        args.update(kwargs)
        with pytest.raises(ValueError):
            sweep(**args)

    def test_box_length(self) -> None:
        """Test a box of the wrong length raises."""
        with pytest.raises(DimensionMismatchError):
            sweep(15, 30, [2], trials=1, tau=10.0, box=BoxSet.uniform(29, -1.0, 1.0))


class TestSweepReport:
    """Test the report frame and CSV output."""

    @pytest.fixture
    def report(self) -> SweepReport:
        return SweepReport([SweepRow(5, 4, 4, 3), SweepRow(10, 4, 1, 0, diverged_lbreg=1)])

    def test_frame(self, report: SweepReport) -> None:
        """Test column names, order and computed rates."""
        frame = report.to_frame()
        assert tuple(frame.columns) == REPORT_COLUMNS
        assert frame["rate_lbreg"].to_list() == [0.75, 0.0]
        assert frame["s"].dtype == pl.Int64

    def test_csv(self, report: SweepReport, tmp_path: Path) -> None:
        """Test the CSV header and LF line endings."""
        path = report.write_csv(tmp_path / "nested" / "recovery.csv")
        raw = path.read_bytes()
        assert b"\r\n" not in raw
        lines = raw.decode().splitlines()
        assert lines[0] == ",".join(REPORT_COLUMNS)
        assert lines[1] == "5,4,4,3,1.0,0.75"
        assert len(lines) == 3

    def test_row_lookup(self, report: SweepReport) -> None:
        """Test row(s) finds a level and raises for a missing one."""
        assert report.row(10).recovered_proshrink == 1
        with pytest.raises(KeyError):
            report.row(7)

    def test_dominance_shortfall(self, report: SweepReport) -> None:
        """Test the shortfall is zero when ProShrink never trails."""
        assert dominance_shortfall(report) == 0.0
        trailing = SweepReport([SweepRow(5, 4, 2, 3)])
        assert dominance_shortfall(trailing) == pytest.approx(0.25)

    def test_dominance_shortfall_never_negative(self) -> None:
        """Test a report where ProShrink leads everywhere has shortfall exactly 0."""
        assert dominance_shortfall(SweepReport([SweepRow(5, 4, 4, 3), SweepRow(10, 4, 2, 0)])) == 0.0

    def test_statistical_slack(self) -> None:
        """Test 2 / sqrt(trials)."""
        assert statistical_slack(100) == pytest.approx(0.2)


class TestPresets:
    """Test the named sweep plans."""

    def test_full_scale(self) -> None:
        """Test the full-size plan: 200x400, s=1..80, 100 trials."""
        assert (FULL_SCALE.m, FULL_SCALE.n, FULL_SCALE.trials) == (200, 400, 100)
        assert FULL_SCALE.s_values == tuple(range(1, 81))
        assert len(FULL_SCALE.box()) == 400

    def test_desk_scale(self) -> None:
        """Test the desk plan: 50x100, s=5..40 step 5, 50 trials."""
        assert DESK_SCALE.s_values == (5, 10, 15, 20, 25, 30, 35, 40)
        assert DESK_SCALE.trials == 50

    def test_sweep_config_stops_stalled_runs(self) -> None:
        """Test sweeps use the 1e-14 target with the stall check on."""
        cfg = default_sweep_config()
        assert cfg.tol_feas == 1e-14
        assert cfg.max_iter == 50_000
        assert cfg.stall_window == 5_000


@pytest.mark.slow
class TestDeskScaleRecovery:
    """Test the ProShrink-vs-LBreg comparison at desk scale."""

    def test_box_dominates(self) -> None:
        """Test ProShrink is never worse beyond slack, both recover at s=5 and the box gains 0.1 somewhere."""
        plan = DESK_SCALE
        report = sweep(plan.m, plan.n, plan.s_values, plan.trials, plan.tau, plan.box(), workers=4)
        assert len(report.rows) == 8
        assert dominance_shortfall(report) <= statistical_slack(plan.trials)
        low = report.row(5)
        assert low.rate_proshrink == 1.0
        assert low.rate_lbreg == 1.0
        gain = max(r.recovered_proshrink - r.recovered_lbreg for r in report.rows)
        assert 10 * gain >= plan.trials


@pytest.mark.full_scale
class TestFullScaleRecovery:
    """Test the full 200x400 sweep."""

    def test_box_dominates(self) -> None:
        """Test dominance with slack over s=1..80 and 100 trials."""
        plan = FULL_SCALE
        report = sweep(plan.m, plan.n, plan.s_values, plan.trials, plan.tau, plan.box(), workers=8)
        assert len(report.rows) == 80
        assert dominance_shortfall(report) <= statistical_slack(plan.trials)
        assert report.row(1).rate_proshrink == report.row(1).rate_lbreg == 1.0
        assert any(r.rate_proshrink > r.rate_lbreg for r in report.rows)
