#!/usr/bin/env python3
"""
ProShrink: projected shrinkage for box-constrained l1 minimization

Solve box-constrained sparse recovery problems from plain-text files, run
recovery-rate sweeps comparing ProShrink with linearized Bregman, and check
the shrinkage operators against exact oracles.

Usage: python main.py [--verbose] [command] [options]

Commands:
  solve   - Solve a problem stored as matrix / rhs / box files
  sweep   - Exact-recovery rate vs. sparsity, ProShrink against LBreg
  check   - Run the operator self-test batteries
  replay  - Re-run a command from its manifest.json

Exit codes: 0 success, 1 input error or divergence, 2 iteration cap reached,
3 self-check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from proshrink import __version__
from proshrink.dual import Problem
from proshrink.experiments import DESK_SCALE, FULL_SCALE, SweepPlan, default_sweep_config, sweep
from proshrink.problem_io import ProblemFiles, RunManifest, load_problem, write_vector
from proshrink.self_check import run_all
from proshrink.solvers import (
    ACCELERATED_MAX_SAFETY,
    OuterConfig,
    SolverConfig,
    SolverDivergenceError,
    SolverResult,
    fbs_box_bpdn,
    proshrink,
    proshrink_accelerated,
    proximal_point_bp,
    resolve_dual_step,
    residual_trace,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_MAX_ITER = 2
EXIT_CHECK_FAILED = 3

SOLVERS = ("proshrink", "accel", "ppbp", "fbs")


def print_banner(title: str) -> None:
    print("\n" + "=" * 80)
    print(title)
    print("=" * 80 + "\n")


def parse_s_range(text: str) -> list[int]:
    """
    Parse a sparsity range.

    Accepts "start:stop" (inclusive), "start:stop:step" or a comma list
    such as "5,10,20".

    Raises:
        ValueError: If the text is not one of those forms or yields nothing
    """
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step < 1:
                raise ValueError
            values = list(range(start, stop + 1, step))
        else:
            values = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"invalid --s-range {text!r}; use 1:80, 5:40:5 or 5,10,20") from None
    if not values:
        raise ValueError(f"--s-range {text!r} is empty")
    return values


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        h=args.h,
        tol_feas=args.tol_feas,
        tol_fp=args.tol_fp,
        max_iter=args.max_iter,
        record_history=True,
        theta0=args.theta0,
        restart=args.restart,
        momentum_rule=args.momentum_rule,
        norm_seed=args.seed,
    )


def _run_solver(args: argparse.Namespace, problem: Problem, params: dict) -> SolverResult:
    if args.solver in ("proshrink", "accel"):
        config = _solver_config(args)
        max_safety = ACCELERATED_MAX_SAFETY if args.solver == "accel" else 2.0
        step = resolve_dual_step(problem, config, max_safety=max_safety)
        params.update(h=step.h, sigma=step.estimate.sigma, h_bound=step.bound)
        if args.h is not None and step.exceeds_bound:
            print(
                f"⚠️  --h {args.h:g} is not below the convergence bound "
                f"2/(tau*sigma^2) = {step.bound:.6g}; proceeding as requested"
            )
        solve = proshrink if args.solver == "proshrink" else proshrink_accelerated
        return solve(problem, config, norm_estimate=step.estimate)

    if args.u is not None:
        print(f"⚠️  --u is ignored by the {args.solver} solver")

    if args.solver == "ppbp":
        outer = OuterConfig(
            lambda_schedule=args.lam,
            max_outer=args.max_outer,
            outer_tol=args.outer_tol,
            inner=_solver_config(args),
        )
        result = proximal_point_bp(problem.A, problem.b, problem.box, outer)
        params.update(h=result.step, sigma=result.sigma, lam=args.lam)
        return result

    if args.lam is None:
        raise ValueError("--lam is required for the fbs solver")
    result = fbs_box_bpdn(
        problem.A, problem.b, problem.box, args.lam,
        gamma=args.gamma,
        tol=args.tol_fp if args.tol_fp is not None else 1e-10,
        max_iter=args.max_iter,
        record_history=True,
    )
    params.update(gamma=result.step, sigma=result.sigma, lam=args.lam)
    return result


def solve_command(args: argparse.Namespace) -> int:
    """Solve a problem from files and write solution, trace and manifest."""
    files = ProblemFiles(
        matrix_path=Path(args.matrix),
        rhs_path=Path(args.rhs),
        tau=args.tau,
        box_path=Path(args.box) if args.box else None,
        u_path=Path(args.u) if args.u else None,
    )
    problem = load_problem(files)
    print(f"📂 Loaded problem: m={problem.m}, n={problem.n}, tau={problem.tau:g}")

    params: dict = {
        "solver": args.solver,
        "matrix": str(files.matrix_path),
        "rhs": str(files.rhs_path),
        "box": str(files.box_path) if files.box_path else None,
        "u": str(files.u_path) if files.u_path else None,
        "tau": problem.tau,
        "tol_feas": args.tol_feas,
        "tol_fp": args.tol_fp,
        "max_iter": args.max_iter,
    }
    result = _run_solver(args, problem, params)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_vector(out_dir / "solution.txt", result.x)
    trace = residual_trace(result)
    trace.write_csv(out_dir / "trace.csv")
    params.update(
        termination=result.termination.value,
        iterations=result.iterations,
        outer_iterations=result.outer_iterations,
    )
    RunManifest("solve", list(args.argv), params, seed=args.seed).write(out_dir / "manifest.json")

    if args.history:
        print(trace)
    status = "✅" if result.converged else "⚠️ "
    print(f"{status} {args.solver}: {result.termination.value} after {result.iterations} iterations")
    if result.outer_iterations:
        print(f"   Outer steps: {result.outer_iterations}")
    print(f"   Outputs written to {out_dir}")
    return EXIT_OK if result.converged else EXIT_MAX_ITER


def _sweep_plan(args: argparse.Namespace) -> SweepPlan:
    if args.paper_scale:
        return FULL_SCALE
    if args.desk:
        return DESK_SCALE
    s_values = parse_s_range(args.s_range) if args.s_range else list(DESK_SCALE.s_values)
    return SweepPlan(
        m=args.m if args.m is not None else DESK_SCALE.m,
        n=args.n if args.n is not None else DESK_SCALE.n,
        s_values=tuple(s_values),
        trials=args.trials if args.trials is not None else DESK_SCALE.trials,
        tau=args.tau,
        box_bound=args.box_bound,
    )


def sweep_command(args: argparse.Namespace) -> int:
    """Run a recovery-rate sweep and write the CSV report plus manifest."""
    plan = _sweep_plan(args)
    config = dataclasses.replace(
        default_sweep_config(),
        h=args.h, tol_feas=args.tol_feas, max_iter=args.max_iter, norm_seed=args.seed,
    )
    print_banner(
        f"Recovery sweep: {plan.m}x{plan.n}, s={plan.s_values[0]}..{plan.s_values[-1]}, "
        f"{plan.trials} trials, box [-{plan.box_bound:g}, {plan.box_bound:g}], tau={plan.tau:g}"
    )
    report = sweep(
        plan.m, plan.n, plan.s_values, plan.trials, plan.tau, plan.box(),
        config=config, base_seed=args.seed, workers=args.workers,
    )

    out = report.write_csv(args.out)
    params = {
        "m": plan.m, "n": plan.n, "s_values": list(plan.s_values), "trials": plan.trials,
        "tau": plan.tau, "box_bound": plan.box_bound, "h": args.h,
        # each trial draws its own A, so sigma and h are resolved per solve
        "step_rule": "manual" if args.h is not None else "step_safety / (tau * sigma_inflated^2) per trial",
        "step_safety": config.step_safety, "norm_tol": config.norm_tol,
        "stall_window": config.stall_window, "stall_ratio": config.stall_ratio,
        "stall_floor": config.stall_floor,
        "tol_feas": args.tol_feas, "max_iter": args.max_iter, "workers": args.workers,
    }
    RunManifest("sweep", list(args.argv), params, seed=args.seed).write(
        out.with_name(out.stem + ".manifest.json")
    )

    print(f"{'s':>4} {'ProShrink':>10} {'LBreg':>10}")
    for row in report.rows:
        print(f"{row.s:>4} {row.rate_proshrink:>10.2f} {row.rate_lbreg:>10.2f}")
    diverged = sum(r.diverged_proshrink + r.diverged_lbreg for r in report.rows)
    if diverged:
        print(f"⚠️  {diverged} solves diverged and were counted as failures")
    print(f"\n✅ Report written to {out}")
    return EXIT_OK


def check_command(args: argparse.Namespace) -> int:
    """Run the operator self-test batteries."""
    print_banner("Operator self-check")
    report = run_all(seed=args.seed, scale=args.scale)
    for battery in report.batteries:
        mark = "✅" if battery.passed else "❌"
        print(
            f"{mark} {battery.name:<20} {battery.cases:>7} cases  "
            f"{battery.failures:>5} failures  ({battery.seconds:.2f}s)"
        )

    failure = report.first_failure
    if failure is not None:
        print(f"\n❌ Battery '{failure.name}' failed. First counterexample:")
        print(json.dumps(failure.counterexample, indent=2))
        return EXIT_CHECK_FAILED
    print("\n✅ All batteries passed")
    return EXIT_OK


def replay_command(args: argparse.Namespace) -> int:
    """Re-run the command recorded in a manifest."""
    manifest = RunManifest.read(args.manifest)
    if manifest.command == "replay" or (manifest.argv and manifest.argv[0] == "replay"):
        raise ValueError("a replay manifest cannot be replayed")
    if manifest.version != __version__:
        print(f"⚠️  Manifest was written by proshrink {manifest.version}, running {__version__}")
    print(f"🔁 Replaying: {' '.join(manifest.argv)}")
    return main(manifest.argv)


def _add_solver_flags(parser: argparse.ArgumentParser, tol_feas: float) -> None:
    parser.add_argument("--h", type=float, default=None, help="Dual step size (default: automatic)")
    parser.add_argument("--tol-feas", type=float, default=tol_feas, help=f"Feasibility tolerance (default: {tol_feas:g})")
    parser.add_argument("--max-iter", type=int, default=50_000, help="Iteration cap (default: 50000)")
    parser.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="ProShrink: projected shrinkage for box-constrained l1 minimization",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
QUICK START:

  1. Check the operators:
     python main.py check

  2. Solve a problem from files:
     python main.py solve --matrix A.csv --rhs b.txt --box box.txt --tau 10 --out run1

  3. Reproduce the recovery curve at desk scale:
     python main.py sweep --desk --out recovery.csv
        """,
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Log solver progress")
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    # ========== SOLVE ==========
    solve_parser = subparsers.add_parser("solve", help="Solve a problem stored in files")
    solve_parser.add_argument("--matrix", required=True, help="Matrix CSV (one row per line)")
    solve_parser.add_argument("--rhs", required=True, help="Right-hand side (one value per line)")
    solve_parser.add_argument("--box", default=None, help="Box file (default: whole line)")
    solve_parser.add_argument("--tau", type=float, default=10.0, help="Augmentation parameter (default: 10)")
    solve_parser.add_argument("--u", default=None, help="Anchor file (default: zeros)")
    solve_parser.add_argument("--solver", choices=SOLVERS, default="proshrink", help="Solver (default: proshrink)")
    _add_solver_flags(solve_parser, tol_feas=1e-10)
    solve_parser.add_argument("--tol-fp", type=float, default=None, help="Fixed-point tolerance")
    solve_parser.add_argument("--lam", type=float, default=None, help="lambda for fbs, constant lambda for ppbp")
    solve_parser.add_argument("--gamma", type=float, default=None, help="fbs step (default: automatic)")
    solve_parser.add_argument("--theta0", type=float, default=1.0, help="Momentum seed for accel (default: 1)")
    solve_parser.add_argument(
        "--momentum-rule", choices=("printed", "squared"), default="printed",
        help="theta recursion for accel (default: printed)",
    )
    solve_parser.add_argument("--restart", action="store_true", help="Gradient restart for accel")
    solve_parser.add_argument("--outer-tol", type=float, default=1e-10, help="ppbp outer tolerance (default: 1e-10)")
    solve_parser.add_argument("--max-outer", type=int, default=20, help="ppbp outer step cap (default: 20)")
    solve_parser.add_argument("--out", default="proshrink-out", help="Output directory")
    solve_parser.add_argument("--history", action="store_true", help="Print the residual trace")
    solve_parser.set_defaults(func=solve_command)

    # ========== SWEEP ==========
    sweep_parser = subparsers.add_parser("sweep", help="Exact-recovery rate vs. sparsity")
    preset = sweep_parser.add_mutually_exclusive_group()
    preset.add_argument("--paper-scale", action="store_true", help="200x400, s=1..80, 100 trials (slow)")
    preset.add_argument("--desk", action="store_true", help="50x100, s=5..40 step 5, 50 trials")
    sweep_parser.add_argument("--m", type=int, default=None, help="Measurements (default: 50)")
    sweep_parser.add_argument("--n", type=int, default=None, help="Signal length (default: 100)")
    sweep_parser.add_argument("--s-range", default=None, help="Sparsity levels: 1:80, 5:40:5 or 5,10,20")
    sweep_parser.add_argument("--trials", type=int, default=None, help="Trials per level (default: 50)")
    sweep_parser.add_argument("--tau", type=float, default=10.0, help="Augmentation parameter (default: 10)")
    sweep_parser.add_argument("--box-bound", type=float, default=1.0, help="Box is [-B, B]^n (default: 1)")
    sweep_parser.add_argument("--workers", type=int, default=1, help="Worker threads (default: 1)")
    _add_solver_flags(sweep_parser, tol_feas=1e-14)
    sweep_parser.add_argument("--out", default="recovery.csv", help="CSV report path")
    sweep_parser.set_defaults(func=sweep_command)

    # ========== CHECK ==========
    check_parser = subparsers.add_parser("check", help="Run operator self-test batteries")
    check_parser.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    check_parser.add_argument("--scale", type=float, default=1.0, help="Case-count multiplier (default: 1)")
    check_parser.set_defaults(func=check_command)

    # ========== REPLAY ==========
    replay_parser = subparsers.add_parser("replay", help="Re-run a command from its manifest")
    replay_parser.add_argument("manifest", help="Path to manifest.json")
    replay_parser.set_defaults(func=replay_command)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if not args.command:
        print_banner("ProShrink: projected shrinkage for box-constrained l1 minimization")
        parser.print_help()
        return EXIT_OK

    try:
        return args.func(args)
    except SolverDivergenceError as e:
        print(f"❌ {e}")
        return EXIT_INPUT_ERROR
    except (ValueError, FileNotFoundError) as e:
        print(f"❌ {e}")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
