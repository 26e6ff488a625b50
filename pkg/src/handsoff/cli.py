"""Command-line front end.

Subcommands: solve, compare, sweep, verify-equivalence, simulate.
Result documents are JSON with a fixed schema version; trajectory CSVs
are plot-ready.  Exit codes: 0 success (or equivalence agreement),
1 error, 2 infeasible, 3 equivalence disagreement.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    min_energy_baseline,
    simulate_continuous,
    simulate_discrete,
    sparsity,
)
from .discretize import build_reachability
from .errors import HandsOffError, RankDeficient
from .interior_point import SolveStatus
from .model import ControlProblem, ControlSignal, read_problem, write_signal
from .solver import SolverOptions, solve
from . import analysis

SCHEMA = "handsoff-result/1"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_DISAGREE = 3


@dataclass(frozen=True)
class RunConfig:
    """Parsed invocation: subcommand, paths, tolerance overrides, grids."""

    subcommand: str
    input_path: Path
    out_path: Path | None
    csv_path: Path | None
    options: SolverOptions
    substeps: int
    sweep_T: tuple[float, ...]
    sweep_scale: tuple[float, ...]


def _json_safe(value):
    if isinstance(value, float):
        return value if np.isfinite(value) else None
    if isinstance(value, (np.floating, np.integer)):
        return _json_safe(value.item())
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _emit(document: dict, out_path: Path | None) -> None:
    text = json.dumps(_json_safe(document), indent=2, sort_keys=True) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        out_path.write_text(text)


def _sparsity_doc(signal: ControlSignal, threshold: float) -> dict:
    rep = sparsity(signal, threshold)
    return {
        "support_measure": rep.support_measure,
        "hands_off_ratio": rep.hands_off_ratio,
        "per_channel_measure": rep.per_channel_measure,
        "threshold": rep.threshold,
    }


def _solve_doc(problem: ControlProblem, report, threshold: float) -> dict:
    doc = {
        "status": report.status.value,
        "objective": report.objective,
        "lp_objective": report.lp_objective,
        "dual_objective": report.dual_objective,
        "residuals": {
            "primal": report.primal_residual,
            "dual": report.dual_residual,
            "gap": report.gap_residual,
        },
        "iterations": report.iterations,
        "terminal_error": report.terminal_error,
        "feasibility_slack": report.feasibility_slack,
        "polish_applied": report.polish_applied,
        "polish_rounds": report.polish_rounds,
    }
    if report.signal is not None:
        doc["sparsity"] = _sparsity_doc(report.signal, threshold)
    return doc


def _problem_doc(problem: ControlProblem) -> dict:
    return {
        "n": problem.plant.n,
        "m": problem.plant.m,
        "N": int(problem.N),
        "T": problem.T,
        "h": problem.h,
    }


def _status_exit(status: SolveStatus) -> int:
    if status is SolveStatus.OPTIMAL:
        return EXIT_OK
    if status is SolveStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_ERROR


def cmd_solve(cfg: RunConfig) -> int:
    started = time.perf_counter()
    problem = read_problem(cfg.input_path.read_text())
    report = solve(problem, cfg.options)
    document = {
        "schema": SCHEMA,
        "command": "solve",
        "problem": _problem_doc(problem),
        **_solve_doc(problem, report, cfg.options.sparsity_threshold),
        "wall_time_sec": time.perf_counter() - started,
    }
    if report.signal is not None and cfg.csv_path is not None:
        dp = build_reachability(problem)
        traj = simulate_discrete(dp, report.signal, problem.x0)
        cfg.csv_path.write_text(write_signal(report.signal, traj))
    _emit(document, cfg.out_path)
    return _status_exit(report.status)


def cmd_compare(cfg: RunConfig) -> int:
    started = time.perf_counter()
    problem = read_problem(cfg.input_path.read_text())
    report = solve(problem, cfg.options)
    document = {
        "schema": SCHEMA,
        "command": "compare",
        "problem": _problem_doc(problem),
        "l1": _solve_doc(problem, report, cfg.options.sparsity_threshold),
    }
    dp = build_reachability(problem)
    try:
        baseline, violated = min_energy_baseline(dp)
        document["min_energy"] = {
            "status": "ok",
            "bound_violation": violated,
            "sparsity": _sparsity_doc(baseline, cfg.options.sparsity_threshold),
        }
    except RankDeficient as exc:
        baseline = None
        document["min_energy"] = {"status": "rank_deficient", "message": str(exc)}
    if cfg.csv_path is not None:
        if report.signal is not None:
            traj = simulate_discrete(dp, report.signal, problem.x0)
            cfg.csv_path.write_text(write_signal(report.signal, traj))
        if baseline is not None:
            twin = cfg.csv_path.with_name(cfg.csv_path.stem + "_min_energy.csv")
            traj = simulate_discrete(dp, baseline, problem.x0)
            twin.write_text(write_signal(baseline, traj))
    document["wall_time_sec"] = time.perf_counter() - started
    _emit(document, cfg.out_path)
    return _status_exit(report.status)


def _sweep_problems(problem: ControlProblem, cfg: RunConfig):
    if cfg.sweep_T:
        h = problem.h
        for T in cfg.sweep_T:
            N_exact = T / h
            N = round(N_exact)
            if N < 1 or abs(N_exact - N) > 1e-9 * max(1.0, abs(N_exact)):
                yield {"T": T}, None, f"T = {T} is not a multiple of h = {h}"
            else:
                yield ({"T": T},
                       dataclasses.replace(problem, T=float(T), N=int(N)),
                       None)
    else:
        for s in cfg.sweep_scale:
            if s <= 0:
                yield {"scale": s}, None, f"scale {s} is not positive"
            else:
                yield ({"scale": s},
                       dataclasses.replace(problem, weights=problem.weights * s),
                       None)


def cmd_sweep(cfg: RunConfig) -> int:
    started = time.perf_counter()
    problem = read_problem(cfg.input_path.read_text())
    rows = []
    for label, instance, error in _sweep_problems(problem, cfg):
        row = dict(label)
        if error is not None:
            row.update(status="error", error=error)
            rows.append(row)
            continue
        try:
            report = solve(instance, cfg.options)
        except HandsOffError as exc:
            row.update(status="error", error=str(exc))
            rows.append(row)
            continue
        row.update(status=report.status.value, error=None,
                   objective=report.objective, iterations=report.iterations)
        if report.signal is not None:
            rep = sparsity(report.signal, cfg.options.sparsity_threshold)
            row.update(support_measure=rep.support_measure,
                       hands_off_ratio=rep.hands_off_ratio)
        rows.append(row)
    nonincreasing = True
    if cfg.sweep_T:
        values = [r["objective"] for r in rows if r.get("status") == "optimal"]
        nonincreasing = all(b <= a + 1e-12 * max(1.0, abs(a))
                            for a, b in zip(values, values[1:]))
    document = {
        "schema": SCHEMA,
        "command": "sweep",
        "problem": _problem_doc(problem),
        "rows": rows,
        "objective_nonincreasing": nonincreasing,
        "wall_time_sec": time.perf_counter() - started,
    }
    _emit(document, cfg.out_path)
    return EXIT_OK


def cmd_verify_equivalence(cfg: RunConfig) -> int:
    started = time.perf_counter()
    problem = read_problem(cfg.input_path.read_text())
    equivalence, report = analysis.verify_equivalence(problem, cfg.options)
    document = {
        "schema": SCHEMA,
        "command": "verify-equivalence",
        "problem": _problem_doc(problem),
        "agree": equivalence.agree,
        "l1_support": equivalence.l1_support,
        "l1_support_unpolished": equivalence.l1_support_unpolished,
        "l0_support": equivalence.l0_support,
        "l1_objective": equivalence.l1_objective,
        "l0_certified_objective": equivalence.l0_certified_objective,
        "witness_count": len(equivalence.witness_supports),
        "witness_supports": [list(s) for s in equivalence.witness_supports],
        "polish_applied": equivalence.polish_applied,
        "iterations": report.iterations,
        "wall_time_sec": time.perf_counter() - started,
    }
    _emit(document, cfg.out_path)
    return EXIT_OK if equivalence.agree else EXIT_DISAGREE


def cmd_simulate(cfg: RunConfig) -> int:
    started = time.perf_counter()
    problem = read_problem(cfg.input_path.read_text())
    report = solve(problem, cfg.options)
    document = {
        "schema": SCHEMA,
        "command": "simulate",
        "problem": _problem_doc(problem),
        **_solve_doc(problem, report, cfg.options.sparsity_threshold),
        "substeps": cfg.substeps,
    }
    if report.signal is not None:
        dp = build_reachability(problem)
        coarse = simulate_discrete(dp, report.signal, problem.x0)
        fine = simulate_continuous(problem.plant, report.signal, problem.x0,
                                   cfg.substeps)
        grid = fine[::cfg.substeps]
        document["discrete_terminal_error"] = float(np.linalg.norm(coarse[-1]))
        document["continuous_terminal_error"] = float(np.linalg.norm(fine[-1]))
        document["max_gridpoint_gap"] = float(np.max(np.abs(grid - coarse)))
        if cfg.csv_path is not None:
            fine_signal = ControlSignal(
                U=np.repeat(report.signal.as_steps(), cfg.substeps, axis=0).ravel(),
                h=report.signal.h / cfg.substeps,
                m=report.signal.m,
                N=report.signal.N * cfg.substeps,
            )
            cfg.csv_path.write_text(write_signal(fine_signal, fine))
    document["wall_time_sec"] = time.perf_counter() - started
    _emit(document, cfg.out_path)
    return _status_exit(report.status)


_COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "verify-equivalence": cmd_verify_equivalence,
    "simulate": cmd_simulate,
}


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="handsoff",
        description="Sparse minimum-fuel controls for LTI plants.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in (
            ("solve", "solve one problem file"),
            ("compare", "solve and contrast with the minimum-energy baseline"),
            ("sweep", "solve over a grid of horizons or weight scalings"),
            ("verify-equivalence", "compare the sparse solve with exhaustive search"),
            ("simulate", "solve and re-simulate in continuous time"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True, type=Path, help="problem file (JSON)")
        p.add_argument("--out", type=Path, default=None,
                       help="result document path (default: stdout)")
        p.add_argument("--csv", type=Path, default=None, help="trajectory CSV path")
        p.add_argument("--opt-tol", type=float, default=1e-8,
                       help="interior-point optimality tolerance")
        p.add_argument("--feas-tol", type=float, default=1e-6,
                       help="terminal feasibility tolerance")
        p.add_argument("--threshold", type=float, default=1e-6,
                       help="sparsity threshold")
        p.add_argument("--no-polish", action="store_true",
                       help="skip the sparse vertex crossover")
        if name == "simulate":
            p.add_argument("--substeps", type=int, default=20,
                           help="integration substeps per grid slot")
        if name == "sweep":
            p.add_argument("--sweep-T", type=_parse_grid, default=(),
                           help='comma-separated horizon grid, e.g. "5,7.5,10"')
            p.add_argument("--sweep-scale", type=_parse_grid, default=(),
                           help="comma-separated weight scalings")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    for name in ("opt_tol", "feas_tol", "threshold"):
        if getattr(args, name) <= 0:
            raise HandsOffError(f"--{name.replace('_', '-')} must be positive")
    sweep_T = tuple(getattr(args, "sweep_T", ()) or ())
    sweep_scale = tuple(getattr(args, "sweep_scale", ()) or ())
    if args.subcommand == "sweep" and not (sweep_T or sweep_scale):
        raise HandsOffError("sweep needs --sweep-T or --sweep-scale")
    substeps = int(getattr(args, "substeps", 20))
    if substeps < 1:
        raise HandsOffError("--substeps must be >= 1")
    options = SolverOptions(
        opt_tol=args.opt_tol,
        feas_tol=args.feas_tol,
        sparsity_threshold=args.threshold,
        polish=not args.no_polish,
    )
    return RunConfig(
        subcommand=args.subcommand,
        input_path=args.input,
        out_path=args.out,
        csv_path=args.csv,
        options=options,
        substeps=substeps,
        sweep_T=sweep_T,
        sweep_scale=sweep_scale,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[cfg.subcommand](cfg)
    except (HandsOffError, OSError) as exc:
        print(f"handsoff: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
