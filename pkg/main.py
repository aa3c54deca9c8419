"""
Main entry point for the quadratic Fourier analysis toolkit on F_5^n.

Subcommands transform functions, evaluate Gowers norms and progression
counts, search for correlating quadratic phases, inspect quadratic factors,
run the Koopman-von Neumann and regularity decompositions, run the
four-term progression pipeline, and verify every invariant of the library.

Exit codes: 0 success, 1 a checked identity or bound failed, 2 usage error.
"""
import argparse
import logging
import os
import sys
import time
from typing import Any, Dict, List, Optional

import pandas as pd

# Add the project root to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.data import function_to_dict, load_factor, load_function, load_set, random_function, random_set
from src.decompose import DecompositionSolver, bhk_experiment
from src.errors import (
    BudgetExceededError, DimensionTooLargeError, IdentityViolation, IterationCapExceeded, MalformedInputError,
    UnboundedInputError,
)
from src.factors import atom_statistics, factor_rank, rank_reduce
from src.fourier import DenseFunction, dft
from src.gowers import gowers_norm_direct, gowers_norm_fast
from src.invariants import InvariantSuite
from src.models import GroupConfig, GrowthFn, OracleParams, RunConfig
from src.output import ReportOutput, emit_report
from src.progressions import ap_census, balanced, lambda_report
from src.quadratic import best_quadratic_correlation, inverse_oracle
from src.workers import EVALUATIONS

logger = logging.getLogger("quadfourier")

COMMANDS = ("ft", "gowers", "lambda", "inverse", "factor", "kvn", "regularity", "bhk", "verify")
DEFAULT_GROWTH = "exponential:base=5,scale=6250"
DEFAULT_RANK_GROWTH = "polynomial:power=1,scale=100,offset=5"


class UsageError(Exception):
    """Bad flag combination; exit code 2."""


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="dimension of F_5^n (default: 2)")
    common.add_argument("--seed", type=int, default=0, help="seed for generated inputs (default: 0)")
    common.add_argument("--delta", type=float, default=0.5)
    common.add_argument("--epsilon", type=float, default=0.1)
    common.add_argument("--eta", type=float, default=0.1)
    common.add_argument("--alpha", type=float, default=0.5, help="density of generated sets")
    common.add_argument("--k", type=int, default=3)
    common.add_argument("--trials", type=int, default=20)
    common.add_argument("--growth", default=None, help="growth preset, e.g. " + DEFAULT_GROWTH)
    common.add_argument("--growth2", default=None, help="second growth preset for high-rank regularity")
    common.add_argument("--budget", type=int, default=None, help="max inner-loop evaluations (env QF_BUDGET)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--method", default=None)
    common.add_argument("--input", default=None, help="input JSON file")
    common.add_argument("--inputs", nargs="+", default=[], help="several input JSON files")
    common.add_argument("--weight", default=None, help="weight function file for weighted Lambda_4")
    common.add_argument("--output", default=None, help="report JSON path")
    common.add_argument("--timings", action="store_true", help="add wall-clock metrics to the report")
    common.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="main.py", description="Quadratic Fourier analysis on F_5^n")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ft": "Fourier transform of a function file",
        "gowers": "Gowers U^k norm (--method direct|fast|both)",
        "lambda": "Lambda_3 / Lambda_4 (--method direct|spectral|weighted)",
        "inverse": "best correlating quadratic phase",
        "factor": "atom statistics, rank and rank reduction of a factor file",
        "kvn": "Koopman-von Neumann decomposition (--method linear|quadratic)",
        "regularity": "arithmetic regularity (--method plain|high-rank)",
        "bhk": "four-term progressions with a popular common difference",
        "verify": "run the invariant suite",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command, n=args.n, seed=args.seed, delta=args.delta, epsilon=args.epsilon, eta=args.eta,
        k=args.k, trials=args.trials, alpha=args.alpha, growth=args.growth, growth2=args.growth2,
        budget=args.budget, threads=args.threads, method=args.method, input=args.input,
        inputs=list(args.inputs), output=args.output, timings=args.timings, oracle=OracleParams(),
    )


def _function_input(config: RunConfig, balanced_default: bool = False) -> DenseFunction:
    if config.input:
        return load_function(config.input)
    cfg = GroupConfig(config.n)
    if balanced_default:
        return balanced(random_set(config.n, config.alpha, config.seed), cfg)
    return random_function(cfg, config.seed)


def _set_input(config: RunConfig):
    if config.input:
        return load_set(config.input)
    return GroupConfig(config.n), random_set(config.n, config.alpha, config.seed)


def _growth(text: Optional[str], default: str) -> GrowthFn:
    try:
        growth = GrowthFn.parse(text or default)
    except ValueError as exc:
        raise UsageError(str(exc))
    if not growth.is_monotone():
        raise UsageError(f"growth preset {growth} is not monotone")
    return growth


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def run_ft(config: RunConfig, out: ReportOutput):
    f = _function_input(config)
    spectrum = dft(f)
    out.print_header("FOURIER TRANSFORM")
    out.print_values({"n": f.cfg.n, "||f^||_2": spectrum.norm(2), "||f^||_inf": spectrum.sup_norm(),
                      "||f||_2": f.norm(2)})
    return {"spectrum": function_to_dict(DenseFunction(f.cfg, spectrum.values)),
            "l2": spectrum.norm(2), "sup": spectrum.sup_norm()}, True


def run_gowers(config: RunConfig, out: ReportOutput):
    f = _function_input(config)
    method = config.method or "both"
    if method not in ("direct", "fast", "both"):
        raise UsageError(f"gowers --method must be direct, fast or both, got '{method}'")
    report = {"k": config.k}
    if method in ("fast", "both"):
        report["fast"] = gowers_norm_fast(f, config.k, threads=config.threads).to_dict()
    if method in ("direct", "both"):
        report["direct"] = gowers_norm_direct(f, config.k, budget=config.budget, threads=config.threads).to_dict()
    ok = True
    if method == "both":
        report["difference"] = abs(report["fast"]["value"] - report["direct"]["value"])
        ok = report["difference"] <= 1e-9
    out.print_header(f"GOWERS U^{config.k} NORM")
    out.print_values({key: value["value"] if isinstance(value, dict) else value for key, value in report.items()})
    return report, ok


def run_lambda(config: RunConfig, out: ReportOutput, weight_path: Optional[str]):
    method = config.method or "direct"
    if config.inputs:
        fs = [load_function(p) for p in config.inputs]
        members = None
    else:
        cfg, members = _set_input(config)
        fs = [DenseFunction.indicator(members, cfg)] * config.k
    weight = load_function(weight_path) if weight_path else None
    value = lambda_report(fs, method=method, weight=weight)
    report = {"lambda": value.to_dict()}
    printed = {"value": value.value}
    if members is not None:
        census = ap_census(members, len(fs), fs[0].cfg)
        report["census"] = census.to_dict()
        printed.update({"census (with d = 0)": census.with_trivial, "census (d != 0)": census.without_trivial})
    out.print_header(f"LAMBDA_{len(fs)} ({method})")
    out.print_values(printed)
    return report, True


def run_inverse(config: RunConfig, out: ReportOutput):
    f = _function_input(config)
    cert = inverse_oracle(f, config.delta, config.oracle, threads=config.threads)
    floor = config.oracle.theta(config.delta)
    best = cert or best_quadratic_correlation(f, threads=config.threads)
    out.print_header("INVERSE ORACLE")
    out.print_values({"floor": floor, "best |corr|": best.magnitude, "accepted": cert is not None})
    return {"floor": floor, "accepted": cert is not None, "certificate": best.to_dict(),
            "magnitude": best.magnitude}, True


def run_factor(config: RunConfig, out: ReportOutput):
    if not config.input:
        raise UsageError("factor needs --input FACTOR.json")
    factor = load_factor(config.input)
    stats = atom_statistics(factor)
    report = {"factor": factor.to_dict(), "complexity": list(factor.complexity()),
              "rank": factor_rank(factor), "atoms": stats.to_frame()}
    ok, errors = stats.validate()
    if config.growth:
        reduced = rank_reduce(factor, _growth(config.growth, DEFAULT_RANK_GROWTH))
        report["rank_reduced"] = {"factor": reduced.to_dict(), "complexity": list(reduced.complexity()),
                                  "rank": factor_rank(reduced)}
    out.print_header(f"FACTOR {factor}")
    out.print_values({"rank": report["rank"], "atoms": len(stats.rows), "flagged": len(stats.flagged())})
    out.print_validation(ok, errors)
    if config.output:
        out.save_to_csv(stats.to_frame(), "atom_statistics.csv")
    return report, ok


def run_decomposition(config: RunConfig, out: ReportOutput):
    f = _function_input(config, balanced_default=True)
    solver = DecompositionSolver(f, config.oracle, config.threads)
    if config.command == "kvn":
        method = config.method or "quadratic"
        if method == "linear":
            dec = solver.linear_kvn(config.delta)
        elif method == "quadratic":
            dec = solver.quadratic_kvn(config.delta)
        else:
            raise UsageError(f"kvn --method must be linear or quadratic, got '{method}'")
    else:
        method = config.method or "plain"
        if method == "plain":
            dec = solver.regularity(config.delta, _growth(config.growth, DEFAULT_GROWTH))
        elif method == "high-rank":
            dec = solver.regularity_high_rank(config.delta, _growth(config.growth, DEFAULT_RANK_GROWTH),
                                              _growth(config.growth2, DEFAULT_GROWTH))
        else:
            raise UsageError(f"regularity --method must be plain or high-rank, got '{method}'")
    ok, errors = dec.validate()
    out.print_header(f"DECOMPOSITION ({dec.kind})")
    out.print_values({"complexity": dec.factor.complexity(), "iterations": dec.iterations,
                      "energy": dec.energy_history[-1], **dec.measurements})
    out.print_validation(ok, errors)
    report = dec.to_dict()
    report["statistics"] = solver.get_statistics()
    report["validation"] = {"ok": ok, "errors": errors}
    return report, ok


def run_bhk(config: RunConfig, out: ReportOutput):
    cfg, members = _set_input(config)
    report = bhk_experiment(members, config.epsilon, cfg, config.oracle, config.threads)
    ok, errors = report.validate()
    out.print_header("FOUR-TERM PROGRESSIONS WITH A COMMON DIFFERENCE")
    out.print_values({"mode": report.mode, "alpha": report.alpha, "witness": report.witness_point,
                      "count": report.witness_count, "threshold": report.threshold, "margin": report.margin})
    if report.term_values:
        out.print_table(report.terms_frame(), "81-TERM SPLIT")
        if config.output:
            out.save_to_csv(report.terms_frame(), "bhk_terms.csv")
    out.print_validation(ok, errors)
    return report.to_dict(), ok


def verify_sections(table: pd.DataFrame) -> Dict[str, Dict[str, Any]]:
    """Text summary of a verify table: totals, one line per module, then the failures."""
    modules = {}
    for module, rows in table.groupby("module", sort=False):
        modules[module] = f"{int(rows['passed'].sum())}/{len(rows)} passed"
    failures = {f"{row.module}: {row.invariant}": f"{row.violations} violations, max error {row.max_error:.3g}"
                for row in table.itertuples() if not row.passed}
    sections = {
        "summary": {"checks": len(table), "passed": int(table["passed"].sum()),
                    "failed": int((~table["passed"]).sum())},
        "modules": modules,
    }
    if failures:
        sections["failures"] = failures
    return sections


def run_verify(config: RunConfig, out: ReportOutput):
    suite = InvariantSuite(n=config.n, seed=config.seed, trials=config.trials, threads=config.threads,
                           budget=config.budget)
    suite.add_all_checks()
    table = suite.run()
    out.print_table(table, "INVARIANT SUITE")
    ok = bool(table["passed"].all())
    failed = [f"{row.module}: {row.invariant} ({row.violations} violations)"
              for row in table.itertuples() if not row.passed]
    out.print_validation(ok, failed)
    if config.output:
        out.save_to_csv(table, "verify.csv")
        out.save_report("INVARIANT SUITE", verify_sections(table), "verify.txt")
    return {"checks": table, "passed": ok}, ok


# ----------------------------------------------------------------------

def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    config = config_from_args(args)
    out = ReportOutput(config, (os.path.dirname(config.output) or ".") if config.output else "output")

    print("=" * 80)
    print("QUADRATIC FOURIER ANALYSIS ON F_5^n")
    print("=" * 80)

    EVALUATIONS.reset()
    started = time.perf_counter()
    try:
        if config.command == "ft":
            report, ok = run_ft(config, out)
        elif config.command == "gowers":
            report, ok = run_gowers(config, out)
        elif config.command == "lambda":
            report, ok = run_lambda(config, out, args.weight)
        elif config.command == "inverse":
            report, ok = run_inverse(config, out)
        elif config.command == "factor":
            report, ok = run_factor(config, out)
        elif config.command in ("kvn", "regularity"):
            report, ok = run_decomposition(config, out)
        elif config.command == "bhk":
            report, ok = run_bhk(config, out)
        else:
            report, ok = run_verify(config, out)
    except (IdentityViolation, IterationCapExceeded) as exc:
        print(f"[X] {exc}")
        return 1
    except (UsageError, MalformedInputError, BudgetExceededError, DimensionTooLargeError,
            UnboundedInputError, ValueError, IndexError) as exc:
        print(f"[X] {exc}", file=sys.stderr)
        return 2

    metrics = {"evaluations": EVALUATIONS.count}
    if config.timings:
        metrics["wall_seconds"] = time.perf_counter() - started
    text = emit_report(report, config.output, config, metrics)
    if config.output:
        print(f"\nReport saved to: {config.output}")
    else:
        print(text)

    print("\n" + "=" * 80)
    print("DONE" if ok else "DONE WITH FAILURES")
    print("=" * 80)
    return 0 if ok else 1


def main():
    """Main function to run the toolkit."""
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
