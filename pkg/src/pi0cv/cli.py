"""Command-line front end.

Subcommands
-----------
estimate    estimate the null proportion from a file of p-values
mtp         run the plug-in step-up procedure and report rejections
simulate    run a replicated scenario study and write summary tables
risk-debug  dump per-partition risk internals for cross-checking

Exit codes: 0 success, 2 usage error, 3 input data error, 4 numeric
degeneracy in the estimator.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import sim_harness
from .errors import (
    DegenerateSelection,
    InputError,
    InvalidAlpha,
    InvalidLambda,
    InvalidRange,
    InvalidTheta,
)
from .histogram_core import PartitionSpec, enumerate_partitions, load_sample, read_pvalue_file
from .jsonio import dumps17
from .lpo_risk import partition_diagnostics
from .mtp import plugin_mtp, rejected_mask
from .pi0_estimator import EstimatorConfig, estimate_json_dict, estimate_pi0
from .sim_harness import parse_scenario_file, run_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _emit(payload: dict, fmt: str, output: str | None) -> None:
    if fmt == "csv":
        def cell(value):
            if isinstance(value, str):
                return value
            if isinstance(value, (list, tuple)):
                return ";".join(str(v) for v in value)
            return dumps17(value)
        lines = [f"{key},{cell(value)}" for key, value in payload.items()]
        _write("\n".join(lines) + "\n", output)
    else:
        _write(dumps17(payload) + "\n", output)


def _load_input(args) -> tuple:
    raw = read_pvalue_file(args.input, column=args.column)
    return raw, load_sample(raw)


def _estimator_config(args) -> EstimatorConfig:
    return EstimatorConfig(n_min=args.nmin, n_max=args.nmax,
                           method=args.method, lam=args.lam)


def cmd_estimate(args) -> int:
    _, sample = _load_input(args)
    est = estimate_pi0(sample, _estimator_config(args))
    if est.degenerate:
        _emit({"error": "degenerate selection", **estimate_json_dict(est)},
              args.format, args.output)
        return EXIT_DEGENERATE
    _emit(estimate_json_dict(est), args.format, args.output)
    return EXIT_OK


def cmd_mtp(args) -> int:
    raw, sample = _load_input(args)
    if args.pi0 is not None:
        pi0 = args.pi0
        if not 0.0 < pi0 <= 1.0:
            raise InvalidTheta(f"--pi0 must lie in (0, 1], got {pi0}")
    else:
        est = estimate_pi0(sample, _estimator_config(args))
        if est.degenerate:
            _emit({"error": "degenerate selection"}, args.format, args.output)
            return EXIT_DEGENERATE
        pi0 = est
    result = plugin_mtp(sample, args.alpha, pi0, args.delta)
    mask = rejected_mask(raw, result)
    base = 1 if args.one_based else 0
    payload = {
        "alpha": result.alpha,
        "theta": result.theta,
        "delta": result.delta,
        "k_hat": result.k_hat,
        "threshold": result.threshold,
        "rejected_indices": [int(i) + base for i in mask.nonzero()[0]],
    }
    _emit(payload, args.format, args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.scenario:
        spec, alpha = parse_scenario_file(args.scenario)
    else:
        if args.kind is None:
            raise InputError("either --scenario or --kind is required")
        spec = sim_harness.ScenarioSpec(
            kind=args.kind, pi0=args.pi0, m=args.m, reps=args.reps, seed=args.seed,
            s=args.s, lambda_star=args.lambda_star, a=args.a, b=args.b, sd=args.sd)
        alpha = args.alpha
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    table = run_scenario(spec, methods=methods, alpha=alpha, delta=args.delta)
    if args.output:
        base = Path(args.output)
        sim_harness.write_summary_csv(table, base.with_name(base.name + "_methods.csv"),
                                      base.with_name(base.name + "_procedures.csv"))
        sim_harness.write_replicates_json(table, base.with_name(base.name + "_replicates.json"))
    else:
        out = ["method,bias_x100,std_x100,mse_x100"]
        for name, row in table.methods.items():
            out.append(f"{name},{row.bias_x100:.17g},{row.std_x100:.17g},{row.mse_x100:.17g}")
        out.append("")
        out.append("procedure,fdr_x100,fnr_x100")
        for name, row in table.procedures.items():
            out.append(f"{name},{row.fdr_x100:.17g},{row.fnr_x100:.17g}")
        sys.stdout.write("\n".join(out) + "\n")
    if not table.valid:
        sys.stderr.write("warning: table contains failed replicates\n")
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_risk_debug(args) -> int:
    _, sample = _load_input(args)
    lines = []
    if args.all:
        count = 0
        for spec in enumerate_partitions(args.nmin, args.nmax):
            if args.limit is not None and count >= args.limit:
                break
            lines.append(dumps17(partition_diagnostics(sample, spec)))
            count += 1
    else:
        if args.N is None or args.k is None or args.l is None:
            raise InputError("risk-debug needs --N, --k and --l, or --all")
        spec = PartitionSpec(args.N, args.k, args.l)
        lines.append(dumps17(partition_diagnostics(sample, spec)))
    _write("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pi0cv",
                                     description="null-proportion estimation and plug-in FDR control")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, with_format=True):
        p.add_argument("--input", required=True, help="file of p-values")
        p.add_argument("--column", default=None, help="CSV column name (default: plain text)")
        p.add_argument("--output", default=None, help="output path (default: stdout)")
        if with_format:
            p.add_argument("--format", choices=("json", "csv"), default="json")

    def add_estimator(p):
        p.add_argument("--method", choices=("lpo", "loo", "ss", "storey"), default="lpo")
        p.add_argument("--lambda", dest="lam", type=float, default=0.5,
                       help="cutoff for --method ss")
        p.add_argument("--nmin", type=int, default=1)
        p.add_argument("--nmax", type=int, default=100)

    p = sub.add_parser("estimate", help="estimate the proportion of true nulls")
    add_io(p)
    add_estimator(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("mtp", help="plug-in step-up testing")
    add_io(p)
    add_estimator(p)
    p.add_argument("--alpha", type=float, default=0.15)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--pi0", type=float, default=None,
                   help="plug this value instead of estimating")
    p.add_argument("--one-based", action="store_true",
                   help="report 1-based rejected indices")
    p.set_defaults(func=cmd_mtp)

    p = sub.add_parser("simulate", help="replicated scenario study")
    p.add_argument("--scenario", default=None, help="flat key=value scenario file")
    p.add_argument("--kind", choices=sim_harness.KINDS, default=None)
    p.add_argument("--pi0", type=float, default=0.9)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--lambda-star", dest="lambda_star", type=float, default=None)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--sd", type=float, default=None)
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.15,
                   help="target FDR level for inline runs (a --scenario file carries its own)")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--methods", default=",".join(sim_harness.DEFAULT_METHODS))
    p.add_argument("--output", default=None, help="base path for CSV/JSON outputs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("risk-debug", help="dump per-partition risk internals as JSON lines")
    add_io(p, with_format=False)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--all", action="store_true", help="enumerate the whole family")
    p.add_argument("--limit", type=int, default=None, help="cap --all output lines")
    p.add_argument("--nmin", type=int, default=1)
    p.add_argument("--nmax", type=int, default=100)
    p.set_defaults(func=cmd_risk_debug)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidAlpha, InvalidTheta, InvalidLambda, InvalidRange) as exc:
        sys.stderr.write(dumps17({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_USAGE
    except InputError as exc:
        sys.stderr.write(dumps17({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_DATA
    except DegenerateSelection as exc:
        sys.stderr.write(dumps17({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_DEGENERATE
    except OSError as exc:
        sys.stderr.write(dumps17({"error": "IOError", "message": str(exc)}) + "\n")
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
