#!/usr/bin/env python3
"""
farplan command line

    farplan gen           --shape chain --ops 5 --seed 7 --out dag.yaml
    farplan profile       --dag dag.yaml --platform B --out lut.csv
    farplan partition     --dag dag.yaml --lut lut.csv --alpha 0.5 --out plan.csv
    farplan simulate      --dag dag.yaml --lut lut.csv --plan plan.csv
    farplan pareto        --dag dag.yaml --platform B --alpha-grid 1,0.5,0
    farplan oracle-check  --dag dag.yaml --alpha-grid 0,0.5,1
    farplan oracle-check  --instances 200 --seed 1
    farplan policies      --dag dag.yaml
    farplan offload       --platform B

Machine-readable output goes to --out (or stdout); logs go to stderr.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from farplan import __version__
from farplan.cli import reports
from farplan.config import get_settings
from farplan.core.errors import FarplanError, UnknownPlatform
from farplan.core.graph_model import dump_dag, load_dag, write_dag
from farplan.core.perf_lut import PerfLUT, build_lut_synthetic, dump_lut, load_lut
from farplan.core.platform_model import PlatformSpec, default_platform, resolve_platform
from farplan.core.workloads import SIZE_PROFILES, Shape, gen_synthetic, get_size_profile
from farplan.offload.kernel_offload import (
    bundled_kernel_profiles,
    dump_offload_table,
    load_kernel_profiles,
)
from farplan.planner.objective import Objective
from farplan.planner.partitioner import run_partition
from farplan.planner.plan import dump_plan, load_plan
from farplan.planner.policies import Policy, fixed_policy
from farplan.sim.executor import dump_per_op, dump_report, simulate

logger = logging.getLogger("farplan.cli")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a number") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"alpha {value} outside [0, 1]")
    return value


def _alpha_grid(text: str) -> List[float]:
    grid = [_alpha(part) for part in text.split(",") if part.strip()]
    if not grid:
        raise argparse.ArgumentTypeError("empty alpha grid")
    return grid


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


def _platform(args: argparse.Namespace) -> PlatformSpec:
    settings = get_settings()
    spec = args.platform or settings.default_platform
    try:
        return default_platform(spec, args.stream_kernel, settings.migration_overhead_s)
    except UnknownPlatform:
        return resolve_platform(spec)


def _lut(args: argparse.Namespace, dag, platform: PlatformSpec) -> PerfLUT:
    if args.lut:
        return load_lut(args.lut)
    return build_lut_synthetic(dag, platform)


def _passes(args: argparse.Namespace) -> int:
    return args.passes or get_settings().conflict_passes


def _grid(args: argparse.Namespace) -> List[float]:
    return args.alpha_grid or list(get_settings().alpha_grid)


# Commands

def cmd_gen(args: argparse.Namespace) -> None:
    profile = get_size_profile(args.profile)
    if args.unpinned:
        profile = profile.model_copy(update={"pin_external": False})
    dag = gen_synthetic(args.shape, args.ops, args.seed, profile)
    if args.out:
        write_dag(dag, args.out)
    else:
        sys.stdout.write(dump_dag(dag))


def cmd_profile(args: argparse.Namespace) -> None:
    dag = load_dag(args.dag)
    lut = build_lut_synthetic(dag, _platform(args))
    _emit(dump_lut(lut, dag), args.out)


def cmd_partition(args: argparse.Namespace) -> None:
    dag = load_dag(args.dag)
    if args.policy:
        plan = fixed_policy(dag, Policy(args.policy))
    else:
        lut = _lut(args, dag, _platform(args))
        result = run_partition(dag, lut, Objective(alpha=args.alpha), _passes(args))
        logger.info(
            f"Partitioned {len(dag.ops)} ops at alpha={args.alpha}: "
            f"{len(result.initial_conflicts.conflicts)} conflicts resolved "
            f"in {result.passes} pass(es)"
        )
        plan = result.plan
    _emit(dump_plan(plan, dag), args.out)


def cmd_simulate(args: argparse.Namespace) -> None:
    dag = load_dag(args.dag)
    platform = _platform(args)
    lut = _lut(args, dag, platform)
    report = simulate(dag, load_plan(args.plan), lut, platform)
    _emit(dump_report(report), args.out)
    if args.per_op:
        _emit(dump_per_op(report, dag), args.per_op)


def cmd_pareto(args: argparse.Namespace) -> None:
    dag = load_dag(args.dag)
    platform = _platform(args)
    lut = _lut(args, dag, platform)
    points = reports.cmd_pareto(dag, lut, _grid(args), platform, _passes(args))
    _emit(reports.dump_pareto(points), args.out)


def cmd_oracle_check(args: argparse.Namespace) -> None:
    platform = _platform(args)
    if args.instances:
        results = reports.random_oracle_check(
            args.instances,
            args.seed,
            _grid(args),
            platform,
            max_ops=get_settings().oracle_check_max_ops,
            passes=_passes(args),
        )
        if args.out:
            _emit(reports.dump_instance_gaps(results), args.out)
        sys.stdout.write(reports.summary_line([r.row.gap for r in results]))
        return
    if not args.dag:
        raise argparse.ArgumentTypeError("oracle-check needs --dag or --instances")
    dag = load_dag(args.dag)
    lut = _lut(args, dag, platform)
    rows = reports.cmd_oracle_check(dag, lut, _grid(args), platform, _passes(args))
    _emit(reports.dump_gaps(rows), args.out)


def cmd_policies(args: argparse.Namespace) -> None:
    dag = load_dag(args.dag)
    platform = _platform(args)
    lut = _lut(args, dag, platform)
    _emit(reports.dump_policy_rows(reports.policy_sweep(dag, lut, platform)), args.out)


def cmd_offload(args: argparse.Namespace) -> None:
    settings = get_settings()
    platform = _platform(args)
    if args.profiles:
        profiles = load_kernel_profiles(args.profiles, platform)
    else:
        profiles = bundled_kernel_profiles(platform)
    threshold = settings.offload_threshold if args.threshold is None else args.threshold
    cap = args.overhead_cap
    if cap is None:
        cap = settings.offload_overhead_cap
    _emit(dump_offload_table(profiles, threshold, cap), args.out)


# Parser

def _add_platform(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--platform", help="A, B or a YAML platform file (default from settings)"
    )
    p.add_argument(
        "--stream-kernel",
        default="COPY",
        choices=["COPY", "SCALE", "ADD", "TRIAD"],
        help="STREAM kernel whose bandwidth row parameterizes a named platform",
    )


def _add_lut(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--lut", help="Measured LUT file; a synthetic LUT is built when omitted"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="farplan", description="Far-memory compute offload planner"
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="Generate a synthetic DAG")
    p.add_argument("--shape", required=True, choices=[s.value for s in Shape])
    p.add_argument("--ops", required=True, type=_positive_int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile", default="default", choices=sorted(SIZE_PROFILES))
    p.add_argument(
        "--unpinned", action="store_true", help="Leave external inputs/outputs unpinned"
    )
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("profile", help="Build a synthetic LUT for a DAG")
    p.add_argument("--dag", required=True)
    _add_platform(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("partition", help="Plan compute and placement")
    p.add_argument("--dag", required=True)
    _add_lut(p)
    _add_platform(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--alpha", type=_alpha)
    mode.add_argument("--policy", choices=[pol.value for pol in Policy])
    p.add_argument(
        "--passes", type=_positive_int, help="Conflict-resolution passes (default 1)"
    )
    p.add_argument("--out")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("simulate", help="Simulate a plan")
    p.add_argument("--dag", required=True)
    p.add_argument("--plan", required=True)
    _add_lut(p)
    _add_platform(p)
    p.add_argument("--per-op", help="Also write per-op latencies here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pareto", help="Sweep alpha and compare with the fixed policies")
    p.add_argument("--dag", required=True)
    _add_lut(p)
    _add_platform(p)
    p.add_argument("--alpha-grid", type=_alpha_grid)
    p.add_argument("--passes", type=_positive_int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser(
        "oracle-check", help="Compare the partitioner with the exhaustive optimum"
    )
    p.add_argument("--dag")
    _add_lut(p)
    _add_platform(p)
    p.add_argument("--alpha-grid", type=_alpha_grid)
    p.add_argument(
        "--instances",
        type=_positive_int,
        help="Run on this many seeded random DAGs instead",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--passes", type=_positive_int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("policies", help="Fixed-policy slowdown table")
    p.add_argument("--dag", required=True)
    _add_lut(p)
    _add_platform(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_policies)

    p = sub.add_parser("offload", help="Kernel offload metrics and decisions")
    p.add_argument(
        "--profiles",
        help="Kernel profile CSV; bundled profiles for the platform when omitted",
    )
    _add_platform(p)
    p.add_argument("--threshold", type=float)
    p.add_argument("--overhead-cap", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_offload)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=args.log_level or get_settings().log_level,
        format=LOG_FORMAT,
        stream=sys.stderr,
    )

    try:
        args.func(args)
    except FarplanError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except (ValueError, argparse.ArgumentTypeError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
