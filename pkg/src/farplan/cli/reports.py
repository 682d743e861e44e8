"""
Report builders behind the CLI commands

Pareto sweeps, fixed-policy comparisons and oracle gap checks, plus their
delimited-text renderings. Everything here is deterministic: rows come out
in a fixed order and floats are written with repr.
"""

import csv
import io
import logging
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from farplan.core.errors import OracleViolation
from farplan.core.graph_model import Dag
from farplan.core.perf_lut import PerfLUT, build_lut_synthetic
from farplan.core.platform_model import PlatformSpec
from farplan.core.workloads import Shape, gen_synthetic
from farplan.planner.objective import Objective
from farplan.planner.partitioner import partition
from farplan.planner.plan import PlacementPlan
from farplan.planner.policies import Policy, fixed_policy
from farplan.sim.executor import SimReport, plan_objective, simulate
from farplan.sim.oracle import gap_summary, oracle, relative_gap

logger = logging.getLogger(__name__)

PARETO_HEADER = [
    "alpha",
    "latency_s",
    "latency_rel",
    "remote_fraction",
    "host_bytes",
    "migrations",
]
POLICY_HEADER = ["policy", "latency_s", "slowdown", "remote_fraction", "host_bytes"]
GAP_HEADER = ["alpha", "partition_cost", "oracle_cost", "gap"]
INSTANCE_GAP_HEADER = ["instance", "shape", "n_ops", "seed"] + GAP_HEADER

GAP_TOLERANCE = 1e-9


def _writer(buf: io.StringIO):
    return csv.writer(buf, lineterminator="\n")


def _all_local_latency(dag: Dag, lut: PerfLUT, platform: PlatformSpec) -> float:
    plan = fixed_policy(dag, Policy.ALL_LOCAL)
    latency = simulate(dag, plan, lut, platform).latency_s
    if latency <= 0:
        logger.warning("ALL_LOCAL latency is zero; latency_rel uses 1.0")
        return 1.0
    return latency


# Pareto sweep

class ParetoPoint(BaseModel):
    """One row of the latency / remote-data trade-off

    alpha holds the policy name on policy rows.
    """

    model_config = ConfigDict(frozen=True)

    alpha: Union[float, Policy]
    latency_s: float
    latency_rel: float
    remote_fraction: float
    host_bytes: int
    migrations: int

    @property
    def is_policy(self) -> bool:
        return isinstance(self.alpha, Policy)


def _point(
    alpha: Union[float, Policy], report: SimReport, reference: float
) -> ParetoPoint:
    return ParetoPoint(
        alpha=alpha,
        latency_s=report.latency_s,
        latency_rel=report.latency_s / reference,
        remote_fraction=report.remote_fraction,
        host_bytes=report.host_bytes,
        migrations=report.migrations,
    )


def cmd_pareto(
    dag: Dag,
    lut: PerfLUT,
    alpha_grid: Sequence[float],
    platform: PlatformSpec,
    passes: int = 1,
    include_policies: bool = True,
) -> List[ParetoPoint]:
    """Partition and simulate at each alpha (descending), then the fixed policies"""
    for alpha in alpha_grid:
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha {alpha} outside [0, 1]")
    reference = _all_local_latency(dag, lut, platform)
    points: List[ParetoPoint] = []
    for alpha in sorted(set(alpha_grid), reverse=True):
        plan = partition(dag, lut, Objective(alpha=alpha), passes)
        point = _point(alpha, simulate(dag, plan, lut, platform), reference)
        logger.info(
            f"alpha={alpha}: latency_rel={point.latency_rel:.4f}, "
            f"remote_fraction={point.remote_fraction:.4f}"
        )
        points.append(point)
    if include_policies:
        for policy in Policy:
            report = simulate(dag, fixed_policy(dag, policy), lut, platform)
            points.append(_point(policy, report, reference))
    return points


def dump_pareto(points: Iterable[ParetoPoint]) -> str:
    buf = io.StringIO()
    writer = _writer(buf)
    writer.writerow(PARETO_HEADER)
    for p in points:
        writer.writerow([
            p.alpha.value if p.is_policy else repr(float(p.alpha)),
            repr(p.latency_s),
            repr(p.latency_rel),
            repr(p.remote_fraction),
            p.host_bytes,
            p.migrations,
        ])
    return buf.getvalue()


def best_tradeoff(
    points: Iterable[ParetoPoint], min_remote_fraction: float
) -> Optional[ParetoPoint]:
    """Fastest swept point keeping at least min_remote_fraction of bytes remote"""
    eligible = [
        p
        for p in points
        if not p.is_policy and p.remote_fraction >= min_remote_fraction
    ]
    return min(eligible, key=lambda p: (p.latency_rel, -float(p.alpha)), default=None)


# Coarse-grain policy comparison

class PolicyRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: Policy
    latency_s: float
    slowdown: float
    remote_fraction: float
    host_bytes: int


def policy_sweep(dag: Dag, lut: PerfLUT, platform: PlatformSpec) -> List[PolicyRow]:
    """Each fixed policy's latency relative to ALL_LOCAL"""
    reference = _all_local_latency(dag, lut, platform)
    rows = []
    for policy in Policy:
        report = simulate(dag, fixed_policy(dag, policy), lut, platform)
        rows.append(
            PolicyRow(
                policy=policy,
                latency_s=report.latency_s,
                slowdown=report.latency_s / reference,
                remote_fraction=report.remote_fraction,
                host_bytes=report.host_bytes,
            )
        )
    return rows


def dump_policy_rows(rows: Iterable[PolicyRow], workload: Optional[str] = None) -> str:
    buf = io.StringIO()
    writer = _writer(buf)
    writer.writerow((["workload"] if workload is not None else []) + POLICY_HEADER)
    for r in rows:
        prefix = [workload] if workload is not None else []
        writer.writerow(
            prefix
            + [
                r.policy.value,
                repr(r.latency_s),
                repr(r.slowdown),
                repr(r.remote_fraction),
                r.host_bytes,
            ]
        )
    return buf.getvalue()


# Oracle checks

class GapRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    partition_cost: float
    oracle_cost: float
    gap: float


def gap_at(
    dag: Dag,
    lut: PerfLUT,
    alpha: float,
    platform: PlatformSpec,
    passes: int = 1,
) -> GapRow:
    obj = Objective(alpha=alpha).resolve(dag, lut)
    plan: PlacementPlan = partition(dag, lut, obj, passes)
    candidate = plan_objective(simulate(dag, plan, lut, platform), obj)
    _, optimum = oracle(dag, lut, obj, platform)
    gap = relative_gap(candidate, optimum)
    if gap < -GAP_TOLERANCE:
        raise OracleViolation(alpha, candidate, optimum)
    return GapRow(
        alpha=alpha, partition_cost=candidate, oracle_cost=optimum, gap=max(gap, 0.0)
    )


def cmd_oracle_check(
    dag: Dag,
    lut: PerfLUT,
    alpha_grid: Sequence[float],
    platform: PlatformSpec,
    passes: int = 1,
) -> List[GapRow]:
    """Partitioner vs exhaustive optimum at each alpha (descending)"""
    return [
        gap_at(dag, lut, alpha, platform, passes)
        for alpha in sorted(set(alpha_grid), reverse=True)
    ]


def dump_gaps(rows: Iterable[GapRow]) -> str:
    buf = io.StringIO()
    writer = _writer(buf)
    writer.writerow(GAP_HEADER)
    for r in rows:
        writer.writerow(
            [repr(r.alpha), repr(r.partition_cost), repr(r.oracle_cost), repr(r.gap)]
        )
    return buf.getvalue()


class InstanceGap(BaseModel):
    model_config = ConfigDict(frozen=True)

    instance: int
    shape: Shape
    n_ops: int
    seed: int
    row: GapRow


def random_instances(count: int, seed: int, max_ops: int):
    """(shape, n_ops, instance seed) triples drawn from one seeded generator"""
    rng = np.random.default_rng(seed)
    shapes = list(Shape)
    for _ in range(count):
        shape = shapes[int(rng.integers(len(shapes)))]
        n_ops = int(rng.integers(1, max_ops, endpoint=True))
        if shape == Shape.FANOUT and n_ops < 3:
            shape = Shape.CHAIN
        yield shape, n_ops, int(rng.integers(2**31))


def random_oracle_check(
    instances: int,
    seed: int,
    alpha_grid: Sequence[float],
    platform: PlatformSpec,
    max_ops: int = 10,
    passes: int = 1,
) -> List[InstanceGap]:
    """Gap rows over seeded random DAGs with synthetic LUTs on platform"""
    results: List[InstanceGap] = []
    drawn = random_instances(instances, seed, max_ops)
    for i, (shape, n_ops, inst_seed) in enumerate(drawn):
        dag = gen_synthetic(shape.value, n_ops, inst_seed)
        lut = build_lut_synthetic(dag, platform)
        for row in cmd_oracle_check(dag, lut, alpha_grid, platform, passes):
            results.append(
                InstanceGap(
                    instance=i, shape=shape, n_ops=n_ops, seed=inst_seed, row=row
                )
            )
    summary = gap_summary([r.row.gap for r in results])
    logger.info(
        f"Oracle check over {instances} instances: "
        f"median gap {summary['median']:.4%}, max {summary['max']:.4%}"
    )
    return results


def dump_instance_gaps(results: Iterable[InstanceGap]) -> str:
    buf = io.StringIO()
    writer = _writer(buf)
    writer.writerow(INSTANCE_GAP_HEADER)
    for r in results:
        g = r.row
        writer.writerow(
            [
                r.instance,
                r.shape.value,
                r.n_ops,
                r.seed,
                repr(g.alpha),
                repr(g.partition_cost),
                repr(g.oracle_cost),
                repr(g.gap),
            ]
        )
    return buf.getvalue()


def summary_line(gaps: Sequence[float]) -> str:
    s = gap_summary(gaps)
    return (
        f"cases={s['count']} median_gap={s['median']!r} "
        f"max_gap={s['max']!r} mean_gap={s['mean']!r}\n"
    )
