"""
Sequential Executor Simulator

Evaluates a plan against a lookup table: ops run one after another in
topological order, each priced at the LUT entry for the config its tensors'
placements collapse to, plus a fixed overhead for every host<->device
hand-off between consecutive ops.
"""

import csv
import io
import logging
from typing import Dict

from pydantic import BaseModel, ConfigDict, Field

from farplan.core.graph_model import Dag, Placement, total_bytes
from farplan.core.perf_lut import PerfLUT
from farplan.core.platform_model import PlatformSpec, collapse_config
from farplan.planner.objective import Objective
from farplan.planner.plan import PlacementPlan, validate_plan

logger = logging.getLogger(__name__)


class SimReport(BaseModel):
    """End-to-end outcome of one plan"""

    model_config = ConfigDict(frozen=True)

    latency_s: float = Field(ge=0.0)
    host_bytes: int = Field(ge=0)
    remote_bytes: int = Field(ge=0)
    remote_fraction: float = Field(ge=0.0, le=1.0)
    migrations: int = Field(ge=0)
    migration_overhead_s: float = Field(0.0, ge=0.0)
    per_op_latency: Dict[str, float] = {}

    @property
    def compute_latency_s(self) -> float:
        return sum(self.per_op_latency.values())


def simulate(
    dag: Dag, plan: PlacementPlan, lut: PerfLUT, platform: PlatformSpec
) -> SimReport:
    validate_plan(plan, dag)

    per_op: Dict[str, float] = {}
    migrations = 0
    previous = None
    for op in dag.ops_in_topo():
        compute = plan.compute[op.id]
        cfg = collapse_config(op, compute, plan.placement, dag)
        per_op[op.id] = lut.latency(op, cfg)
        if previous is not None and compute != previous:
            migrations += 1
        previous = compute

    host = sum(
        t.size_bytes for t in dag.tensors if plan.placement[t.id] == Placement.LOCAL
    )
    total = total_bytes(dag)
    remote = total - host
    overhead = migrations * platform.migration_overhead_s
    latency = sum(per_op[op_id] for op_id in dag.topo) + overhead

    return SimReport(
        latency_s=latency,
        host_bytes=host,
        remote_bytes=remote,
        remote_fraction=remote / total if total else 0.0,
        migrations=migrations,
        migration_overhead_s=overhead,
        per_op_latency=per_op,
    )


def plan_objective(report: SimReport, obj: Objective) -> float:
    """Whole-plan weighted sum; obj must have resolved norms"""
    return obj.combine(report.latency_s, report.host_bytes)


# Report formats

def dump_report(report: SimReport) -> str:
    """Flat key=value document"""
    fields = {
        "latency_s": repr(report.latency_s),
        "host_bytes": str(report.host_bytes),
        "remote_bytes": str(report.remote_bytes),
        "remote_fraction": repr(report.remote_fraction),
        "migrations": str(report.migrations),
        "migration_overhead_s": repr(report.migration_overhead_s),
    }
    return "".join(f"{k}={v}\n" for k, v in fields.items())


def dump_per_op(report: SimReport, dag: Dag) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["op_id", "latency_s"])
    for op_id in dag.topo:
        writer.writerow([op_id, repr(report.per_op_latency[op_id])])
    return buf.getvalue()
