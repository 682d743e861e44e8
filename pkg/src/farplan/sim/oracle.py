"""
Exhaustive placement oracle

Finds the plan with the globally minimal plan_objective(simulate(...)) over
every per-tensor placement and per-op compute assignment consistent with the
pins. The search walks ops in topological order, deciding each op's compute
side and every tensor it is the first to touch; sub-searches that start from
the same live-tensor frontier are solved once. The result is identical to
flat enumeration but still exponential, hence the size caps.
"""

import itertools
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from farplan.config import get_settings
from farplan.core.errors import TooLarge
from farplan.core.graph_model import ComputeLoc, Dag, Placement
from farplan.core.perf_lut import PerfLUT, require_complete
from farplan.core.platform_model import PlatformSpec, collapse_config
from farplan.planner.objective import Objective
from farplan.planner.plan import PlacementPlan
from farplan.sim.executor import plan_objective, simulate

logger = logging.getLogger(__name__)

REL_TOL = 1e-12

# (compute, placements of the tensors an op decides)
Choice = Tuple[ComputeLoc, Tuple[Placement, ...]]


def _ordered_choices(n_new: int) -> List[Choice]:
    """Device/Remote-first: fewest host/local decisions, then lexicographic"""
    combos = itertools.product((0, 1), repeat=1 + n_new)
    ordered = sorted(combos, key=lambda bits: (sum(bits), bits))
    return [
        (
            ComputeLoc.HOST if bits[0] else ComputeLoc.DEVICE,
            tuple(Placement.LOCAL if b else Placement.REMOTE for b in bits[1:]),
        )
        for bits in ordered
    ]


def _improves(candidate: float, best: Optional[float]) -> bool:
    if best is None:
        return True
    return candidate < best and not math.isclose(candidate, best, rel_tol=REL_TOL)


def check_size(dag: Dag, max_ops: int, max_tensors: int) -> None:
    if len(dag.ops) > max_ops or len(dag.tensors) > max_tensors:
        raise TooLarge(len(dag.ops), len(dag.tensors), max_ops, max_tensors)


def oracle(
    dag: Dag,
    lut: PerfLUT,
    obj: Objective,
    platform: PlatformSpec,
    max_ops: Optional[int] = None,
    max_tensors: Optional[int] = None,
) -> Tuple[PlacementPlan, float]:
    """Globally optimal plan and its objective value"""
    settings = get_settings()
    check_size(
        dag,
        settings.oracle_max_ops if max_ops is None else max_ops,
        settings.oracle_max_tensors if max_tensors is None else max_tensors,
    )
    require_complete(lut, dag)
    obj = obj.resolve(dag, lut)

    ops = dag.ops_in_topo()
    n = len(ops)

    first_touch: Dict[str, int] = {}
    last_touch: Dict[str, int] = {}
    for i, op in enumerate(ops):
        for tid in (*op.weight_ids, *op.input_ids, *op.output_ids):
            first_touch.setdefault(tid, i)
            last_touch[tid] = i

    pinned = {t.id: t.pinned for t in dag.tensors if t.pinned is not None}
    new_at: List[List[str]] = [[] for _ in ops]
    for i, op in enumerate(ops):
        for tid in (*op.weight_ids, *op.input_ids, *op.output_ids):
            if tid not in pinned and first_touch[tid] == i and tid not in new_at[i]:
                new_at[i].append(tid)
    live_after: List[Tuple[str, ...]] = [
        tuple(
            tid for tid in sorted(first_touch)
            if tid not in pinned and first_touch[tid] <= i < last_touch[tid]
        )
        for i in range(n)
    ]
    choices = [_ordered_choices(len(new_at[i])) for i in range(n)]

    alpha = obj.alpha
    lat_w = alpha / obj.latency_norm
    bytes_w = (1.0 - alpha) / obj.bytes_norm
    migration_cost = lat_w * platform.migration_overhead_s
    sizes = {t.id: t.size_bytes for t in dag.tensors}
    step_latency: Dict[Tuple[int, str], float] = {}

    memo: Dict[
        Tuple[int, Optional[ComputeLoc], Tuple[Placement, ...]], Tuple[float, Choice]
    ] = {}

    def solve(i: int, prev: Optional[ComputeLoc], live: Tuple[Placement, ...]) -> float:
        if i == n:
            return 0.0
        key = (i, prev, live)
        if key in memo:
            return memo[key][0]
        op = ops[i]
        known = dict(zip(live_after[i - 1], live)) if i > 0 else {}
        known.update(pinned)
        best: Optional[float] = None
        best_choice: Optional[Choice] = None
        for compute, decided in choices[i]:
            placement = dict(known)
            placement.update(zip(new_at[i], decided))
            cfg = collapse_config(op, compute, placement, dag)
            lk = (i, cfg.code)
            if lk not in step_latency:
                step_latency[lk] = lut.latency(op, cfg)
            step = lat_w * step_latency[lk] if alpha else 0.0
            step += bytes_w * sum(
                sizes[tid]
                for tid, p in zip(new_at[i], decided)
                if p == Placement.LOCAL
            )
            if prev is not None and compute != prev:
                step += migration_cost
            carried = tuple(placement[tid] for tid in live_after[i])
            total = step + solve(i + 1, compute, carried)
            if _improves(total, best):
                best, best_choice = total, (compute, decided)
        memo[key] = (best, best_choice)
        return best

    solve(0, None, ())

    compute_plan: Dict[str, ComputeLoc] = {}
    placement_plan: Dict[str, Placement] = dict(pinned)
    prev: Optional[ComputeLoc] = None
    live: Tuple[Placement, ...] = ()
    for i, op in enumerate(ops):
        _, (compute, decided) = memo[(i, prev, live)]
        compute_plan[op.id] = compute
        placement_plan.update(zip(new_at[i], decided))
        prev = compute
        live = tuple(placement_plan[tid] for tid in live_after[i])
    for t in dag.tensors:
        placement_plan.setdefault(t.id, Placement.REMOTE)

    plan = PlacementPlan(
        compute=compute_plan,
        placement={t.id: placement_plan[t.id] for t in dag.tensors},
    )
    cost = plan_objective(simulate(dag, plan, lut, platform), obj)
    logger.debug(
        f"Oracle: {len(memo)} frontier states, cost {cost:.6g} at alpha={obj.alpha}"
    )
    return plan, cost


def relative_gap(candidate: float, optimum: float) -> float:
    """(candidate - optimum) / optimum; zero when both vanish"""
    if optimum == 0:
        return 0.0 if candidate == 0 else math.inf
    return (candidate - optimum) / optimum


def gap_summary(gaps: Sequence[float]) -> Dict[str, float]:
    arr = np.asarray(gaps, dtype=float)
    if arr.size == 0:
        return {"count": 0, "median": 0.0, "max": 0.0, "mean": 0.0}
    return {
        "count": int(arr.size),
        "median": float(np.median(arr)),
        "max": float(arr.max()),
        "mean": float(arr.mean()),
    }
