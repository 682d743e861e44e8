"""
Fixed placement policies

The coarse-grain policies: everything local, everything remote, weights
remote, and results (every non-weight tensor) remote. All compute on the
host; pinned tensors keep their pin.
"""

import logging
from enum import Enum

from farplan.core.graph_model import ComputeLoc, Dag, Placement, TensorKind
from farplan.planner.plan import PlacementPlan

logger = logging.getLogger(__name__)


class Policy(str, Enum):
    ALL_LOCAL = "ALL_LOCAL"
    ALL_REMOTE = "ALL_REMOTE"
    WEIGHT_REMOTE = "WEIGHT_REMOTE"
    RESULT_REMOTE = "RESULT_REMOTE"


def _policy_placement(policy: Policy, kind: TensorKind) -> Placement:
    if policy == Policy.ALL_LOCAL:
        return Placement.LOCAL
    if policy == Policy.ALL_REMOTE:
        return Placement.REMOTE
    is_weight = kind == TensorKind.WEIGHT
    if policy == Policy.WEIGHT_REMOTE:
        return Placement.REMOTE if is_weight else Placement.LOCAL
    return Placement.LOCAL if is_weight else Placement.REMOTE


def fixed_policy(dag: Dag, policy: Policy) -> PlacementPlan:
    policy = Policy(policy)
    placement = {
        t.id: t.pinned or _policy_placement(policy, t.kind) for t in dag.tensors
    }
    compute = {op_id: ComputeLoc.HOST for op_id in dag.topo}
    logger.debug(f"Applied policy {policy.value} to {len(dag.ops)} ops")
    return PlacementPlan(compute=compute, placement=placement)
