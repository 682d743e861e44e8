"""
farplan Planner Package

Objective, the offline partitioner pipeline and the fixed placement policies.
"""

from farplan.planner.objective import Objective, op_cost
from farplan.planner.partitioner import (
    detect_conflicts,
    partition,
    per_op_select,
    resolve_conflicts,
    view_conflicts,
)
from farplan.planner.plan import PlacementPlan
from farplan.planner.policies import Policy, fixed_policy

__all__ = [
    "Objective",
    "op_cost",
    "per_op_select",
    "detect_conflicts",
    "resolve_conflicts",
    "partition",
    "view_conflicts",
    "PlacementPlan",
    "Policy",
    "fixed_policy",
]
