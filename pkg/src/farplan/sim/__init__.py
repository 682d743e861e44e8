"""Plan simulation and the exhaustive oracle"""

from farplan.sim.executor import SimReport, plan_objective, simulate
from farplan.sim.oracle import oracle

__all__ = ["SimReport", "plan_objective", "simulate", "oracle"]
