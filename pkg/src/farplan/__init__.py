"""
farplan - far-memory compute offload planner

Decides, per operation of a computation DAG, whether to run on the host or on
the cores next to CXL-attached far memory, and whether each tensor lives in
local or remote memory, by minimizing a weighted latency / host-memory cost
over a profiled performance lookup table.
"""

__version__ = "0.3.0"
__author__ = "farplan developers"
__description__ = "Far-memory compute offload planner"

from farplan.planner.objective import Objective
from farplan.planner.partitioner import partition, run_partition
from farplan.sim.executor import simulate

__all__ = [
    "Objective",
    "partition",
    "run_partition",
    "simulate",
    "__version__",
    "__author__",
    "__description__",
]
