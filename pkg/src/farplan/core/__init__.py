"""
farplan Core Package

DAG model, synthetic workloads, platform model and performance lookup tables.
"""

from farplan.core.graph_model import Dag, OpNode, TensorSpec, build_dag
from farplan.core.perf_lut import PerfLUT, build_lut_synthetic, load_lut
from farplan.core.platform_model import OpConfig, PlatformSpec, default_platform
from farplan.core.workloads import gen_synthetic

__all__ = [
    "Dag",
    "OpNode",
    "TensorSpec",
    "build_dag",
    "PerfLUT",
    "build_lut_synthetic",
    "load_lut",
    "OpConfig",
    "PlatformSpec",
    "default_platform",
    "gen_synthetic",
]
