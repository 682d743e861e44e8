"""
Shared builders for tests: small hand-made DAGs and LUTs from callables
"""

from typing import Callable, Dict, Optional, Sequence

import numpy as np

from farplan.core.graph_model import (
    ComputeLoc,
    Dag,
    OpNode,
    Placement,
    TensorKind,
    TensorSpec,
    build_dag,
)
from farplan.core.perf_lut import PerfLUT
from farplan.core.platform_model import OpConfig, collapse_config, configs_for

H, D = ComputeLoc.HOST, ComputeLoc.DEVICE
L, R = Placement.LOCAL, Placement.REMOTE


def cfg(
    compute: ComputeLoc, weights: Placement, inputs: Placement, outputs: Placement
) -> OpConfig:
    return OpConfig.of(compute, weights, inputs, outputs)


def chain_dag(
    n_ops: int = 2,
    size: int = 100,
    pin_external: Optional[Placement] = None,
    weighted: bool = True,
) -> Dag:
    """x -> op0 -> t0 -> op1 -> ... -> y, each op with weight w<i>

    Every tensor is `size` bytes.
    """
    tensors = [
        TensorSpec(
            id="x", kind=TensorKind.EXTERNAL_INPUT, size_bytes=size, pinned=pin_external
        )
    ]
    ops = []
    prev = "x"
    for i in range(n_ops):
        out = "y" if i == n_ops - 1 else f"t{i}"
        kind = TensorKind.EXTERNAL_OUTPUT if out == "y" else TensorKind.INTERMEDIATE
        pinned = pin_external if out == "y" else None
        tensors.append(TensorSpec(id=out, kind=kind, size_bytes=size, pinned=pinned))
        weights = ()
        if weighted:
            tensors.append(
                TensorSpec(id=f"w{i}", kind=TensorKind.WEIGHT, size_bytes=size)
            )
            weights = (f"w{i}",)
        ops.append(
            OpNode(
                id=f"op{i}",
                flops=1000,
                weight_ids=weights,
                input_ids=(prev,),
                output_ids=(out,),
            )
        )
        prev = out
    return build_dag(ops, tensors)


def lut_from(dag: Dag, fn: Callable[[str, OpConfig], float]) -> PerfLUT:
    """Complete measured-style LUT with latency fn(op_id, cfg)"""
    entries: Dict[str, Dict[str, float]] = {}
    for op in dag.ops_in_topo():
        entries[op.id] = {c.code: float(fn(op.id, c)) for c in configs_for(op)}
    return PerfLUT(entries=entries, provenance="measured")


def table_lut(
    dag: Dag, table: Dict[str, Dict[OpConfig, float]], default: float = 10.0
) -> PerfLUT:
    """Explicit per-op entries; everything else costs `default`"""
    return lut_from(dag, lambda op_id, c: table.get(op_id, {}).get(c, default))


def multiplicative_lut(dag: Dag, rng: np.random.Generator) -> PerfLUT:
    """Base latency times a compute factor times per-axis placement factors

    Host prefers local memory and the device prefers remote memory (its own
    socket), with a mild penalty for the far side of each axis.
    """
    params = {}
    for op in dag.ops_in_topo():
        base = float(rng.uniform(1e-3, 1e-2))
        compute = {H: 1.0, D: float(rng.uniform(0.5, 3.0))}
        far = {
            (c, axis): float(rng.uniform(1.0, 1.2))
            for c in (H, D)
            for axis in ("weights", "inputs", "outputs")
        }
        params[op.id] = (base, compute, far)

    def latency(op_id: str, c: OpConfig) -> float:
        base, compute, far = params[op_id]
        near = L if c.compute == H else R
        value = base * compute[c.compute]
        for axis in ("weights", "inputs", "outputs"):
            if getattr(c, axis) != near:
                value *= far[(c.compute, axis)]
        return value

    return lut_from(dag, latency)


def random_order_lut(dag: Dag, rng: np.random.Generator) -> PerfLUT:
    """Every (op, config) latency drawn independently: arbitrary config orderings"""
    return lut_from(dag, lambda op_id, c: float(rng.uniform(1e-3, 1e-2)))


def effective_configs(dag: Dag, plan) -> Dict[str, OpConfig]:
    """Per-op configs implied by a plan's tensor placements"""
    return {
        op.id: collapse_config(op, plan.compute[op.id], plan.placement, dag)
        for op in dag.ops_in_topo()
    }


def local_bytes(dag: Dag, plan, tensor_ids: Sequence[str]) -> int:
    return sum(dag.tensor(t).size_bytes for t in tensor_ids if plan.placement[t] == L)
