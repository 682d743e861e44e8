"""
Weighted-sum objective

alpha trades normalized latency against normalized host-resident bytes:
alpha = 1 is pure latency, alpha = 0 pure host-DRAM minimization. op_cost is
the per-op view the partitioner optimizes; the executor's plan_objective is
its whole-plan counterpart.
"""

import logging
from typing import Callable, Optional

from pydantic import BaseModel, ConfigDict, Field

from farplan.core.graph_model import (
    ComputeLoc,
    Dag,
    OpNode,
    Placement,
    TensorKind,
    total_bytes,
)
from farplan.core.perf_lut import PerfLUT
from farplan.core.platform_model import OpConfig, collapse_config

logger = logging.getLogger(__name__)

LatencyFn = Callable[[OpNode, OpConfig], float]


class Objective(BaseModel):
    """Latency/host-bytes weighting; norms default from the DAG and LUT"""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(ge=0.0, le=1.0)
    latency_norm: Optional[float] = Field(None, gt=0.0)
    bytes_norm: Optional[float] = Field(None, gt=0.0)

    @property
    def is_resolved(self) -> bool:
        return self.latency_norm is not None and self.bytes_norm is not None

    def resolve(
        self,
        dag: Dag,
        lut: PerfLUT,
        latency: Optional[LatencyFn] = None,
    ) -> "Objective":
        """Fill missing norms: ALL_LOCAL latency and total footprint

        `latency` replaces `lut.latency` for the ALL_LOCAL lookups, so a caller
        counting LUT reads sees them too.
        """
        if self.is_resolved:
            return self
        latency_norm = self.latency_norm
        if latency_norm is None:
            latency_norm = all_local_latency(dag, lut, latency)
            if latency_norm <= 0:
                logger.warning("ALL_LOCAL latency is zero; using latency_norm = 1.0")
                latency_norm = 1.0
        bytes_norm = self.bytes_norm
        if bytes_norm is None:
            bytes_norm = float(total_bytes(dag))
            if bytes_norm <= 0:
                logger.warning("DAG footprint is zero; using bytes_norm = 1.0")
                bytes_norm = 1.0
        return self.model_copy(
            update={"latency_norm": latency_norm, "bytes_norm": bytes_norm}
        )

    def combine(self, latency_s: float, host_bytes: float) -> float:
        if not self.is_resolved:
            raise ValueError(
                "objective norms are unresolved; call resolve(dag, lut) first"
            )
        latency_term = self.alpha * latency_s / self.latency_norm
        return latency_term + (1.0 - self.alpha) * host_bytes / self.bytes_norm


def all_local_latency(
    dag: Dag,
    lut: PerfLUT,
    latency: Optional[LatencyFn] = None,
) -> float:
    """Latency of running everything on the host with every tensor in local memory"""
    read = latency or lut.latency
    local = {tid: Placement.LOCAL for tid in dag.tensor_ids()}
    return sum(
        read(op, collapse_config(op, ComputeLoc.HOST, local, dag))
        for op in dag.ops_in_topo()
    )


def _share(dag: Dag, tensor_id: str) -> float:
    t = dag.tensor(tensor_id)
    return t.size_bytes / max(len(t.consumers), 1)


def host_bytes(op: OpNode, cfg: OpConfig, dag: Dag) -> float:
    """Local bytes charged to op: its weights and produced outputs; shared weights
    and external inputs are split over their consumers"""
    charged = 0.0
    if cfg.weights == Placement.LOCAL:
        charged += sum(_share(dag, tid) for tid in op.weight_ids)
    if cfg.outputs == Placement.LOCAL:
        charged += dag.bytes_of(op.output_ids)
    if cfg.inputs == Placement.LOCAL:
        charged += sum(
            _share(dag, tid)
            for tid in op.input_ids
            if dag.tensor(tid).kind == TensorKind.EXTERNAL_INPUT
        )
    return charged


def op_cost(op: OpNode, cfg: OpConfig, lut: PerfLUT, obj: Objective, dag: Dag) -> float:
    """alpha * latency / latency_norm + (1 - alpha) * host bytes / bytes_norm"""
    if not obj.is_resolved:
        obj = obj.resolve(dag, lut)
    return obj.combine(lut.latency(op, cfg), host_bytes(op, cfg, dag))
