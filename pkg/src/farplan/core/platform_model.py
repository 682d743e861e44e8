"""
Platform Model

Parametric host + CXL-device platform: the local/remote bandwidth and latency
matrix seen from each compute side, host and device compute rates, and the
per-op configuration space (compute side plus weight/input/output placement)
that the lookup table is keyed by. The roofline estimator here is the
synthetic stand-in for on-box profiling.
"""

import itertools
import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from farplan.core.errors import FormatError, UnknownOp, UnknownPlatform
from farplan.core.graph_model import ComputeLoc, Dag, OpNode, Placement

logger = logging.getLogger(__name__)

GB = 1e9
NS = 1e-9

# Peak STREAM bandwidth (GB/s), local / remote socket
STREAM_BANDWIDTH: Dict[str, Dict[str, Tuple[float, float]]] = {
    "A": {
        "COPY": (103.0, 32.0),
        "SCALE": (109.0, 32.0),
        "ADD": (96.0, 32.0),
        "TRIAD": (104.0, 32.0),
    },
    "B": {
        "COPY": (161.0, 28.0),
        "SCALE": (165.0, 29.0),
        "ADD": (167.0, 27.0),
        "TRIAD": (168.0, 27.0),
    },
}
# Single random read latency (ns), local / remote socket
RANDOM_READ_NS: Dict[str, Tuple[float, float]] = {
    "A": (70.4, 127.8),
    "B": (73.0, 403.5),
}

HOST_CLOCK_HZ = 3.0e9
DEVICE_CLOCK_HZ = 2.0e9
FLOP_PER_CYCLE = 8
DEFAULT_MIGRATION_OVERHEAD_S = 5e-6


class SidePair(BaseModel):
    """Values seen from one compute side, for local and remote memory"""

    model_config = ConfigDict(frozen=True)

    local: float
    remote: float

    def get(self, placement: Placement) -> float:
        return self.local if placement == Placement.LOCAL else self.remote


class MemoryMatrix(BaseModel):
    model_config = ConfigDict(frozen=True)

    host: SidePair
    device: SidePair

    def get(self, compute: ComputeLoc, placement: Placement) -> float:
        side = self.host if compute == ComputeLoc.HOST else self.device
        return side.get(placement)

    @classmethod
    def mirrored(cls, local: float, remote: float) -> "MemoryMatrix":
        """Dual-socket emulation: the device sees 'remote' memory as its local socket"""
        return cls(
            host=SidePair(local=local, remote=remote),
            device=SidePair(local=remote, remote=local),
        )


class OffloadOverhead(BaseModel):
    model_config = ConfigDict(frozen=True)

    alloc_s: float = Field(0.0, ge=0.0)
    copy_bw_GBps: float = Field(gt=0.0)
    reconstruct_s: float = Field(0.0, ge=0.0)


class PlatformSpec(BaseModel):
    """Asymmetric host + far-memory-device platform"""

    model_config = ConfigDict(frozen=True)

    name: str = "custom"
    bw: MemoryMatrix
    access_latency: MemoryMatrix
    host_rate: float = Field(gt=0.0)
    device_rate: float = Field(gt=0.0)
    migration_overhead_s: float = Field(DEFAULT_MIGRATION_OVERHEAD_S, ge=0.0)
    offload_overhead: OffloadOverhead

    @model_validator(mode="after")
    def _check_matrices(self) -> "PlatformSpec":
        for side in ("host", "device"):
            pair: SidePair = getattr(self.bw, side)
            if pair.local <= 0 or pair.remote <= 0:
                raise ValueError(f"{side} bandwidths must be > 0")
            lat: SidePair = getattr(self.access_latency, side)
            if lat.local < 0 or lat.remote < 0:
                raise ValueError(f"{side} access latencies must be >= 0")
        return self

    def bandwidth_gbps(self, compute: ComputeLoc, placement: Placement) -> float:
        return self.bw.get(compute, placement)

    def latency_ns(self, compute: ComputeLoc, placement: Placement) -> float:
        return self.access_latency.get(compute, placement)

    def rate(self, compute: ComputeLoc) -> float:
        return self.host_rate if compute == ComputeLoc.HOST else self.device_rate


def _platform_key(name: str) -> str:
    key = name.strip().upper()
    if key.startswith("PLATFORM"):
        key = key[len("PLATFORM"):].lstrip("_ -")
    if key not in STREAM_BANDWIDTH:
        raise UnknownPlatform(name)
    return key


def default_platform(
    name: str,
    stream_kernel: str = "COPY",
    migration_overhead_s: Optional[float] = None,
) -> PlatformSpec:
    """Platform A or B from the measured bandwidth/latency characterization"""
    key = _platform_key(name)
    rows = STREAM_BANDWIDTH[key]
    kernel = stream_kernel.upper()
    if kernel not in rows:
        raise UnknownPlatform(f"{name}/{stream_kernel}")
    local_bw, remote_bw = rows[kernel]
    local_ns, remote_ns = RANDOM_READ_NS[key]
    return PlatformSpec(
        name=f"Platform{key}",
        bw=MemoryMatrix.mirrored(local_bw, remote_bw),
        access_latency=MemoryMatrix.mirrored(local_ns, remote_ns),
        host_rate=HOST_CLOCK_HZ * FLOP_PER_CYCLE,
        device_rate=DEVICE_CLOCK_HZ * FLOP_PER_CYCLE,
        migration_overhead_s=(
            DEFAULT_MIGRATION_OVERHEAD_S
            if migration_overhead_s is None
            else migration_overhead_s
        ),
        offload_overhead=OffloadOverhead(copy_bw_GBps=remote_bw),
    )


def load_platform(path: Union[str, Path]) -> PlatformSpec:
    """Read a YAML platform document; 'base: A|B' starts from a default platform"""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as e:
        raise FormatError(str(path), f"cannot read platform file: {e}") from e
    if not isinstance(doc, dict):
        raise FormatError(str(path), "platform file must be a mapping")
    base = doc.pop("base", None)
    try:
        if base is not None:
            merged = _deep_merge(default_platform(str(base)).model_dump(), doc)
            return PlatformSpec.model_validate(merged)
        return PlatformSpec.model_validate(doc)
    except (ValidationError, ValueError) as e:
        raise FormatError(str(path), f"invalid platform: {e}") from e


def resolve_platform(spec: str) -> PlatformSpec:
    """'A', 'B', 'PlatformB' or a path to a YAML platform file"""
    try:
        return default_platform(spec)
    except UnknownPlatform:
        if Path(spec).is_file():
            return load_platform(spec)
        raise


def _deep_merge(base: Dict[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


# Configuration space

class OpConfig(BaseModel):
    """Compute side and weight/input/output placement for one op"""

    model_config = ConfigDict(frozen=True)

    compute: ComputeLoc
    weights: Placement
    inputs: Placement
    outputs: Placement

    @classmethod
    def of(
        cls,
        compute: ComputeLoc,
        weights: Placement,
        inputs: Placement,
        outputs: Placement,
    ) -> "OpConfig":
        return _config(compute, weights, inputs, outputs)

    @property
    def key(self) -> Tuple[str, str, str, str]:
        return (
            self.compute.value,
            self.weights.value,
            self.inputs.value,
            self.outputs.value,
        )

    @property
    def code(self) -> str:
        return ",".join(self.key)

    def with_axis(self, axis: str, placement: Placement) -> "OpConfig":
        values = {
            "weights": self.weights,
            "inputs": self.inputs,
            "outputs": self.outputs,
        }
        values[axis] = placement
        return _config(
            self.compute, values["weights"], values["inputs"], values["outputs"]
        )

    def with_compute(self, compute: ComputeLoc) -> "OpConfig":
        return _config(compute, self.weights, self.inputs, self.outputs)

    def flipped(self) -> "OpConfig":
        return _config(
            _flip_compute(self.compute),
            _flip(self.weights),
            _flip(self.inputs),
            _flip(self.outputs),
        )

    def canonical_for(self, op: OpNode) -> "OpConfig":
        """Ops without weights only have the weights=local key"""
        if op.has_weights or self.weights == Placement.LOCAL:
            return self
        return self.with_axis("weights", Placement.LOCAL)

    def offload_rank(self) -> Tuple[int, Tuple[int, int, int, int]]:
        """Sort key preferring Device compute and Remote placements"""
        bits = (
            int(self.compute == ComputeLoc.HOST),
            int(self.weights == Placement.LOCAL),
            int(self.inputs == Placement.LOCAL),
            int(self.outputs == Placement.LOCAL),
        )
        return (sum(bits), bits)


@lru_cache(maxsize=None)
def _config(
    compute: ComputeLoc, weights: Placement, inputs: Placement, outputs: Placement
) -> OpConfig:
    return OpConfig(compute=compute, weights=weights, inputs=inputs, outputs=outputs)


def _flip(p: Placement) -> Placement:
    return Placement.REMOTE if p == Placement.LOCAL else Placement.LOCAL


def _flip_compute(c: ComputeLoc) -> ComputeLoc:
    return ComputeLoc.DEVICE if c == ComputeLoc.HOST else ComputeLoc.HOST


COMPUTE_ORDER = (ComputeLoc.HOST, ComputeLoc.DEVICE)
PLACEMENT_ORDER = (Placement.LOCAL, Placement.REMOTE)

ALL_CONFIGS: Tuple[OpConfig, ...] = tuple(
    _config(c, w, i, o)
    for c, w, i, o in itertools.product(
        COMPUTE_ORDER, PLACEMENT_ORDER, PLACEMENT_ORDER, PLACEMENT_ORDER
    )
)


def configs_for(op: OpNode) -> List[OpConfig]:
    """16 configs for ops with weights, 8 (weights=local) otherwise; canonical order"""
    if op.has_weights:
        return list(ALL_CONFIGS)
    return [cfg for cfg in ALL_CONFIGS if cfg.weights == Placement.LOCAL]


def collapse_axis(
    dag: Dag, tensor_ids: Tuple[str, ...], placement: Mapping[str, Placement]
) -> Placement:
    """Majority of bytes decides the axis; exact ties (and empty axes) go remote"""
    local = remote = 0
    for tid in tensor_ids:
        size = dag.tensor(tid).size_bytes
        if placement[tid] == Placement.LOCAL:
            local += size
        else:
            remote += size
    return Placement.LOCAL if local > remote else Placement.REMOTE


def collapse_config(
    op: OpNode,
    compute: ComputeLoc,
    placement: Mapping[str, Placement],
    dag: Dag,
) -> OpConfig:
    """Per-op lookup key implied by per-tensor placements"""
    weights = (
        collapse_axis(dag, op.weight_ids, placement)
        if op.has_weights
        else Placement.LOCAL
    )
    return _config(
        compute,
        weights,
        collapse_axis(dag, op.input_ids, placement),
        collapse_axis(dag, op.output_ids, placement),
    )


# Roofline estimator

def estimate_latency(
    op: OpNode, cfg: OpConfig, dag: Dag, platform: PlatformSpec
) -> float:
    """max(compute time, memory time) + random-access latency, in seconds"""
    if not dag.has_op(op.id):
        raise UnknownOp(op.id)
    t_compute = op.flops / platform.rate(cfg.compute)
    t_memory = 0.0
    for ids, placement in (
        (op.weight_ids, cfg.weights),
        (op.input_ids, cfg.inputs),
        (op.output_ids, cfg.outputs),
    ):
        nbytes = dag.bytes_of(ids)
        if nbytes:
            t_memory += nbytes / (platform.bandwidth_gbps(cfg.compute, placement) * GB)
    t_latency = op.random_accesses * platform.latency_ns(cfg.compute, cfg.inputs) * NS
    return max(t_compute, t_memory) + t_latency
