"""
Synthetic Workload Generator

Deterministic, seeded DAG generators standing in for real model graphs:
linear pipelines, fan-out/join blocks and residual (skip-connection) stacks.
Sizes and FLOP counts are drawn from a SizeProfile with numpy's PCG64
generator, so equal arguments always give byte-identical DAGs.
"""

import logging
from enum import Enum
from importlib import resources
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from farplan.core.errors import InvalidShapeParams
from farplan.core.graph_model import (
    Dag,
    OpNode,
    Placement,
    TensorKind,
    TensorSpec,
    build_dag,
)

logger = logging.getLogger(__name__)

MiB = 1024 * 1024


class Shape(str, Enum):
    CHAIN = "chain"
    FANOUT = "fanout"
    RESIDUAL = "residual"


class SizeProfile(BaseModel):
    """Distributions the generator draws from; MiB ranges are log-uniform"""

    model_config = ConfigDict(frozen=True)

    name: str = "default"
    weight_mib: Tuple[float, float] = (1.0, 64.0)
    activation_mib: Tuple[float, float] = (1.0, 32.0)
    external_mib: Tuple[float, float] = (0.1, 4.0)
    flops_per_byte: Tuple[float, float] = (0.5, 8.0)
    random_accesses: Tuple[int, int] = (0, 0)
    pin_external: bool = True

    @model_validator(mode="after")
    def _ordered_ranges(self) -> "SizeProfile":
        for field in ("weight_mib", "activation_mib", "external_mib", "flops_per_byte"):
            lo, hi = getattr(self, field)
            if not 0 < lo <= hi:
                raise ValueError(f"{field} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        lo, hi = self.random_accesses
        if not 0 <= lo <= hi:
            raise ValueError(
                f"random_accesses must satisfy 0 <= lo <= hi, got {(lo, hi)}"
            )
        return self


SIZE_PROFILES: Dict[str, SizeProfile] = {
    "default": SizeProfile(),
    # GB-scale tensors, a few FLOPs per hundred bytes, small request/response buffers
    "memory_bound": SizeProfile(
        name="memory_bound",
        weight_mib=(256.0, 1024.0),
        activation_mib=(256.0, 2048.0),
        external_mib=(1.0, 8.0),
        flops_per_byte=(0.01, 0.1),
    ),
    "pointer_chasing": SizeProfile(
        name="pointer_chasing",
        weight_mib=(64.0, 512.0),
        activation_mib=(1.0, 16.0),
        external_mib=(0.1, 1.0),
        flops_per_byte=(0.01, 0.05),
        random_accesses=(100_000, 2_000_000),
    ),
}


def get_size_profile(name: str) -> SizeProfile:
    try:
        return SIZE_PROFILES[name]
    except KeyError:
        raise InvalidShapeParams(
            f"unknown size profile '{name}' (known: {sorted(SIZE_PROFILES)})"
        ) from None


class _Builder:
    """Accumulates ops/tensors while drawing sizes in a fixed order"""

    def __init__(self, rng: np.random.Generator, profile: SizeProfile):
        self.rng = rng
        self.profile = profile
        self.ops: List[OpNode] = []
        self.tensors: List[TensorSpec] = []

    def _mib(self, bounds: Tuple[float, float]) -> int:
        lo, hi = np.log(bounds[0]), np.log(bounds[1])
        return int(round(float(np.exp(self.rng.uniform(lo, hi))) * MiB))

    def tensor(self, tid: str, kind: TensorKind) -> str:
        if kind == TensorKind.WEIGHT:
            size = self._mib(self.profile.weight_mib)
        elif kind == TensorKind.INTERMEDIATE:
            size = self._mib(self.profile.activation_mib)
        else:
            size = self._mib(self.profile.external_mib)
        external = kind in (TensorKind.EXTERNAL_INPUT, TensorKind.EXTERNAL_OUTPUT)
        pinned = Placement.LOCAL if external and self.profile.pin_external else None
        self.tensors.append(
            TensorSpec(id=tid, kind=kind, size_bytes=size, pinned=pinned)
        )
        return tid

    def op(
        self,
        oid: str,
        label: str,
        inputs: List[str],
        outputs: List[str],
        weighted: bool = True,
    ) -> None:
        weights = [self.tensor(f"w_{oid}", TensorKind.WEIGHT)] if weighted else []
        sizes = {t.id: t.size_bytes for t in self.tensors}
        touched = sum(sizes[t] for t in inputs + weights)
        fpb = float(self.rng.uniform(*self.profile.flops_per_byte))
        lo, hi = self.profile.random_accesses
        accesses = int(self.rng.integers(lo, hi, endpoint=True)) if hi > 0 else 0
        self.ops.append(
            OpNode(
                id=oid,
                label=label,
                flops=int(round(touched * fpb)),
                random_accesses=accesses,
                weight_ids=tuple(weights),
                input_ids=tuple(inputs),
                output_ids=tuple(outputs),
            )
        )


def _chain(b: _Builder, n_ops: int) -> None:
    prev = b.tensor("x", TensorKind.EXTERNAL_INPUT)
    for i in range(n_ops):
        last = i == n_ops - 1
        out = (
            b.tensor("y", TensorKind.EXTERNAL_OUTPUT)
            if last
            else b.tensor(f"t{i}", TensorKind.INTERMEDIATE)
        )
        b.op(f"op{i}", "matmul", [prev], [out])
        prev = out


def _fanout(b: _Builder, n_ops: int) -> None:
    if n_ops < 3:
        raise InvalidShapeParams(
            f"fanout needs at least 3 ops (source, branch, join), got {n_ops}"
        )
    x = b.tensor("x", TensorKind.EXTERNAL_INPUT)
    src = b.tensor("t_src", TensorKind.INTERMEDIATE)
    b.op("op0", "conv", [x], [src])
    branch_outs = []
    for k in range(1, n_ops - 1):
        out = b.tensor(f"t_b{k}", TensorKind.INTERMEDIATE)
        b.op(f"op{k}", "conv", [src], [out])
        branch_outs.append(out)
    y = b.tensor("y", TensorKind.EXTERNAL_OUTPUT)
    b.op(f"op{n_ops - 1}", "concat", branch_outs, [y], weighted=False)


def _residual(b: _Builder, n_ops: int) -> None:
    outs: List[str] = [b.tensor("x", TensorKind.EXTERNAL_INPUT)]
    for i in range(n_ops):
        last = i == n_ops - 1
        out = (
            b.tensor("y", TensorKind.EXTERNAL_OUTPUT)
            if last
            else b.tensor(f"t{i}", TensorKind.INTERMEDIATE)
        )
        # every second op from op2 on closes a skip connection over the previous op
        if i >= 2 and i % 2 == 0:
            b.op(f"op{i}", "add", [outs[-1], outs[-2]], [out], weighted=False)
        else:
            b.op(f"op{i}", "matmul", [outs[-1]], [out])
        outs.append(out)


_GENERATORS = {Shape.CHAIN: _chain, Shape.FANOUT: _fanout, Shape.RESIDUAL: _residual}


def gen_synthetic(
    shape: str,
    n_ops: int,
    seed: int,
    size_profile: Optional[SizeProfile] = None,
) -> Dag:
    """Generate a deterministic synthetic DAG of the given shape"""
    try:
        shape_kind = Shape(shape)
    except ValueError:
        raise InvalidShapeParams(
            f"unknown shape '{shape}' (expected chain, fanout or residual)"
        ) from None
    if n_ops < 1:
        raise InvalidShapeParams(f"n_ops must be >= 1, got {n_ops}")
    if seed < 0:
        raise InvalidShapeParams(f"seed must be non-negative, got {seed}")

    profile = size_profile or SIZE_PROFILES["default"]
    builder = _Builder(np.random.default_rng(seed), profile)
    _GENERATORS[shape_kind](builder, n_ops)
    dag = build_dag(builder.ops, builder.tensors, seed=seed)
    logger.debug(
        f"Generated {shape_kind.value} DAG: {n_ops} ops, "
        f"seed={seed}, profile={profile.name}"
    )
    return dag


class SuiteEntry(BaseModel):
    name: str
    shape: Shape
    n_ops: int = Field(ge=1)
    seed: int = Field(ge=0)
    profile: str = "memory_bound"


def load_suite_manifest() -> List[SuiteEntry]:
    manifest = resources.files("farplan.data").joinpath("suite.yaml")
    text = manifest.read_text(encoding="utf-8")
    try:
        return [SuiteEntry.model_validate(e) for e in yaml.safe_load(text)["workloads"]]
    except (ValidationError, KeyError, TypeError) as e:
        raise InvalidShapeParams(f"bundled suite manifest is malformed: {e}") from e


def bundled_suite() -> Dict[str, Dag]:
    """The packaged memory-bound workload suite, keyed by workload name"""
    suite = {}
    for entry in load_suite_manifest():
        profile = get_size_profile(entry.profile)
        suite[entry.name] = gen_synthetic(
            entry.shape.value, entry.n_ops, entry.seed, profile
        )
    logger.info(f"Loaded bundled suite with {len(suite)} workloads")
    return suite
