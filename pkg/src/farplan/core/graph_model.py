"""
Computation DAG data model

Operations, the tensors they read and write (weights, intermediates and the
external request/response buffers), dependency validation and the YAML file
format used to exchange DAGs between commands.
"""

import logging
from enum import Enum
from pathlib import Path
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import networkx as nx
import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    ValidationError,
    field_serializer,
)

from farplan.core.errors import (
    CycleDetected,
    DanglingReference,
    DuplicateProducer,
    FormatError,
    GraphError,
    InvalidTensorKind,
)

logger = logging.getLogger(__name__)


class TensorKind(str, Enum):
    WEIGHT = "Weight"
    INTERMEDIATE = "Intermediate"
    EXTERNAL_INPUT = "ExternalInput"
    EXTERNAL_OUTPUT = "ExternalOutput"


class Placement(str, Enum):
    LOCAL = "local"
    REMOTE = "remote"


class ComputeLoc(str, Enum):
    HOST = "host"
    DEVICE = "device"


PRODUCED_KINDS = (TensorKind.INTERMEDIATE, TensorKind.EXTERNAL_OUTPUT)
INPUT_KINDS = (TensorKind.INTERMEDIATE, TensorKind.EXTERNAL_INPUT)


class TensorSpec(BaseModel):
    """A weight, activation or external I/O buffer"""

    model_config = ConfigDict(frozen=True)

    id: str
    kind: TensorKind
    size_bytes: int = Field(ge=0)
    producer: Optional[str] = None
    consumers: FrozenSet[str] = frozenset()
    pinned: Optional[Placement] = None

    @field_serializer("consumers")
    def _sorted_consumers(self, consumers: FrozenSet[str]) -> List[str]:
        return sorted(consumers)


class OpNode(BaseModel):
    """One operation (layer) of the workload"""

    model_config = ConfigDict(frozen=True)

    id: str
    label: str = "op"
    flops: int = Field(0, ge=0)
    random_accesses: int = Field(0, ge=0)
    weight_ids: Tuple[str, ...] = ()
    input_ids: Tuple[str, ...] = ()
    output_ids: Tuple[str, ...] = ()

    @property
    def has_weights(self) -> bool:
        return bool(self.weight_ids)


class Dag(BaseModel):
    """Validated, immutable computation DAG; build it with build_dag()"""

    model_config = ConfigDict(frozen=True)

    ops: Tuple[OpNode, ...] = ()
    tensors: Tuple[TensorSpec, ...] = ()
    topo: Tuple[str, ...] = ()
    seed: Optional[int] = None

    _op_map: Dict[str, OpNode] = PrivateAttr(default_factory=dict)
    _tensor_map: Dict[str, TensorSpec] = PrivateAttr(default_factory=dict)
    _topo_index: Dict[str, int] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context: Any) -> None:
        self._op_map = {op.id: op for op in self.ops}
        self._tensor_map = {t.id: t for t in self.tensors}
        self._topo_index = {op_id: i for i, op_id in enumerate(self.topo)}

    def op(self, op_id: str) -> OpNode:
        return self._op_map[op_id]

    def tensor(self, tensor_id: str) -> TensorSpec:
        return self._tensor_map[tensor_id]

    def has_op(self, op_id: str) -> bool:
        return op_id in self._op_map

    def topo_index(self, op_id: str) -> int:
        return self._topo_index[op_id]

    def ops_in_topo(self) -> List[OpNode]:
        return [self._op_map[op_id] for op_id in self.topo]

    def tensor_ids(self) -> List[str]:
        return [t.id for t in self.tensors]

    def touching_ops(self, tensor_id: str) -> List[str]:
        """Producer first (if any), then consumers in topological order"""
        t = self._tensor_map[tensor_id]
        ops = [t.producer] if t.producer else []
        ops.extend(sorted(t.consumers, key=self._topo_index.__getitem__))
        return ops

    def bytes_of(self, tensor_ids: Iterable[str]) -> int:
        return sum(self._tensor_map[tid].size_bytes for tid in tensor_ids)

    def __len__(self) -> int:
        return len(self.ops)


def build_dag(
    ops: Sequence[OpNode],
    tensors: Sequence[TensorSpec],
    seed: Optional[int] = None,
) -> Dag:
    """Validate ops/tensors, derive producer/consumer links and the topological order"""
    op_index: Dict[str, int] = {}
    for i, op in enumerate(ops):
        if op.id in op_index:
            raise GraphError(f"duplicate op id '{op.id}'")
        op_index[op.id] = i

    tensor_map: Dict[str, TensorSpec] = {}
    for t in tensors:
        if t.id in tensor_map:
            raise GraphError(f"duplicate tensor id '{t.id}'")
        tensor_map[t.id] = t

    producers: Dict[str, List[str]] = {tid: [] for tid in tensor_map}
    consumers: Dict[str, set] = {tid: set() for tid in tensor_map}

    for op in ops:
        for role, ids, allowed in (
            ("weight", op.weight_ids, (TensorKind.WEIGHT,)),
            ("input", op.input_ids, INPUT_KINDS),
            ("output", op.output_ids, PRODUCED_KINDS),
        ):
            for tid in ids:
                if tid not in tensor_map:
                    raise DanglingReference(tid, f"{role} of op '{op.id}'")
                kind = tensor_map[tid].kind
                if kind not in allowed:
                    raise InvalidTensorKind(tid, f"{role} of op '{op.id}'", kind.value)
                if role == "output":
                    producers[tid].append(op.id)
                else:
                    consumers[tid].add(op.id)

    linked: List[TensorSpec] = []
    for t in tensors:
        derived = producers[t.id]
        if len(derived) > 1:
            raise DuplicateProducer(t.id, derived)
        producer = derived[0] if derived else None
        if t.producer is not None:
            if t.producer not in op_index:
                raise DanglingReference(t.producer, f"producer of tensor '{t.id}'")
            if producer is None:
                raise DanglingReference(
                    t.producer, f"declared producer does not output '{t.id}'"
                )
            if t.producer != producer:
                raise DuplicateProducer(t.id, [t.producer, producer])
        for c in t.consumers:
            if c not in op_index:
                raise DanglingReference(c, f"consumer of tensor '{t.id}'")
        if t.kind in PRODUCED_KINDS and producer is None:
            raise DanglingReference(t.id, "no op produces this tensor")
        if producer is not None and producer in consumers[t.id]:
            raise CycleDetected(producer, [(producer, producer)])
        linked.append(
            t.model_copy(
                update={
                    "producer": producer,
                    "consumers": frozenset(consumers[t.id]),
                }
            )
        )

    graph = nx.DiGraph()
    graph.add_nodes_from(op.id for op in ops)
    for t in linked:
        if t.producer is not None:
            for c in t.consumers:
                graph.add_edge(t.producer, c)

    try:
        topo = list(
            nx.lexicographical_topological_sort(graph, key=op_index.__getitem__)
        )
    except nx.NetworkXUnfeasible:
        cycle = nx.find_cycle(graph)
        offending = min((u for u, _ in cycle), key=op_index.__getitem__)
        raise CycleDetected(offending, list(cycle)) from None

    dag = Dag(ops=tuple(ops), tensors=tuple(linked), topo=tuple(topo), seed=seed)
    logger.debug(f"Built DAG with {len(dag.ops)} ops and {len(dag.tensors)} tensors")
    return dag


def total_bytes(dag: Dag) -> int:
    """Footprint of every tensor, each counted once"""
    return sum(t.size_bytes for t in dag.tensors)


# File format

def dag_to_document(dag: Dag) -> Dict[str, Any]:
    return {
        "meta": {"seed": dag.seed},
        "ops": [op.model_dump(mode="json") for op in dag.ops],
        "tensors": [t.model_dump(mode="json") for t in dag.tensors],
    }


def dump_dag(dag: Dag) -> str:
    return yaml.safe_dump(
        dag_to_document(dag), sort_keys=False, default_flow_style=False
    )


def write_dag(dag: Dag, path: Union[str, Path]) -> None:
    Path(path).write_text(dump_dag(dag), encoding="utf-8")
    logger.info(f"Wrote DAG ({len(dag.ops)} ops) to {path}")


def dag_from_document(doc: Any, source: str = "<document>") -> Dag:
    if not isinstance(doc, dict):
        raise FormatError(source, "expected a mapping with 'ops' and 'tensors'")
    meta = doc.get("meta") or {}
    try:
        ops = [OpNode.model_validate(o) for o in doc.get("ops") or []]
        tensors = [TensorSpec.model_validate(t) for t in doc.get("tensors") or []]
    except ValidationError as e:
        first = e.errors()[0]
        raise FormatError(
            source, f"invalid field: {first['loc']} {first['msg']}"
        ) from e
    return build_dag(ops, tensors, seed=meta.get("seed"))


def load_dag(path: Union[str, Path]) -> Dag:
    """Read a DAG document written by write_dag (or by hand)"""
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise FormatError(str(path), f"cannot read DAG: {e}") from e
    except yaml.YAMLError as e:
        raise FormatError(str(path), f"not valid YAML: {e}") from e
    dag = dag_from_document(doc, str(path))
    logger.info(
        f"Loaded DAG from {path}: {len(dag.ops)} ops, {len(dag.tensors)} tensors"
    )
    return dag
