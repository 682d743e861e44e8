"""
Offline Partitioner

Linear-time compute/placement partitioning over a performance lookup table:

1. select   - every op independently takes the config minimizing op_cost
2. detect   - tensors whose producer/consumers (or pin) demand different
              placements are conflicts
3. resolve  - conflicts are visited in topological order; each takes the
              placement minimizing the summed cost of the ops touching it,
              which is written back into those ops' configs
4. finalize - assemble the per-op / per-tensor plan; an op axis carrying
              several tensors settles on their majority-bytes placement

The stages run as a LangGraph workflow. detect -> resolve -> detect loops
until no conflict remains or the pass budget is spent (one pass by default).
"""

import logging
from typing import Dict, List, Optional, Set, Tuple, TypedDict

from langgraph.graph import END, StateGraph
from pydantic import BaseModel, ConfigDict

from farplan.core.errors import InvalidPlan
from farplan.core.graph_model import Dag, OpNode, Placement, TensorKind
from farplan.core.perf_lut import PerfLUT, require_complete
from farplan.core.platform_model import OpConfig, collapse_config, configs_for
from farplan.planner.objective import Objective, op_cost
from farplan.planner.plan import PlacementPlan

logger = logging.getLogger(__name__)

AXES = ("weights", "inputs", "outputs")


class Demand(BaseModel):
    """One placement demanded for a tensor, and who demanded it"""

    model_config = ConfigDict(frozen=True)

    source: str
    role: str  # producer | consumer | owner | pin
    placement: Placement


class ConflictReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    conflicts: Dict[str, Tuple[Demand, ...]] = {}

    @property
    def tensor_ids(self) -> List[str]:
        return list(self.conflicts)

    def demanded(self, tensor_id: str) -> set:
        return {d.placement for d in self.conflicts[tensor_id]}

    def __bool__(self) -> bool:
        return bool(self.conflicts)


class PartitionResult(BaseModel):
    """Plan plus what the pipeline did to get there"""

    model_config = ConfigDict(frozen=True)

    plan: PlacementPlan
    raw: Dict[str, OpConfig]
    configs: Dict[str, OpConfig]
    initial_conflicts: ConflictReport
    residual_conflicts: ConflictReport
    passes: int
    lut_reads: int


class CostTable:
    """Memoized op_cost over one (dag, lut, objective)

    `reads` counts the distinct LUT entries read, including the ALL_LOCAL
    entries behind a defaulted latency norm.
    """

    def __init__(self, dag: Dag, lut: PerfLUT, obj: Objective):
        self.dag = dag
        self.lut = lut
        self._reads: Set[Tuple[str, OpConfig]] = set()
        self._cache: Dict[Tuple[str, OpConfig], float] = {}
        self.obj = obj.resolve(dag, lut, latency=self.latency)

    @property
    def reads(self) -> int:
        return len(self._reads)

    def latency(self, op: OpNode, cfg: OpConfig) -> float:
        cfg = cfg.canonical_for(op)
        self._reads.add((op.id, cfg))
        return self.lut.latency(op, cfg)

    def cost(self, op: OpNode, cfg: OpConfig) -> float:
        cfg = cfg.canonical_for(op)
        key = (op.id, cfg)
        if key not in self._cache:
            self._reads.add(key)
            self._cache[key] = op_cost(op, cfg, self.lut, self.obj, self.dag)
        return self._cache[key]


def tensor_axis(dag: Dag, tensor_id: str, op_id: str) -> str:
    """Which of op's axes touches the tensor"""
    t = dag.tensor(tensor_id)
    if t.kind == TensorKind.WEIGHT:
        return "weights"
    return "outputs" if t.producer == op_id else "inputs"


def pinned_axes(op: OpNode, dag: Dag) -> Dict[str, Placement]:
    """Axes whose tensors are all pinned to one placement"""
    fixed: Dict[str, Placement] = {}
    for axis, ids in zip(AXES, (op.weight_ids, op.input_ids, op.output_ids)):
        pins = {dag.tensor(tid).pinned for tid in ids}
        if ids and len(pins) == 1 and None not in pins:
            fixed[axis] = pins.pop()
    return fixed


def per_op_select(
    dag: Dag,
    lut: PerfLUT,
    obj: Objective,
    table: Optional[CostTable] = None,
) -> Dict[str, OpConfig]:
    """Argmin-cost config per op; ties prefer Device/Remote, then canonical order"""
    table = table or CostTable(dag, lut, obj)
    raw: Dict[str, OpConfig] = {}
    for op in dag.ops_in_topo():
        fixed = pinned_axes(op, dag)
        candidates = [
            cfg for cfg in configs_for(op)
            if all(getattr(cfg, axis) == p for axis, p in fixed.items())
        ]
        raw[op.id] = min(
            candidates, key=lambda cfg: (table.cost(op, cfg), cfg.offload_rank())
        )
        logger.debug(f"{op.id}: selected {raw[op.id].code}")
    return raw


def _demands(raw: Dict[str, OpConfig], dag: Dag, tensor_id: str) -> List[Demand]:
    t = dag.tensor(tensor_id)
    demands: List[Demand] = []
    if t.pinned is not None:
        demands.append(Demand(source="pin", role="pin", placement=t.pinned))
    try:
        if t.kind == TensorKind.WEIGHT:
            for owner in dag.touching_ops(tensor_id):
                demands.append(
                    Demand(source=owner, role="owner", placement=raw[owner].weights)
                )
        else:
            if t.producer is not None:
                demands.append(
                    Demand(
                        source=t.producer,
                        role="producer",
                        placement=raw[t.producer].outputs,
                    )
                )
            for consumer in dag.touching_ops(tensor_id):
                if consumer != t.producer:
                    demands.append(
                        Demand(
                            source=consumer,
                            role="consumer",
                            placement=raw[consumer].inputs,
                        )
                    )
    except KeyError as e:
        raise InvalidPlan(f"no selected config for op {e.args[0]}") from None
    return demands


def detect_conflicts(raw: Dict[str, OpConfig], dag: Dag) -> ConflictReport:
    """Tensors whose demanded placements (including a pin) disagree"""
    conflicts: Dict[str, Tuple[Demand, ...]] = {}
    for t in dag.tensors:
        demands = _demands(raw, dag, t.id)
        if len({d.placement for d in demands}) > 1:
            conflicts[t.id] = tuple(demands)
    return ConflictReport(conflicts=conflicts)


def _visit_order(report: ConflictReport, dag: Dag) -> List[str]:
    def key(tensor_id: str) -> Tuple[int, str]:
        touching = dag.touching_ops(tensor_id)
        return (dag.topo_index(touching[0]) if touching else len(dag.topo), tensor_id)

    return sorted(report.tensor_ids, key=key)


def _resolve_pass(
    configs: Dict[str, OpConfig],
    report: ConflictReport,
    dag: Dag,
    table: CostTable,
    decided: Dict[str, Placement],
) -> None:
    """One topological sweep over the conflicts, writing choices back into configs"""
    for tid in _visit_order(report, dag):
        t = dag.tensor(tid)
        neighbours = [
            (dag.op(op_id), tensor_axis(dag, tid, op_id))
            for op_id in dag.touching_ops(tid)
        ]
        if t.pinned is not None:
            choice = t.pinned
        else:
            local, remote = (
                sum(
                    table.cost(op, configs[op.id].with_axis(axis, p))
                    for op, axis in neighbours
                )
                for p in (Placement.LOCAL, Placement.REMOTE)
            )
            choice = Placement.LOCAL if local < remote else Placement.REMOTE
            logger.debug(
                f"{tid}: local={local:.6g} remote={remote:.6g} -> {choice.value}"
            )
        decided[tid] = choice
        for op, axis in neighbours:
            configs[op.id] = configs[op.id].with_axis(axis, choice)


def _assemble_plan(
    raw: Dict[str, OpConfig],
    configs: Dict[str, OpConfig],
    decided: Dict[str, Placement],
    dag: Dag,
) -> PlacementPlan:
    placement: Dict[str, Placement] = {}
    for t in dag.tensors:
        if t.id in decided:
            placement[t.id] = decided[t.id]
        elif t.pinned is not None:
            placement[t.id] = t.pinned
        else:
            demanded = {d.placement for d in _demands(raw, dag, t.id)}
            # unused tensors carry no demand and go to far memory
            placement[t.id] = demanded.pop() if len(demanded) == 1 else Placement.REMOTE
    compute = {op_id: configs[op_id].compute for op_id in dag.topo}
    return PlacementPlan(compute=compute, placement=placement)


def _axis_ids(op: OpNode) -> Tuple[Tuple[str, ...], ...]:
    return (op.weight_ids, op.input_ids, op.output_ids)


def _settle_shared_axes(
    configs: Dict[str, OpConfig],
    plan: PlacementPlan,
    dag: Dag,
) -> Dict[str, OpConfig]:
    """Axes carrying several tensors take their majority-bytes placement"""
    settled: Dict[str, OpConfig] = {}
    for op in dag.ops_in_topo():
        current = configs[op.id]
        view = collapse_config(op, current.compute, plan.placement, dag)
        for axis, ids in zip(AXES, _axis_ids(op)):
            if len(ids) > 1:
                current = current.with_axis(axis, getattr(view, axis))
        settled[op.id] = current
    return settled


def view_conflicts(
    configs: Dict[str, OpConfig],
    plan: PlacementPlan,
    dag: Dag,
) -> List[str]:
    """`op.axis` entries where the per-op view disagrees with the plan

    An axis carrying one tensor must hold that tensor's placement; an axis
    carrying several must hold their majority-bytes placement (ties remote),
    which is the key the simulator prices. Compute must match the plan.
    """
    problems: List[str] = []
    for op in dag.ops_in_topo():
        current = configs[op.id]
        if current.compute != plan.compute[op.id]:
            problems.append(f"{op.id}.compute")
        view = collapse_config(op, plan.compute[op.id], plan.placement, dag)
        for axis, ids in zip(AXES, _axis_ids(op)):
            if not ids:
                continue
            expected = plan.placement[ids[0]] if len(ids) == 1 else getattr(view, axis)
            if getattr(current, axis) != expected:
                problems.append(f"{op.id}.{axis}")
    return problems


def resolve_conflicts(
    raw: Dict[str, OpConfig],
    report: ConflictReport,
    dag: Dag,
    lut: PerfLUT,
    obj: Objective,
    table: Optional[CostTable] = None,
) -> PlacementPlan:
    """Single-pass neighbourhood-cost conflict resolution"""
    table = table or CostTable(dag, lut, obj)
    configs = dict(raw)
    decided: Dict[str, Placement] = {}
    _resolve_pass(configs, report, dag, table, decided)
    return _assemble_plan(raw, configs, decided, dag)


class PartitionState(TypedDict, total=False):
    """State carried through the partition workflow"""
    dag: Dag
    lut: PerfLUT
    objective: Objective
    max_passes: int
    table: CostTable
    raw: Dict[str, OpConfig]
    configs: Dict[str, OpConfig]
    initial_report: ConflictReport
    report: ConflictReport
    decided: Dict[str, Placement]
    passes: int
    plan: PlacementPlan


class PartitionPipeline:
    """select -> detect -> (resolve -> detect)* -> finalize"""

    def __init__(self):
        self.workflow = None

    def build_graph(self):
        workflow = StateGraph(PartitionState)

        def select(state: PartitionState) -> PartitionState:
            dag, lut = state["dag"], state["lut"]
            require_complete(lut, dag)
            table = CostTable(dag, lut, state["objective"])
            raw = per_op_select(dag, lut, table.obj, table)
            state["table"] = table
            state["raw"] = raw
            state["configs"] = dict(raw)
            state["decided"] = {}
            state["passes"] = 0
            return state

        def detect(state: PartitionState) -> PartitionState:
            report = detect_conflicts(state["configs"], state["dag"])
            if "initial_report" not in state:
                state["initial_report"] = report
                logger.debug(
                    f"{len(report.conflicts)} conflicted tensors after selection"
                )
            state["report"] = report
            return state

        def route_after_detect(state: PartitionState) -> str:
            if state["report"] and state["passes"] < state["max_passes"]:
                return "resolve"
            return "finalize"

        def resolve(state: PartitionState) -> PartitionState:
            _resolve_pass(
                state["configs"],
                state["report"],
                state["dag"],
                state["table"],
                state["decided"],
            )
            state["passes"] += 1
            return state

        def finalize(state: PartitionState) -> PartitionState:
            if state["report"] and state["passes"] > 0 and state["max_passes"] > 1:
                logger.warning(
                    f"{len(state['report'].conflicts)} conflicts remain "
                    f"after {state['passes']} passes"
                )
            plan = _assemble_plan(
                state["raw"], state["configs"], state["decided"], state["dag"]
            )
            state["configs"] = _settle_shared_axes(state["configs"], plan, state["dag"])
            state["plan"] = plan
            return state

        workflow.add_node("select", select)
        workflow.add_node("detect", detect)
        workflow.add_node("resolve", resolve)
        workflow.add_node("finalize", finalize)

        workflow.add_edge("select", "detect")
        workflow.add_conditional_edges(
            "detect",
            route_after_detect,
            {"resolve": "resolve", "finalize": "finalize"},
        )
        workflow.add_edge("resolve", "detect")
        workflow.add_edge("finalize", END)
        workflow.set_entry_point("select")

        self.workflow = workflow.compile()
        return self.workflow

    def run(
        self, dag: Dag, lut: PerfLUT, obj: Objective, passes: int = 1
    ) -> PartitionResult:
        if not self.workflow:
            self.build_graph()
        max_passes = max(1, min(passes, max(len(dag.tensors), 1)))
        initial_state = PartitionState(
            dag=dag, lut=lut, objective=obj, max_passes=max_passes
        )
        result = self.workflow.invoke(
            initial_state, config={"recursion_limit": 2 * max_passes + 8}
        )
        logger.debug(
            f"Partitioned {len(dag.ops)} ops at alpha={obj.alpha}: "
            f"{len(result['initial_report'].conflicts)} conflicts, "
            f"{result['passes']} passes, "
            f"{result['table'].reads} LUT reads"
        )
        return PartitionResult(
            plan=result["plan"],
            raw=result["raw"],
            configs=result["configs"],
            initial_conflicts=result["initial_report"],
            residual_conflicts=result["report"],
            passes=result["passes"],
            lut_reads=result["table"].reads,
        )


_pipeline: Optional[PartitionPipeline] = None


def _get_pipeline() -> PartitionPipeline:
    global _pipeline
    if _pipeline is None:
        _pipeline = PartitionPipeline()
        _pipeline.build_graph()
    return _pipeline


def run_partition(
    dag: Dag, lut: PerfLUT, obj: Objective, passes: int = 1
) -> PartitionResult:
    return _get_pipeline().run(dag, lut, obj, passes)


def partition(dag: Dag, lut: PerfLUT, obj: Objective, passes: int = 1) -> PlacementPlan:
    """Full pipeline; passes > 1 enables bounded re-resolution of leftover conflicts"""
    return run_partition(dag, lut, obj, passes).plan
