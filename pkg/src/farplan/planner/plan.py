"""
Placement plans

A plan says where every op computes and where every tensor lives. Plans are
written as delimited rows (`kind,id,decision`) in topological op order
followed by tensors sorted by id.
"""

import csv
import io
import logging
from pathlib import Path
from typing import Dict, List, Union

from pydantic import BaseModel, ConfigDict

from farplan.core.errors import FormatError, InvalidPlan
from farplan.core.graph_model import ComputeLoc, Dag, Placement

logger = logging.getLogger(__name__)

PLAN_HEADER = ["kind", "id", "decision"]


class PlacementPlan(BaseModel):
    """Per-op compute side and per-tensor memory placement"""

    model_config = ConfigDict(frozen=True)

    compute: Dict[str, ComputeLoc]
    placement: Dict[str, Placement]

    def remote_tensors(self) -> List[str]:
        return sorted(tid for tid, p in self.placement.items() if p == Placement.REMOTE)


def plan_problems(plan: PlacementPlan, dag: Dag) -> List[str]:
    problems: List[str] = []
    missing_ops = [op_id for op_id in dag.topo if op_id not in plan.compute]
    missing_tensors = [tid for tid in dag.tensor_ids() if tid not in plan.placement]
    if missing_ops:
        problems.append(f"no compute decision for ops {missing_ops}")
    if missing_tensors:
        problems.append(f"no placement for tensors {missing_tensors}")
    unknown = sorted(set(plan.compute) - set(dag.topo))
    unknown += sorted(set(plan.placement) - set(dag.tensor_ids()))
    if unknown:
        problems.append(f"decisions for unknown ids {unknown}")
    for t in dag.tensors:
        if t.pinned is not None and plan.placement.get(t.id, t.pinned) != t.pinned:
            problems.append(f"tensor '{t.id}' is pinned {t.pinned.value}")
    return problems


def validate_plan(plan: PlacementPlan, dag: Dag) -> None:
    problems = plan_problems(plan, dag)
    if problems:
        raise InvalidPlan("; ".join(problems))


def dump_plan(plan: PlacementPlan, dag: Dag) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PLAN_HEADER)
    for op_id in dag.topo:
        writer.writerow(["op", op_id, plan.compute[op_id].value])
    for tid in sorted(plan.placement):
        writer.writerow(["tensor", tid, plan.placement[tid].value])
    return buf.getvalue()


def write_plan(plan: PlacementPlan, dag: Dag, path: Union[str, Path]) -> None:
    Path(path).write_text(dump_plan(plan, dag), encoding="utf-8")
    logger.info(f"Wrote plan to {path}")


def parse_plan(text: str, source: str = "<plan>") -> PlacementPlan:
    compute: Dict[str, ComputeLoc] = {}
    placement: Dict[str, Placement] = {}
    rows = [r for r in csv.reader(io.StringIO(text), skipinitialspace=True) if r]
    if not rows or [c.strip().lower() for c in rows[0]] != PLAN_HEADER:
        raise FormatError(source, f"expected header {','.join(PLAN_HEADER)}")
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise FormatError(source, f"line {lineno}: expected 3 columns")
        kind, ident, decision = (c.strip() for c in row)
        try:
            if kind == "op":
                compute[ident] = ComputeLoc(decision.lower())
            elif kind == "tensor":
                placement[ident] = Placement(decision.lower())
            else:
                raise FormatError(source, f"line {lineno}: unknown row kind '{kind}'")
        except ValueError:
            raise FormatError(
                source, f"line {lineno}: bad decision '{decision}' for {kind}"
            ) from None
    return PlacementPlan(compute=compute, placement=placement)


def load_plan(path: Union[str, Path]) -> PlacementPlan:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(str(path), f"cannot read plan: {e}") from e
    return parse_plan(text, str(path))
