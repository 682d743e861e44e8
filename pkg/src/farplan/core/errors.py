"""
Error hierarchy for farplan

Every failure surfaced by the planner derives from FarplanError and carries
its structured fields as attributes, so the CLI can print one structured line
per failure.
"""

from typing import Iterable, List, Optional, Tuple


class FarplanError(Exception):
    """Base class for all farplan errors"""


# Graph model

class GraphError(FarplanError):
    """Invalid computation DAG"""


class CycleDetected(GraphError):
    def __init__(self, op_id: str, cycle: Optional[List[Tuple[str, str]]] = None):
        self.op_id = op_id
        self.cycle = cycle or []
        super().__init__(f"dependency cycle through op '{op_id}'")


class DanglingReference(GraphError):
    def __init__(self, ref: str, context: str = ""):
        self.ref = ref
        self.context = context
        detail = f" ({context})" if context else ""
        super().__init__(f"unresolved reference '{ref}'{detail}")


class DuplicateProducer(GraphError):
    def __init__(self, tensor_id: str, producers: Iterable[str]):
        self.tensor_id = tensor_id
        self.producers = sorted(producers)
        super().__init__(
            f"tensor '{tensor_id}' has more than one producer: {self.producers}"
        )


class InvalidTensorKind(GraphError):
    def __init__(self, tensor_id: str, role: str, kind: str):
        self.tensor_id = tensor_id
        self.role = role
        self.kind = kind
        super().__init__(
            f"tensor '{tensor_id}' of kind {kind} cannot be used as {role}"
        )


class InvalidShapeParams(GraphError):
    """Bad arguments to the synthetic workload generator"""


# Platform / profiling

class PlatformError(FarplanError):
    """Invalid platform model or estimator input"""


class UnknownOp(PlatformError):
    def __init__(self, op_id: str):
        self.op_id = op_id
        super().__init__(f"op '{op_id}' is not part of the DAG")


class UnknownPlatform(PlatformError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown platform '{name}'")


class LutError(FarplanError):
    """Performance lookup table problems"""


class ParseError(LutError):
    def __init__(self, row: int, reason: str, path: Optional[str] = None):
        self.row = row
        self.reason = reason
        self.path = path
        where = f"{path}:{row}" if path else f"row {row}"
        super().__init__(f"{where}: {reason}")


class IncompleteLUT(LutError):
    def __init__(self, missing: List[str]):
        self.missing = list(missing)
        shown = ", ".join(self.missing[:8])
        more = f" (+{len(self.missing) - 8} more)" if len(self.missing) > 8 else ""
        super().__init__(f"lookup table incomplete: {shown}{more}")


# Plans

class PlanError(FarplanError):
    """Invalid or unobtainable placement plan"""


class InvalidPlan(PlanError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class TooLarge(PlanError):
    def __init__(self, ops: int, tensors: int, max_ops: int, max_tensors: int):
        self.ops = ops
        self.tensors = tensors
        self.max_ops = max_ops
        self.max_tensors = max_tensors
        super().__init__(
            f"instance too large for exhaustive search: {ops} ops / {tensors} tensors "
            f"(caps {max_ops} / {max_tensors})"
        )


class OracleViolation(PlanError):
    """A heuristic plan scored below the exhaustive optimum"""

    def __init__(self, alpha: float, candidate: float, optimum: float):
        self.alpha = alpha
        self.candidate = candidate
        self.optimum = optimum
        super().__init__(
            f"plan cost {candidate!r} below oracle optimum {optimum!r} "
            f"at alpha={alpha}"
        )


class FormatError(FarplanError):
    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")
