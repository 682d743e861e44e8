"""
Performance Lookup Table

Latency for every (operation, configuration) pair, either produced by the
roofline estimator or ingested from measured profiles in the delimited LUT
format:

    op_id,compute,weights,inputs,outputs,latency_seconds
"""

import csv
import io
import logging
import math
from pathlib import Path
from typing import Dict, Iterator, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict

from farplan.core.errors import FormatError, IncompleteLUT, ParseError
from farplan.core.graph_model import ComputeLoc, Dag, OpNode, Placement
from farplan.core.platform_model import (
    OpConfig,
    PlatformSpec,
    configs_for,
    estimate_latency,
)

logger = logging.getLogger(__name__)

LUT_HEADER = ["op_id", "compute", "weights", "inputs", "outputs", "latency_seconds"]


class PerfLUT(BaseModel):
    """(op, config) -> seconds, with where the numbers came from"""

    model_config = ConfigDict(frozen=True)

    entries: Dict[str, Dict[str, float]]
    provenance: Literal["synthetic", "measured"]
    platform: Optional[PlatformSpec] = None
    source_path: Optional[str] = None

    def has(self, op_id: str, cfg: OpConfig) -> bool:
        return cfg.code in self.entries.get(op_id, {})

    def latency(self, op: OpNode, cfg: OpConfig) -> float:
        """Seconds for op under cfg; weightless ops are looked up under weights=local"""
        try:
            return self.entries[op.id][cfg.canonical_for(op).code]
        except KeyError:
            raise IncompleteLUT([missing_key(op.id, cfg.canonical_for(op))]) from None

    def rows(self, dag: Optional[Dag] = None) -> Iterator[Tuple[str, OpConfig, float]]:
        """Stable row order: topological when a DAG is given, then config order"""
        op_ids = list(dag.topo) if dag is not None else sorted(self.entries)
        for op_id in op_ids:
            by_code = self.entries.get(op_id, {})
            for code in sorted(by_code, key=_code_rank):
                yield op_id, _parse_code(code), by_code[code]

    def __len__(self) -> int:
        return sum(len(v) for v in self.entries.values())


def missing_key(op_id: str, cfg: OpConfig) -> str:
    return f"({op_id}, {cfg.code})"


def _code_rank(code: str) -> Tuple[int, ...]:
    c, w, i, o = code.split(",")
    return (c != ComputeLoc.HOST.value, w != "local", i != "local", o != "local")


def _parse_code(code: str) -> OpConfig:
    c, w, i, o = code.split(",")
    return OpConfig.of(ComputeLoc(c), Placement(w), Placement(i), Placement(o))


def build_lut_synthetic(dag: Dag, platform: PlatformSpec) -> PerfLUT:
    """Profile every op under every valid config with the roofline estimator"""
    entries: Dict[str, Dict[str, float]] = {}
    for op in dag.ops_in_topo():
        entries[op.id] = {
            cfg.code: estimate_latency(op, cfg, dag, platform)
            for cfg in configs_for(op)
        }
    lut = PerfLUT(entries=entries, provenance="synthetic", platform=platform)
    logger.info(
        f"Built synthetic LUT on {platform.name}: "
        f"{len(lut)} entries for {len(dag.ops)} ops"
    )
    return lut


def validate_lut(lut: PerfLUT, dag: Dag) -> List[str]:
    """Missing (op, config) keys plus non-positive latencies of working ops

    An empty list means the LUT is complete.
    """
    problems: List[str] = []
    for op in dag.ops_in_topo():
        touched = op.weight_ids + op.input_ids + op.output_ids
        does_work = op.flops > 0 or dag.bytes_of(touched) > 0
        for cfg in configs_for(op):
            if not lut.has(op.id, cfg):
                problems.append(missing_key(op.id, cfg))
            elif does_work and lut.entries[op.id][cfg.code] <= 0:
                value = lut.entries[op.id][cfg.code]
                problems.append(
                    f"{missing_key(op.id, cfg)} non-positive latency {value!r}"
                )
    extra = sorted(set(lut.entries) - set(dag.topo))
    if extra:
        logger.warning(f"LUT has rows for ops not in the DAG: {extra}")
    return problems


def require_complete(lut: PerfLUT, dag: Dag) -> None:
    problems = validate_lut(lut, dag)
    if problems:
        raise IncompleteLUT(problems)


# File format

def dump_lut(lut: PerfLUT, dag: Optional[Dag] = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LUT_HEADER)
    for op_id, cfg, seconds in lut.rows(dag):
        writer.writerow([op_id, *cfg.key, repr(seconds)])
    return buf.getvalue()


def write_lut(lut: PerfLUT, path: Union[str, Path], dag: Optional[Dag] = None) -> None:
    Path(path).write_text(dump_lut(lut, dag), encoding="utf-8")
    logger.info(f"Wrote LUT ({len(lut)} rows) to {path}")


def parse_lut(text: str, source: str = "<lut>") -> PerfLUT:
    reader = csv.reader(io.StringIO(text), skipinitialspace=True)
    entries: Dict[str, Dict[str, float]] = {}
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = [cell.strip() for cell in row]
        if not header_seen:
            if [c.lower() for c in cells] != LUT_HEADER:
                raise ParseError(
                    lineno, f"expected header {','.join(LUT_HEADER)}", source
                )
            header_seen = True
            continue
        if len(cells) != len(LUT_HEADER):
            raise ParseError(
                lineno,
                f"expected {len(LUT_HEADER)} columns, got {len(cells)}",
                source,
            )
        op_id, compute, weights, inputs, outputs, latency = cells
        try:
            cfg = OpConfig.of(
                ComputeLoc(compute.lower()),
                Placement(weights.lower()),
                Placement(inputs.lower()),
                Placement(outputs.lower()),
            )
        except ValueError:
            raise ParseError(
                lineno,
                "compute must be host|device and placements local|remote",
                source,
            ) from None
        try:
            seconds = float(latency)
        except ValueError:
            raise ParseError(
                lineno, f"latency '{latency}' is not a number", source
            ) from None
        if not math.isfinite(seconds) or seconds < 0:
            raise ParseError(
                lineno,
                f"latency {latency} must be a finite, non-negative number of seconds",
                source,
            )
        by_code = entries.setdefault(op_id, {})
        if cfg.code in by_code:
            raise ParseError(
                lineno, f"duplicate entry for {missing_key(op_id, cfg)}", source
            )
        by_code[cfg.code] = seconds
    if not header_seen:
        raise ParseError(1, "missing header row", source)
    return PerfLUT(entries=entries, provenance="measured", source_path=source)


def load_lut(path: Union[str, Path]) -> PerfLUT:
    """Read a measured (or previously written) LUT file"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(str(path), f"cannot read LUT: {e}") from e
    lut = parse_lut(text, str(path))
    logger.info(
        f"Loaded LUT from {path}: {len(lut)} entries for {len(lut.entries)} ops"
    )
    return lut
