"""
Tests for the offline partitioner: selection, conflict detection and resolution
"""

import numpy as np
import pytest

from farplan.core.errors import IncompleteLUT
from farplan.core.graph_model import OpNode, TensorKind, TensorSpec, build_dag
from farplan.core.perf_lut import PerfLUT, build_lut_synthetic
from farplan.core.workloads import SizeProfile, gen_synthetic
from farplan.planner.objective import Objective, host_bytes
from farplan.planner.partitioner import (
    CostTable,
    detect_conflicts,
    partition,
    per_op_select,
    pinned_axes,
    resolve_conflicts,
    run_partition,
    view_conflicts,
)
from farplan.planner.plan import PlacementPlan, validate_plan
from farplan.sim.executor import simulate
from tests.helpers import (
    D,
    H,
    L,
    R,
    cfg,
    chain_dag,
    effective_configs,
    lut_from,
    multiplicative_lut,
    table_lut,
)

pytestmark = pytest.mark.unit

UNIT_NORMS = {"latency_norm": 1.0, "bytes_norm": 1.0}
UNPINNED = SizeProfile(pin_external=False)


def _contested_chain():
    """op0 wants t0 local, op1 wants it remote

    Local wins on the two-op sum (4 vs 6).
    """
    dag = chain_dag(2)
    lut = table_lut(
        dag,
        {
            "op0": {cfg(H, L, L, L): 1.0, cfg(H, L, L, R): 5.0},
            "op1": {cfg(H, L, R, L): 1.0, cfg(H, L, L, L): 3.0},
        },
    )
    return dag, lut, Objective(alpha=1.0, **UNIT_NORMS)


class TestPerOpSelect:
    """Independent argmin per op"""

    def test_argmin_of_table(self):
        """alpha = 1 picks the fastest config"""
        dag = chain_dag(1)
        lut = table_lut(dag, {"op0": {cfg(H, L, L, L): 1.0}})
        assert per_op_select(dag, lut, Objective(alpha=1.0)) == {"op0": cfg(H, L, L, L)}

    def test_alpha_zero_offloads_everything(self, platform_b):
        """Unpinned ops go to the device with everything remote"""
        dag = gen_synthetic("residual", 6, seed=3, size_profile=UNPINNED)
        lut = build_lut_synthetic(dag, platform_b)
        raw = per_op_select(dag, lut, Objective(alpha=0.0))
        for op in dag.ops:
            assert raw[op.id] == cfg(D, L if not op.has_weights else R, R, R)

    def test_tie_prefers_offload(self):
        """Equal cost on host/local and device/remote picks the device"""
        dag = chain_dag(1)
        lut = table_lut(dag, {"op0": {cfg(H, L, L, L): 1.0, cfg(D, R, R, R): 1.0}})
        assert per_op_select(dag, lut, Objective(alpha=1.0))["op0"] == cfg(D, R, R, R)

    def test_tie_prefers_fewer_host_local_choices(self):
        """Among equal costs the config with more remote axes wins"""
        dag = chain_dag(1)
        ties = {cfg(H, L, L, R): 1.0, cfg(H, R, R, L): 1.0, cfg(H, R, R, R): 1.0}
        lut = table_lut(dag, {"op0": ties})
        assert per_op_select(dag, lut, Objective(alpha=1.0))["op0"] == cfg(H, R, R, R)

    def test_pins_restrict_candidates(self):
        """Axes whose tensors are all pinned keep the pin"""
        dag = chain_dag(2, pin_external=L)
        assert pinned_axes(dag.op("op0"), dag) == {"inputs": L}
        assert pinned_axes(dag.op("op1"), dag) == {"outputs": L}
        raw = per_op_select(dag, table_lut(dag, {}), Objective(alpha=0.0))
        assert raw["op0"] == cfg(D, R, L, R)
        assert raw["op1"] == cfg(D, R, R, L)

    def test_incomplete_lut(self):
        dag = chain_dag(1)
        with pytest.raises(IncompleteLUT):
            lut = PerfLUT(entries={}, provenance="measured")
            per_op_select(dag, lut, Objective(alpha=1.0))

    def test_host_bytes_non_increasing_as_alpha_drops(self, platform_b):
        """Lower alpha never selects a config charging more host bytes"""
        dag = gen_synthetic("chain", 5, seed=11, size_profile=UNPINNED)
        lut = build_lut_synthetic(dag, platform_b)
        norms = Objective(alpha=1.0).resolve(dag, lut)
        previous = None
        for alpha in (1.0, 0.75, 0.5, 0.25, 0.0):
            obj = norms.model_copy(update={"alpha": alpha})
            table = CostTable(dag, lut, obj)
            raw = per_op_select(dag, lut, obj, table)
            charged = {op.id: host_bytes(op, raw[op.id], dag) for op in dag.ops}
            if previous is not None:
                assert all(charged[k] <= previous[k] for k in charged)
            previous = charged


class TestDetectConflicts:
    """Disagreeing demands on a tensor"""

    def test_agreement(self):
        """Producer and consumer both remote"""
        dag = chain_dag(2)
        raw = {"op0": cfg(H, R, R, R), "op1": cfg(D, R, R, R)}
        assert not detect_conflicts(raw, dag)

    def test_disagreement(self):
        """Producer remote, consumer local"""
        dag = chain_dag(2)
        report = detect_conflicts({"op0": cfg(H, R, R, R), "op1": cfg(H, R, L, R)}, dag)
        assert report.tensor_ids == ["t0"]
        assert report.demanded("t0") == {L, R}
        roles = {d.role for d in report.conflicts["t0"]}
        assert roles == {"producer", "consumer"}

    def test_pin_against_demands(self):
        """A local pin conflicts with remote demands"""
        dag = chain_dag(2, pin_external=L)
        report = detect_conflicts({"op0": cfg(D, R, R, R), "op1": cfg(D, R, R, R)}, dag)
        assert set(report.tensor_ids) == {"x", "y"}
        assert any(d.role == "pin" for d in report.conflicts["x"])

    def test_shared_weight_owners(self):
        """Owners disagreeing on a shared weight"""
        tensors = [
            TensorSpec(id="x", kind=TensorKind.EXTERNAL_INPUT, size_bytes=1),
            TensorSpec(id="w", kind=TensorKind.WEIGHT, size_bytes=10),
            TensorSpec(id="t", kind=TensorKind.INTERMEDIATE, size_bytes=1),
            TensorSpec(id="y", kind=TensorKind.EXTERNAL_OUTPUT, size_bytes=1),
        ]
        ops = [
            OpNode(id="a", weight_ids=("w",), input_ids=("x",), output_ids=("t",)),
            OpNode(id="b", weight_ids=("w",), input_ids=("t",), output_ids=("y",)),
        ]
        dag = build_dag(ops, tensors)
        report = detect_conflicts({"a": cfg(H, L, R, R), "b": cfg(H, R, R, R)}, dag)
        assert report.tensor_ids == ["w"]
        assert {d.role for d in report.conflicts["w"]} == {"owner"}


class TestResolveConflicts:
    """Neighbourhood-cost resolution"""

    def test_no_conflicts_transcribes_raw(self):
        """Agreed placements pass straight through"""
        dag = chain_dag(2)
        lut = table_lut(dag, {})
        obj = Objective(alpha=1.0, **UNIT_NORMS)
        raw = {"op0": cfg(H, L, R, R), "op1": cfg(D, R, R, L)}
        plan = resolve_conflicts(raw, detect_conflicts(raw, dag), dag, lut, obj)
        assert plan.compute == {"op0": H, "op1": D}
        assert plan.placement == {"x": R, "t0": R, "w0": L, "w1": R, "y": L}

    def test_contested_tensor_takes_cheaper_neighbourhood(self):
        """t0 goes local: 1 + 3 beats 5 + 1"""
        dag, lut, obj = _contested_chain()
        raw = per_op_select(dag, lut, obj)
        assert raw == {"op0": cfg(H, L, L, L), "op1": cfg(H, L, R, L)}
        report = detect_conflicts(raw, dag)
        assert report.tensor_ids == ["t0"]
        plan = resolve_conflicts(raw, report, dag, lut, obj)
        assert plan.placement["t0"] == L
        assert not detect_conflicts(effective_configs(dag, plan), dag)

    def test_neighbourhood_tie_goes_remote(self):
        """Equal sums place the tensor remote"""
        dag = chain_dag(2)
        lut = table_lut(
            dag,
            {
                "op0": {cfg(H, L, L, L): 1.0, cfg(H, L, L, R): 2.0},
                "op1": {cfg(H, L, R, L): 1.0, cfg(H, L, L, L): 2.0},
            },
        )
        obj = Objective(alpha=1.0, **UNIT_NORMS)
        raw = per_op_select(dag, lut, obj)
        plan = resolve_conflicts(raw, detect_conflicts(raw, dag), dag, lut, obj)
        assert plan.placement["t0"] == R

    def test_pin_precedence(self):
        """A pinned tensor keeps its pin even when both neighbours want remote"""
        dag = chain_dag(2, pin_external=L)
        lut = table_lut(dag, {})
        obj = Objective(alpha=0.0, **UNIT_NORMS)
        raw = {"op0": cfg(D, R, R, R), "op1": cfg(D, R, R, R)}
        plan = resolve_conflicts(raw, detect_conflicts(raw, dag), dag, lut, obj)
        assert plan.placement["x"] == L
        assert plan.placement["y"] == L
        validate_plan(plan, dag)


class TestPartition:
    """End-to-end pipeline behaviour"""

    def test_empty_dag(self):
        """No ops gives an empty plan"""
        dag = build_dag([], [])
        lut = PerfLUT(entries={}, provenance="measured")
        plan = partition(dag, lut, Objective(alpha=0.5))
        assert plan.compute == {}
        assert plan.placement == {}

    def test_alpha_zero_all_remote(self, platform_b):
        """Unpinned DAGs end fully remote at alpha = 0"""
        dag = gen_synthetic("fanout", 6, seed=4, size_profile=UNPINNED)
        lut = build_lut_synthetic(dag, platform_b)
        plan = partition(dag, lut, Objective(alpha=0.0))
        assert simulate(dag, plan, lut, platform_b).remote_fraction == 1.0

    def test_plan_is_valid(self, platform_b):
        """Every op and tensor decided, pins honoured"""
        dag = gen_synthetic("residual", 8, seed=5)
        lut = build_lut_synthetic(dag, platform_b)
        for alpha in (0.0, 0.5, 1.0):
            validate_plan(partition(dag, lut, Objective(alpha=alpha)), dag)

    def test_deterministic(self, platform_b):
        """Same inputs, same plan"""
        dag = gen_synthetic("fanout", 7, seed=6)
        lut = build_lut_synthetic(dag, platform_b)
        obj = Objective(alpha=0.5)
        assert partition(dag, lut, obj) == partition(dag, lut, obj)

    def test_result_diagnostics(self):
        """Initial conflicts and pass count are reported"""
        dag, lut, obj = _contested_chain()
        result = run_partition(dag, lut, obj)
        assert result.initial_conflicts.tensor_ids == ["t0"]
        assert not result.residual_conflicts
        assert result.passes == 1
        assert result.raw["op1"] == cfg(H, L, R, L)

    def test_no_conflicts_skips_resolution(self):
        """A LUT without contention runs zero passes"""
        dag = chain_dag(2)
        result = run_partition(dag, table_lut(dag, {}), Objective(alpha=0.0))
        assert result.passes == 0
        assert not result.initial_conflicts

    def test_lut_read_bound(self, platform_b):
        """LUT reads stay within 16 per op plus two per conflicted adjacency"""
        for seed in range(5):
            dag = gen_synthetic("residual", 9, seed=seed)
            lut = build_lut_synthetic(dag, platform_b)
            result = run_partition(dag, lut, Objective(alpha=0.5))
            contested = result.initial_conflicts.tensor_ids
            degree = sum(len(dag.touching_ops(t)) for t in contested)
            assert result.lut_reads <= 16 * len(dag.ops) + 2 * degree

    def test_reads_include_default_latency_norm(self):
        """ALL_LOCAL reads behind a defaulted latency norm are counted"""
        dag = chain_dag(1, pin_external=R)
        lut = lut_from(dag, lambda op_id, c: 1.0)
        # pinned I/O leaves four candidates, none of them the all-local entry
        explicit = run_partition(dag, lut, Objective(alpha=0.5, **UNIT_NORMS))
        defaulted = run_partition(dag, lut, Objective(alpha=0.5))
        assert explicit.lut_reads == 4
        assert defaulted.lut_reads == 5

    def test_bounded_passes(self):
        """Extra passes never leave more conflicts than one pass"""
        rng = np.random.default_rng(8)
        for _ in range(20):
            dag = chain_dag(3)
            lut = multiplicative_lut(dag, rng)
            obj = Objective(alpha=float(rng.choice([0.25, 0.5, 0.75])))
            single = run_partition(dag, lut, obj, passes=1)
            bounded = run_partition(dag, lut, obj, passes=4)
            assert bounded.passes <= 4
            left = len(bounded.residual_conflicts.conflicts)
            assert left <= len(single.residual_conflicts.conflicts)
            validate_plan(bounded.plan, dag)


def _join():
    """pa -> a (300 B) and pb -> b (100 B), both read by j

    pa wants a remote and pb wants b local.
    """
    tensors = [
        TensorSpec(id="x", kind=TensorKind.EXTERNAL_INPUT, size_bytes=100),
        TensorSpec(id="a", kind=TensorKind.INTERMEDIATE, size_bytes=300),
        TensorSpec(id="b", kind=TensorKind.INTERMEDIATE, size_bytes=100),
        TensorSpec(id="y", kind=TensorKind.EXTERNAL_OUTPUT, size_bytes=100),
    ]
    ops = [
        OpNode(id="pa", flops=1, input_ids=("x",), output_ids=("a",)),
        OpNode(id="pb", flops=1, input_ids=("x",), output_ids=("b",)),
        OpNode(id="j", flops=1, input_ids=("a", "b"), output_ids=("y",)),
    ]
    dag = build_dag(ops, tensors)
    wants = {"pa": R, "pb": L}

    def latency(op_id, c):
        if op_id not in wants:
            return 1.0
        return 1.0 if c.outputs == wants[op_id] else 5.0

    return dag, lut_from(dag, latency)


class TestFinalView:
    """Resolved per-op configs against the plan's tensor placements"""

    def _plan(self):
        return PlacementPlan(
            compute={"pa": D, "pb": D, "j": D},
            placement={"x": R, "a": R, "b": L, "y": R},
        )

    def _configs(self):
        return {"pa": cfg(D, L, R, R), "pb": cfg(D, L, R, L), "j": cfg(D, L, R, R)}

    def test_minority_tensor_on_shared_axis(self):
        """b is local while j's inputs axis follows the 300-byte remote a"""
        dag, _ = _join()
        assert view_conflicts(self._configs(), self._plan(), dag) == []

    def test_disagreements_named(self):
        dag, _ = _join()
        plan = self._plan()
        for op_id, changed, expected in [
            ("j", cfg(D, L, L, R), ["j.inputs"]),
            ("pb", cfg(D, L, R, R), ["pb.outputs"]),
            ("pa", cfg(H, L, R, R), ["pa.compute"]),
        ]:
            configs = {**self._configs(), op_id: changed}
            assert view_conflicts(configs, plan, dag) == expected

    def test_partition_settles_shared_axis(self):
        """Write-back puts j's inputs local for b; finalize restores the majority"""
        dag, lut = _join()
        result = run_partition(dag, lut, Objective(alpha=1.0))
        assert result.initial_conflicts.tensor_ids == ["b"]
        assert result.plan.placement["a"] == R
        assert result.plan.placement["b"] == L
        assert result.configs["j"] == cfg(D, L, R, R)
        assert result.configs == effective_configs(dag, result.plan)
        assert view_conflicts(result.configs, result.plan, dag) == []
