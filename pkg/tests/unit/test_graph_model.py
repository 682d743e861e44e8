"""
Tests for the DAG model, its file format and the synthetic generators
"""

import pytest
import yaml

from farplan.core.errors import (
    CycleDetected,
    DanglingReference,
    DuplicateProducer,
    FormatError,
    InvalidShapeParams,
    InvalidTensorKind,
)
from farplan.core.graph_model import (
    OpNode,
    Placement,
    TensorKind,
    TensorSpec,
    build_dag,
    dump_dag,
    load_dag,
    total_bytes,
    write_dag,
)
from farplan.core.workloads import (
    SizeProfile,
    bundled_suite,
    gen_synthetic,
    load_suite_manifest,
)
from tests.helpers import chain_dag

pytestmark = pytest.mark.unit


def _t(tid, kind, size=10, **kw):
    return TensorSpec(id=tid, kind=kind, size_bytes=size, **kw)


class TestBuildDag:
    """build_dag validation and derived structure"""

    def test_links_and_topological_order(self):
        """Producer and consumers are derived from the ops"""
        dag = chain_dag(3)
        assert dag.topo == ("op0", "op1", "op2")
        assert dag.tensor("t0").producer == "op0"
        assert dag.tensor("t0").consumers == frozenset({"op1"})
        assert dag.tensor("x").producer is None
        assert dag.tensor("w1").consumers == frozenset({"op1"})

    def test_topo_respects_declaration_order_among_independent_ops(self):
        """Independent ops keep their declaration order"""
        tensors = [
            _t("a", TensorKind.EXTERNAL_INPUT),
            _t("o1", TensorKind.EXTERNAL_OUTPUT),
            _t("o2", TensorKind.EXTERNAL_OUTPUT),
        ]
        ops = [
            OpNode(id="z", input_ids=("a",), output_ids=("o1",)),
            OpNode(id="b", input_ids=("a",), output_ids=("o2",)),
        ]
        assert build_dag(ops, tensors).topo == ("z", "b")

    def test_cycle_names_an_op_on_the_cycle(self):
        """Two ops feeding each other raise CycleDetected"""
        tensors = [_t("p", TensorKind.INTERMEDIATE), _t("q", TensorKind.INTERMEDIATE)]
        ops = [
            OpNode(id="a", input_ids=("q",), output_ids=("p",)),
            OpNode(id="b", input_ids=("p",), output_ids=("q",)),
        ]
        with pytest.raises(CycleDetected) as exc:
            build_dag(ops, tensors)
        assert exc.value.op_id == "a"

    def test_self_loop_is_a_cycle(self):
        """An op consuming its own output is rejected"""
        tensors = [_t("p", TensorKind.INTERMEDIATE)]
        with pytest.raises(CycleDetected):
            build_dag([OpNode(id="a", input_ids=("p",), output_ids=("p",))], tensors)

    def test_dangling_input(self):
        """Unknown tensor ids are rejected"""
        with pytest.raises(DanglingReference) as exc:
            build_dag([OpNode(id="a", input_ids=("nope",))], [])
        assert exc.value.ref == "nope"

    def test_intermediate_without_producer(self):
        """An intermediate nobody writes is dangling"""
        tensors = [
            _t("t", TensorKind.INTERMEDIATE),
            _t("y", TensorKind.EXTERNAL_OUTPUT),
        ]
        with pytest.raises(DanglingReference):
            build_dag([OpNode(id="a", input_ids=("t",), output_ids=("y",))], tensors)

    def test_duplicate_producer(self):
        """Two ops writing the same tensor"""
        tensors = [_t("x", TensorKind.EXTERNAL_INPUT), _t("t", TensorKind.INTERMEDIATE)]
        ops = [
            OpNode(id="a", input_ids=("x",), output_ids=("t",)),
            OpNode(id="b", input_ids=("x",), output_ids=("t",)),
        ]
        with pytest.raises(DuplicateProducer) as exc:
            build_dag(ops, tensors)
        assert exc.value.tensor_id == "t"

    def test_weight_used_as_output(self):
        """A weight cannot be produced"""
        tensors = [_t("x", TensorKind.EXTERNAL_INPUT), _t("w", TensorKind.WEIGHT)]
        with pytest.raises(InvalidTensorKind):
            build_dag([OpNode(id="a", input_ids=("x",), output_ids=("w",))], tensors)

    def test_shared_weight_counted_once(self):
        """A weight owned by two ops contributes its bytes once"""
        tensors = [
            _t("x", TensorKind.EXTERNAL_INPUT, 5),
            _t("w", TensorKind.WEIGHT, 100),
            _t("t", TensorKind.INTERMEDIATE, 7),
            _t("y", TensorKind.EXTERNAL_OUTPUT, 3),
        ]
        ops = [
            OpNode(id="a", weight_ids=("w",), input_ids=("x",), output_ids=("t",)),
            OpNode(id="b", weight_ids=("w",), input_ids=("t",), output_ids=("y",)),
        ]
        dag = build_dag(ops, tensors)
        assert dag.tensor("w").consumers == frozenset({"a", "b"})
        assert total_bytes(dag) == 115

    def test_touching_ops_producer_first(self):
        """touching_ops lists the producer, then consumers in topological order"""
        dag = gen_synthetic("fanout", 5, seed=3)
        assert dag.touching_ops("t_src") == ["op0", "op1", "op2", "op3"]

    def test_empty_dag(self):
        """No ops, no tensors"""
        dag = build_dag([], [])
        assert dag.topo == ()
        assert total_bytes(dag) == 0


class TestDagFormat:
    """YAML DAG documents"""

    def test_round_trip(self, tmp_path):
        """write then load reproduces the same document"""
        dag = gen_synthetic("residual", 6, seed=4)
        path = tmp_path / "dag.yaml"
        write_dag(dag, path)
        loaded = load_dag(path)
        assert dump_dag(loaded) == dump_dag(dag)
        assert loaded.seed == 4
        assert loaded.topo == dag.topo

    def test_document_layout(self):
        """Top-level keys and sorted consumers"""
        text = dump_dag(gen_synthetic("fanout", 4, seed=1))
        assert text.startswith("meta:\n  seed: 1\nops:\n")
        doc = yaml.safe_load(text)
        assert list(doc) == ["meta", "ops", "tensors"]
        src = next(t for t in doc["tensors"] if t["id"] == "t_src")
        assert src["consumers"] == ["op1", "op2"]
        assert list(src) == [
            "id",
            "kind",
            "size_bytes",
            "producer",
            "consumers",
            "pinned",
        ]

    def test_malformed_document(self, tmp_path):
        """A list at top level is not a DAG document"""
        path = tmp_path / "bad.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(FormatError):
            load_dag(path)

    def test_invalid_field(self, tmp_path):
        """Negative sizes fail validation"""
        path = tmp_path / "bad.yaml"
        path.write_text(
            "ops: []\ntensors:\n- {id: x, kind: ExternalInput, size_bytes: -1}\n"
        )
        with pytest.raises(FormatError):
            load_dag(path)


class TestGenerators:
    """gen_synthetic shapes and determinism"""

    def test_minimal_chain(self):
        """One op with one external input, one external output and one weight"""
        dag = gen_synthetic("chain", 1, seed=0)
        kinds = sorted(t.kind.value for t in dag.tensors)
        assert len(dag.ops) == 1
        assert kinds == ["ExternalInput", "ExternalOutput", "Weight"]

    def test_chain_is_deterministic(self):
        """Equal arguments give byte-identical documents"""
        first = dump_dag(gen_synthetic("chain", 5, seed=7))
        assert first == dump_dag(gen_synthetic("chain", 5, seed=7))

    def test_different_seeds_differ(self):
        """Sizes depend on the seed"""
        first = dump_dag(gen_synthetic("chain", 5, seed=7))
        assert first != dump_dag(gen_synthetic("chain", 5, seed=8))

    def test_fanout_structure(self):
        """Source, two branches and a join over both branch outputs"""
        dag = gen_synthetic("fanout", 4, seed=1)
        join = dag.op(dag.topo[-1])
        assert len(dag.ops) == 4
        assert len(join.input_ids) == 2
        kinds = {dag.tensor(t).kind for t in join.input_ids}
        assert kinds == {TensorKind.INTERMEDIATE}
        assert dag.tensor("t_src").consumers == frozenset({"op1", "op2"})

    def test_residual_has_skip_connections(self):
        """Some op reads a tensor produced two steps earlier"""
        dag = gen_synthetic("residual", 5, seed=2)
        assert any(len(op.input_ids) == 2 for op in dag.ops)

    @pytest.mark.parametrize("shape", ["chain", "fanout", "residual"])
    def test_topological_order_consistent_with_edges(self, shape):
        """Every producer precedes its consumers"""
        dag = gen_synthetic(shape, 9, seed=5)
        for t in dag.tensors:
            if t.producer is not None:
                for c in t.consumers:
                    assert dag.topo_index(t.producer) < dag.topo_index(c)

    def test_external_tensors_pinned_local_by_default(self):
        """Requests arrive in and results return to host memory"""
        dag = gen_synthetic("chain", 3, seed=0)
        assert dag.tensor("x").pinned == Placement.LOCAL
        assert dag.tensor("y").pinned == Placement.LOCAL
        assert dag.tensor("t0").pinned is None

    def test_unpinned_profile(self):
        """pin_external=False leaves every tensor free"""
        profile = SizeProfile(pin_external=False)
        dag = gen_synthetic("chain", 3, seed=0, size_profile=profile)
        assert all(t.pinned is None for t in dag.tensors)

    def test_invalid_params(self):
        """Bad shape parameters raise InvalidShapeParams"""
        with pytest.raises(InvalidShapeParams):
            gen_synthetic("chain", 0, seed=0)
        with pytest.raises(InvalidShapeParams):
            gen_synthetic("fanout", 2, seed=0)
        with pytest.raises(InvalidShapeParams):
            gen_synthetic("ring", 3, seed=0)


class TestBundledSuite:
    """Packaged memory-bound workloads"""

    def test_manifest(self):
        """Several DAGs of each shape"""
        entries = load_suite_manifest()
        assert {e.shape.value for e in entries} == {"chain", "fanout", "residual"}
        assert all(e.profile == "memory_bound" for e in entries)

    def test_suite_is_memory_bound(self):
        """GB-scale tensors dwarf the external buffers"""
        suite = bundled_suite()
        assert set(suite) == {e.name for e in load_suite_manifest()}
        for dag in suite.values():
            edges = (TensorKind.EXTERNAL_INPUT, TensorKind.EXTERNAL_OUTPUT)
            external = sum(t.size_bytes for t in dag.tensors if t.kind in edges)
            assert external < 0.05 * total_bytes(dag)
