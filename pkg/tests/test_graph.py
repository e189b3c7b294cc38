"""Graph model, fingerprinting, and engine execution semantics."""

import json
import sys

import numpy as np
import pytest

from trajflow.errors import (BadGraph, BadParam, CycleDetected, NodeError,
                             PortOccupied, RankMismatch, TypeMismatch,
                             UnknownKind, UnknownNode, UnknownPort)
from trajflow.graph import (Engine, ExecutionSettings, Graph, RunCache,
                            fingerprint_inputs, graph_from_json, parse_frames)
from trajflow.model.frame import Box, Frame
from trajflow.model.tensor import Tensor
from trajflow.model.trajectory import CallableFrameSource, Trajectory
from trajflow.nodes import KINDS
from trajflow.nodes.base import NodeKind, PortSpec
from trajflow.scene import dumps_canonical, snapshot_document


def make_trajectory(frame_fn, n_frames, n_atoms):
    return Trajectory(CallableFrameSource(frame_fn), frame_count=n_frames,
                      atom_count=n_atoms)


def static_trajectory(positions, n_frames=3, box_edge=50.0, attrs=None,
                      types=None):
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    types = types or ("Ar",) * n

    def make(k):
        return Frame(positions=positions, atom_type=types,
                     box=Box.cubic(box_edge), attributes=attrs or {})

    return make_trajectory(make, n_frames, n)


class FailOnFrame(NodeKind):
    """Test-only kind: raises at one configured frame, no-op otherwise."""

    name = "test_fail_on_frame"
    cacheable = False

    def ports(self, params):
        return (), ()

    def run(self, ctx, inputs, params):
        if ctx.frame_index == params.get("frame", -1):
            raise NodeError(f"synthetic failure at frame {ctx.frame_index}")
        return {}


KINDS.setdefault(FailOnFrame.name, FailOnFrame())


# ---------------------------------------------------------------- model


class TestGraphModel:
    def test_connect_compatible(self):
        g = Graph()
        a = g.add_node("const", {"value": [1.0, 2.0]})
        b = g.add_node("plot_data", {"mode": "lines"})
        g.connect(f"{a.id}.out", f"{b.id}.value")
        assert len(g.connections) == 1

    def test_connect_dtype_mismatch(self):
        g = Graph()
        a = g.add_node("const", {"value": [1, 2], "dtype": "i64"})
        b = g.add_node("plot_data", {"mode": "lines"})
        with pytest.raises(TypeMismatch):
            g.connect(f"{a.id}.out", f"{b.id}.value")

    def test_connect_rank_mismatch_is_type_mismatch_subclass(self):
        g = Graph()
        a = g.add_node("const", {"value": 1.0})  # rank 0
        b = g.add_node("plot_data", {"mode": "lines"})  # wants rank 1
        with pytest.raises(RankMismatch) as info:
            g.connect(f"{a.id}.out", f"{b.id}.value")
        assert isinstance(info.value, TypeMismatch)

    def test_connect_fixed_dims_mismatch(self):
        g = Graph()
        a = g.add_node("get_positions")  # positions (None, 3)
        b = g.add_node("set_colors")     # colors (None, 4)
        with pytest.raises(RankMismatch):
            g.connect(f"{a.id}.positions", f"{b.id}.colors")

    def test_wildcard_dims_accepted(self):
        g = Graph()
        a = g.add_node("filter_guests", {"guests": ["C"]})
        b = g.add_node("extra_bonds")
        g.connect(f"{a.id}.pairs", f"{b.id}.pairs")

    def test_port_occupied(self):
        g = Graph()
        a = g.add_node("const", {"value": [1.0]})
        b = g.add_node("const", {"value": [2.0]})
        c = g.add_node("plot_data", {"mode": "lines"})
        g.connect(f"{a.id}.out", f"{c.id}.value")
        with pytest.raises(PortOccupied):
            g.connect(f"{b.id}.out", f"{c.id}.value")

    def test_cycle_detected_and_rolled_back(self):
        g = Graph()
        a = g.add_node("add")
        b = g.add_node("add")
        g.connect(f"{a.id}.out", f"{b.id}.a")
        with pytest.raises(CycleDetected):
            g.connect(f"{b.id}.out", f"{a.id}.a")
        # the failed edge must not linger
        assert len(g.connections) == 1
        g.topo_order()

    def test_topo_chain_and_tiebreak(self):
        g = Graph()
        g.add_node("const", {"value": 1.0}, node_id=2)
        g.add_node("const", {"value": 2.0}, node_id=1)
        assert g.topo_order() == [1, 2]

    def test_topo_diamond(self):
        g = Graph()
        a = g.add_node("const", {"value": [1.0]})
        b = g.add_node("add")
        c = g.add_node("mul")
        d = g.add_node("combine_channels")
        g.connect(f"{a.id}.out", f"{b.id}.a")
        g.connect(f"{a.id}.out", f"{b.id}.b")
        g.connect(f"{a.id}.out", f"{c.id}.a")
        g.connect(f"{a.id}.out", f"{c.id}.b")
        g.connect(f"{b.id}.out", f"{d.id}.forward")
        g.connect(f"{c.id}.out", f"{d.id}.backward")
        order = g.topo_order()
        assert order[0] == a.id and order[-1] == d.id

    def test_unknown_node_port_kind(self):
        g = Graph()
        a = g.add_node("const", {"value": 1.0})
        with pytest.raises(UnknownNode):
            g.connect("99.out", f"{a.id}.value")
        with pytest.raises(UnknownPort):
            g.connect(f"{a.id}.nope", f"{a.id}.nope")
        with pytest.raises(UnknownKind):
            g.add_node("not_a_kind")

    def test_duplicate_node_id(self):
        g = Graph()
        g.add_node("const", {"value": 1.0}, node_id=7)
        with pytest.raises(BadGraph):
            g.add_node("const", {"value": 2.0}, node_id=7)

    def test_json_round_trip(self):
        doc = {
            "nodes": [
                {"id": 1, "kind": "const", "params": {"value": [0.5, 1.0]}},
                {"id": 2, "kind": "plot_data", "params": {"mode": "lines"}},
            ],
            "connections": [{"from": "1.out", "to": "2.value"}],
            "run": {"frames": "0:2", "direction": "backward",
                    "init_attributes": {"a": 1.0}},
        }
        g = graph_from_json(doc)
        out = g.to_json()
        assert out["nodes"] == doc["nodes"]
        assert out["connections"] == doc["connections"]
        assert out["run"] == doc["run"]
        # round-tripping the output parses to the same document again
        assert graph_from_json(out).to_json() == out

    def test_ui_keys_ignored(self):
        doc = {
            "nodes": [{"id": 1, "kind": "const", "params": {"value": 1.0},
                       "ui": {"x": 10, "y": 20}}],
            "connections": [],
            "run": {"direction": "forward"},
            "ui": {"zoom": 2.0},
        }
        g = graph_from_json(doc)
        assert g.nodes[1].kind.name == "const"

    def test_validate_flags_unconnected_required_input(self):
        g = Graph()
        a = g.add_node("plot_data")
        problems = g.validate()
        assert len(problems) == 1
        assert problems[0]["node"] == a.id
        assert "value" in problems[0]["message"]

    def test_validate_allows_unconnected_optional_input(self):
        g = Graph()
        n = g.add_node("register_hydrate")
        problems = g.validate()
        flagged = {p["message"].split(".")[-1].split(" ")[0] for p in problems}
        assert "prior_labels" not in flagged
        assert {"pairs", "ring_vertices", "ring_pair"} <= flagged
        assert n.inputs["prior_labels"].optional

    def test_parse_frames(self):
        assert parse_frames("0:10") == (0, 10)
        assert parse_frames(":5") == (0, 5)
        assert parse_frames("3:") == (3, None)
        with pytest.raises(BadParam):
            parse_frames("5")
        with pytest.raises(BadParam):
            parse_frames("a:b")

    def test_bad_direction(self):
        doc = {"nodes": [], "connections": [], "run": {"direction": "sideways"}}
        with pytest.raises(BadParam):
            graph_from_json(doc)

    def test_connect_tuple_endpoints(self):
        g = Graph()
        a = g.add_node("const", {"value": [1.0]})
        b = g.add_node("plot_data", {"mode": "lines"})
        g.connect(a.id, b.id, src_port="out", dst_port="value")
        assert g.connections[0].src == a.id


# ---------------------------------------------------------- fingerprint


class TestFingerprint:
    def _tensors(self, seed=0):
        rng = np.random.default_rng(seed)
        return {"a": Tensor(rng.normal(size=(4, 3))),
                "b": Tensor(rng.integers(0, 9, size=7))}

    def test_equal_inputs_equal_fingerprint(self):
        fa = fingerprint_inputs("k", {"p": 1}, self._tensors(), [], "traj")
        fb = fingerprint_inputs("k", {"p": 1}, self._tensors(), [], "traj")
        assert fa == fb

    def test_param_change_changes_fingerprint(self):
        fa = fingerprint_inputs("k", {"p": 1}, self._tensors(), [], "traj")
        fb = fingerprint_inputs("k", {"p": 2}, self._tensors(), [], "traj")
        assert fa != fb

    def test_env_and_identity_changes(self):
        base = fingerprint_inputs("k", {}, {}, [("e", b"x")], "traj")
        assert base != fingerprint_inputs("k", {}, {}, [("e", b"y")], "traj")
        assert base != fingerprint_inputs("k", {}, {}, [("f", b"x")], "traj")
        assert base != fingerprint_inputs("k2", {}, {}, [("e", b"x")], "traj")
        assert base != fingerprint_inputs("k", {}, {}, [("e", b"x")], "other")

    def test_input_dict_order_irrelevant(self):
        t = self._tensors()
        fa = fingerprint_inputs("k", {}, {"a": t["a"], "b": t["b"]}, [], "t")
        fb = fingerprint_inputs("k", {}, {"b": t["b"], "a": t["a"]}, [], "t")
        assert fa == fb

    def test_avalanche_no_collisions(self):
        """Perturbing one element must always change the digest."""
        rng = np.random.default_rng(42)
        base_arr = rng.normal(size=(20, 3))
        base = fingerprint_inputs("k", {}, {"x": Tensor(base_arr)}, [], "t")
        seen = {base}
        for _ in range(2000):
            arr = base_arr.copy()
            i = rng.integers(0, arr.shape[0])
            j = rng.integers(0, arr.shape[1])
            arr[i, j] += rng.normal() or 1e-9
            fp = fingerprint_inputs("k", {}, {"x": Tensor(arr)}, [], "t")
            assert fp != base
            seen.add(fp)
        # essentially all perturbations should be distinct digests
        assert len(seen) >= 2000 * 0.99


# ---------------------------------------------------------------- engine


def accumulate_graph():
    """acc <- acc + 1 every frame, plotted: the canonical recurrence."""
    return {
        "nodes": [
            {"id": 1, "kind": "get_attribute", "params": {"name": "acc"}},
            {"id": 2, "kind": "const", "params": {"value": 1.0}},
            {"id": 3, "kind": "add", "params": {"rank_b": 0}},
            {"id": 4, "kind": "set_attribute", "params": {"name": "acc"}},
        ],
        "connections": [
            {"from": "1.values", "to": "3.a"},
            {"from": "2.out", "to": "3.b"},
            {"from": "3.out", "to": "4.values"},
        ],
        "run": {"direction": "forward"},
    }


def tracking_doc(ids=(1, 2, 3, 4, 5, 6), frames="0:4"):
    """The cluster-tracking wiring, parameterized over node ids."""
    g, nl, gl, ga, tc, sa = ids
    return {
        "nodes": [
            {"id": g, "kind": "get_positions", "params": {}},
            {"id": nl, "kind": "list_neighbors", "params": {"cutoff": 1.5}},
            {"id": gl, "kind": "group_list", "params": {}},
            {"id": ga, "kind": "get_attribute", "params": {"name": "current_label"}},
            {"id": tc, "kind": "track_cluster", "params": {}},
            {"id": sa, "kind": "set_attribute", "params": {"name": "current_label"}},
        ],
        "connections": [
            {"from": f"{g}.positions", "to": f"{nl}.positions"},
            {"from": f"{nl}.offsets", "to": f"{gl}.offsets"},
            {"from": f"{nl}.neighbors", "to": f"{gl}.neighbors"},
            {"from": f"{gl}.ids", "to": f"{tc}.current_ids"},
            {"from": f"{ga}.values", "to": f"{tc}.prev_label"},
            {"from": f"{tc}.new_label", "to": f"{sa}.values"},
        ],
        "run": {"frames": frames, "direction": "forward",
                "init_attributes": {"current_label": [0, 0, 0, 1, 1]}},
    }


def drifting_trajectory(n_frames=4):
    def make(k):
        pos = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0],
                        [10, 0, 0], [11, 0, 0]], dtype=float)
        if k >= 2:
            pos[4] = [30.0, 0, 0]
        return Frame(positions=pos, atom_type=("Ar",) * 5, box=Box.cubic(50.0))

    return make_trajectory(make, n_frames, 5)


def store_snapshot(store):
    return {
        name: {k: store.read(name, k)[0].tobytes()
               for k in store.defined_frames(name)}
        for name in store.names()
    }


def scene_snapshot_strings(engine, frames):
    return [dumps_canonical(snapshot_document(engine.scene.resolve(
        engine.trajectory, k))) for k in frames]


class TestEngineExecution:
    def test_recurrence_base_and_threading(self):
        traj = static_trajectory(np.zeros((3, 3)), n_frames=4)
        g = graph_from_json(accumulate_graph())
        eng = Engine(traj)
        res = eng.run(g)
        assert res.ok
        for k in range(4):
            np.testing.assert_array_equal(eng.store.read("acc", k)[0],
                                          np.full(3, k + 1.0))

    def test_rerun_on_same_engine_is_identical(self):
        """Write-set slots are cleared at run start, so a second run cannot
        read the first run's values as frame data."""
        traj = static_trajectory(np.zeros((3, 3)), n_frames=4)
        g = graph_from_json(accumulate_graph())
        eng = Engine(traj)
        eng.run(g)
        first = store_snapshot(eng.store)
        eng.run(g)
        assert store_snapshot(eng.store) == first

    def test_determinism_bit_identical(self):
        traj = drifting_trajectory()
        doc = tracking_doc()
        snaps = []
        scenes = []
        for _ in range(2):
            eng = Engine(drifting_trajectory())
            res = eng.run(graph_from_json(doc))
            assert res.ok
            snaps.append(store_snapshot(eng.store))
            scenes.append(scene_snapshot_strings(eng, res.frames))
        assert snaps[0] == snaps[1]
        assert scenes[0] == scenes[1]

    def test_cache_soundness_bit_identical(self):
        doc = tracking_doc()
        results = {}
        for use_cache in (False, True):
            eng = Engine(drifting_trajectory())
            res = eng.run(graph_from_json(doc),
                          ExecutionSettings(use_cache=use_cache))
            assert res.ok
            results[use_cache] = (store_snapshot(eng.store),
                                  scene_snapshot_strings(eng, res.frames))
        assert results[False] == results[True]

    def test_cached_second_run_identical_and_hits(self):
        eng = Engine(drifting_trajectory())
        doc = tracking_doc()
        res1 = eng.run(graph_from_json(doc))
        first = store_snapshot(eng.store)
        plots1 = {k: list(s.points) for k, s in res1.plots.items()}
        res2 = eng.run(graph_from_json(doc))
        assert store_snapshot(eng.store) == first
        assert {k: list(s.points) for k, s in res2.plots.items()} == plots1
        assert eng.cache.hits > 0

    def test_id_permutation_invariance(self):
        """Same wiring under permuted node ids gives identical attributes."""
        base = None
        for ids in [(1, 2, 3, 4, 5, 6), (6, 5, 4, 3, 2, 1), (11, 3, 7, 2, 9, 5)]:
            eng = Engine(drifting_trajectory())
            res = eng.run(graph_from_json(tracking_doc(ids=ids)),
                          ExecutionSettings(use_cache=False))
            assert res.ok
            values = tuple(eng.store.read("current_label", k)[0].tobytes()
                           for k in range(4))
            if base is None:
                base = values
            else:
                assert values == base

    def test_execution_instant_attribute_visibility(self):
        """A reader scheduled after the writer (by id tie-break, no port
        path) sees the value written earlier in the same frame."""
        traj = static_trajectory(np.zeros((2, 3)), n_frames=1)
        doc = {
            "nodes": [
                {"id": 1, "kind": "const", "params": {"value": [3.5, 4.5]}},
                {"id": 2, "kind": "set_attribute", "params": {"name": "x"}},
                {"id": 3, "kind": "get_attribute", "params": {"name": "x"}},
                {"id": 4, "kind": "set_attribute", "params": {"name": "copy"}},
            ],
            "connections": [
                {"from": "1.out", "to": "2.values"},
                {"from": "3.values", "to": "4.values"},
            ],
        }
        eng = Engine(traj)
        assert eng.run(graph_from_json(doc)).ok
        np.testing.assert_array_equal(eng.store.read("copy", 0)[0], [3.5, 4.5])

    def test_reader_wired_before_writer_sees_previous_frame(self):
        traj = static_trajectory(np.zeros((2, 3)), n_frames=3)
        g = graph_from_json(accumulate_graph())
        eng = Engine(traj)
        eng.run(g)
        # reader (node 1, before writer in topo) saw 0, then 1, then 2:
        np.testing.assert_array_equal(eng.store.read("acc", 2)[0], [3.0, 3.0])

    def test_backward_visit_order(self):
        traj = static_trajectory(np.zeros((2, 3)), n_frames=3)
        doc = accumulate_graph()
        doc["nodes"].append({"id": 5, "kind": "count_nonzero",
                             "params": {"dtype": "f64"}})
        doc["nodes"].append({"id": 6, "kind": "to_f64", "params": {}})
        doc["nodes"].append({"id": 7, "kind": "plot_data", "params": {}})
        doc["connections"] += [
            {"from": "3.out", "to": "5.values"},
            {"from": "5.count", "to": "6.values"},
            {"from": "6.out", "to": "7.value"},
        ]
        doc["run"] = {"frames": "0:3", "direction": "backward"}
        eng = Engine(traj)
        res = eng.run(graph_from_json(doc))
        assert res.frames == [2, 1, 0]
        assert [x for x, _ in res.plots[7].points] == [2.0, 1.0, 0.0]

    def test_frame_error_isolation(self):
        """A failing node aborts its frame: earlier writes persist, the scene
        delta and plot point are discarded, later nodes are skipped."""
        traj = static_trajectory(np.zeros((2, 3)), n_frames=3)
        doc = {
            "nodes": [
                {"id": 1, "kind": "const", "params": {"value": [1.0, 1.0]}},
                {"id": 2, "kind": "set_attribute", "params": {"name": "early"}},
                {"id": 3, "kind": "test_fail_on_frame", "params": {"frame": 1}},
                {"id": 4, "kind": "const", "params": {"value": [2.0, 2.0]}},
                {"id": 5, "kind": "set_attribute", "params": {"name": "late"}},
                {"id": 6, "kind": "const", "params": {"value": 7.0}},
                {"id": 7, "kind": "plot_data", "params": {"label": "p"}},
            ],
            "connections": [
                {"from": "1.out", "to": "2.values"},
                {"from": "4.out", "to": "5.values"},
                {"from": "6.out", "to": "7.value"},
            ],
        }
        eng = Engine(traj)
        res = eng.run(graph_from_json(doc),
                      ExecutionSettings(continue_on_error=True))
        assert not res.ok
        assert [r.ok for r in res.reports] == [True, False, True]
        err = res.reports[1].error
        assert err["node"] == 3 and "synthetic" in err["message"]
        # early write (node 2, before the failure) persisted at frame 1
        assert eng.store.read("early", 1)[1]
        # late write (node 5, after the failure) did not
        assert not eng.store.read("late", 1)[1]
        # no scene delta committed for the failed frame
        assert not eng.scene.has_delta(1)
        assert eng.scene.has_delta(0) and eng.scene.has_delta(2)
        # plot series has points only for frames executed without error
        assert [x for x, _ in res.plots[7].points] == [0.0, 2.0]

    def test_abort_on_first_error_by_default(self):
        traj = static_trajectory(np.zeros((2, 3)), n_frames=3)
        doc = {"nodes": [{"id": 1, "kind": "test_fail_on_frame",
                          "params": {"frame": 1}}],
               "connections": []}
        res = Engine(traj).run(graph_from_json(doc))
        assert [r.frame for r in res.reports] == [0, 1]

    def test_unconnected_required_input_rejected(self):
        traj = static_trajectory(np.zeros((2, 3)), n_frames=1)
        g = Graph()
        g.add_node("plot_data")
        with pytest.raises(BadGraph):
            Engine(traj).run(g)

    def test_attribute_recurrence_is_not_a_cycle(self):
        g = graph_from_json(accumulate_graph())
        assert g.topo_order() == [1, 2, 3, 4]

    def test_imported_frame_attributes_seeded(self):
        values = np.array([0.25, 0.5, 0.75])
        traj = static_trajectory(np.zeros((3, 3)), n_frames=2,
                                 attrs={"temp": values})
        doc = {
            "nodes": [
                {"id": 1, "kind": "get_attribute", "params": {"name": "temp"}},
                {"id": 2, "kind": "set_attribute", "params": {"name": "copy"}},
            ],
            "connections": [{"from": "1.values", "to": "2.values"}],
        }
        eng = Engine(traj)
        assert eng.run(graph_from_json(doc)).ok
        for k in range(2):
            np.testing.assert_array_equal(eng.store.read("temp", k)[0], values)
            np.testing.assert_array_equal(eng.store.read("copy", k)[0], values)

    def test_init_attributes_seed_first_read(self):
        traj = static_trajectory(np.zeros((3, 3)), n_frames=2)
        doc = accumulate_graph()
        doc["run"]["init_attributes"] = {"acc": 10.0}
        eng = Engine(traj)
        eng.run(graph_from_json(doc))
        np.testing.assert_array_equal(eng.store.read("acc", 0)[0],
                                      np.full(3, 11.0))

    def test_stop_between_frames(self):
        traj = static_trajectory(np.zeros((2, 3)), n_frames=5)
        calls = []

        def should_stop():
            return len(calls) >= 2

        def on_frame(k, report, scalars):
            calls.append(k)

        res = Engine(traj).run(
            graph_from_json(accumulate_graph()),
            ExecutionSettings(should_stop=should_stop, on_frame=on_frame))
        assert res.stopped
        assert res.frames == [0, 1]

    def test_on_frame_scalars(self):
        traj = static_trajectory(np.zeros((2, 3)), n_frames=2)
        doc = {
            "nodes": [
                {"id": 1, "kind": "const", "params": {"value": 4.0}},
                {"id": 2, "kind": "plot_data", "params": {"label": "obs"}},
            ],
            "connections": [{"from": "1.out", "to": "2.value"}],
        }
        seen = []
        Engine(traj).run(graph_from_json(doc),
                         ExecutionSettings(on_frame=lambda k, r, s: seen.append((k, s))))
        assert seen == [(0, {"obs": 4.0}), (1, {"obs": 4.0})]

    def test_frame_range_out_of_bounds(self):
        from trajflow.errors import IndexOutOfRange
        traj = static_trajectory(np.zeros((2, 3)), n_frames=3)
        doc = accumulate_graph()
        doc["run"]["frames"] = "0:9"
        with pytest.raises(IndexOutOfRange):
            Engine(traj).run(graph_from_json(doc))


class TestEngineScene:
    def scene_graph_doc(self):
        return {
            "nodes": [
                {"id": 1, "kind": "get_positions", "params": {}},
                {"id": 2, "kind": "const",
                 "params": {"value": [0.2, 0.4, 0.6, 0.8, 1.0]}},
                {"id": 3, "kind": "set_attribute", "params": {"name": "v"}},
                {"id": 4, "kind": "show_range",
                 "params": {"attribute": "v", "lo": 0.3, "hi": 0.9}},
                {"id": 5, "kind": "const", "params": {"value": [[0, 1]],
                                                      "dtype": "i64"}},
            ],
            "connections": [{"from": "2.out", "to": "3.values"}],
        }

    def test_show_range_hides_outside_inclusive(self):
        traj = static_trajectory(np.zeros((5, 3)), n_frames=1)
        eng = Engine(traj)
        assert eng.run(graph_from_json(self.scene_graph_doc())).ok
        snap = eng.scene.resolve(traj, 0)
        np.testing.assert_array_equal(snap.visible,
                                      [False, True, True, True, False])

    def test_two_show_ranges_compose_by_and(self):
        doc = self.scene_graph_doc()
        doc["nodes"].append({"id": 6, "kind": "show_range",
                             "params": {"attribute": "v", "lo": 0.0, "hi": 0.5}})
        traj = static_trajectory(np.zeros((5, 3)), n_frames=1)
        eng = Engine(traj)
        assert eng.run(graph_from_json(doc)).ok
        snap = eng.scene.resolve(traj, 0)
        # intersection of [0.3,0.9] and [0,0.5]: only v=0.4 survives
        np.testing.assert_array_equal(snap.visible,
                                      [False, True, False, False, False])

    def test_wider_range_does_not_reshow(self):
        doc = self.scene_graph_doc()
        doc["nodes"].append({"id": 6, "kind": "show_range",
                             "params": {"attribute": "v"}})  # infinite range
        traj = static_trajectory(np.zeros((5, 3)), n_frames=1)
        eng = Engine(traj)
        assert eng.run(graph_from_json(doc)).ok
        snap = eng.scene.resolve(traj, 0)
        np.testing.assert_array_equal(snap.visible,
                                      [False, True, True, True, False])

    def test_get_positions_visible_after_show_range(self):
        doc = self.scene_graph_doc()
        doc["nodes"].append({"id": 7, "kind": "get_positions",
                             "params": {"filter": "visible"}})
        doc["nodes"].append({"id": 8, "kind": "list_neighbors",
                             "params": {"cutoff": 1.0}})
        doc["connections"].append({"from": "7.positions", "to": "8.positions"})
        traj = static_trajectory(np.arange(15, dtype=float).reshape(5, 3),
                                 n_frames=1, box_edge=100.0)
        eng = Engine(traj)
        res = eng.run(graph_from_json(doc))
        assert res.ok

    def test_scene_effects_roundtrip(self):
        doc = {
            "nodes": [
                {"id": 1, "kind": "get_positions", "params": {}},
                {"id": 2, "kind": "const",
                 "params": {"value": [[1.0, 0.0, 0.0, 1.0]] }},
                {"id": 3, "kind": "const", "params": {"value": [0], "dtype": "i64"}},
                {"id": 4, "kind": "set_colors", "params": {}},
                {"id": 5, "kind": "const", "params": {"value": [2.0]}},
                {"id": 6, "kind": "set_radius_scale", "params": {}},
                {"id": 7, "kind": "const", "params": {"value": [[0, 1]],
                                                      "dtype": "i64"}},
                {"id": 8, "kind": "extra_bonds", "params": {}},
                {"id": 9, "kind": "const", "params": {"value": [1.0, 2.0, 3.0]}},
                {"id": 10, "kind": "set_camera_center", "params": {}},
            ],
            "connections": [
                {"from": "3.out", "to": "4.indices"},
                {"from": "2.out", "to": "4.colors"},
                {"from": "3.out", "to": "6.indices"},
                {"from": "5.out", "to": "6.scales"},
                {"from": "7.out", "to": "8.pairs"},
                {"from": "9.out", "to": "10.center"},
            ],
        }
        traj = static_trajectory(np.zeros((3, 3)), n_frames=1)
        eng = Engine(traj)
        assert eng.run(graph_from_json(doc)).ok
        snap = eng.scene.resolve(traj, 0)
        np.testing.assert_array_equal(snap.colors[0], [1, 0, 0, 1])
        assert snap.radii[0] == 2.0
        assert (0, 1) in snap.bonds
        assert snap.camera == (1.0, 2.0, 3.0)

    def test_const_ranks(self):
        g = Graph()
        assert g.add_node("const", {"value": 1.0}).outputs["out"].rank == 0
        assert g.add_node("const", {"value": [1.0]}).outputs["out"].rank == 1
        two = g.add_node("const", {"value": [[1.0, 2.0]]}).outputs["out"]
        assert two.rank == 2 and two.dims == (1, 2)
        with pytest.raises(BadParam):
            g.add_node("const", {"value": [[1.0], [2.0, 3.0]]})  # ragged
        with pytest.raises(BadParam):
            g.add_node("const", {"value": "text"})


class TestEngineScriptNodes:
    def sine_doc(self, script_path):
        cmd = [sys.executable, str(script_path.parent / "py_exec_host.py"),
               "{path}"]
        return {
            "nodes": [
                {"id": 1, "kind": "const", "params": {"value": 16, "dtype": "i64"}},
                {"id": 2, "kind": {"script": {"language": "python",
                                              "path": str(script_path),
                                              "command": cmd}},
                 "params": {}},
                {"id": 3, "kind": "plot_data", "params": {"mode": "lines"}},
            ],
            "connections": [
                {"from": "1.out", "to": "2.n"},
                {"from": "2.wave", "to": "3.value"},
            ],
        }

    def test_script_node_runs_in_graph(self, fixture_dir):
        script = fixture_dir / "scripts" / "sine.py"
        traj = static_trajectory(np.zeros((2, 3)), n_frames=2)
        eng = Engine(traj)
        res = eng.run(graph_from_json(self.sine_doc(script)))
        assert res.ok
        expected = np.sin(2 * np.pi * np.arange(16) / 16)
        ys = [y for _, y in res.plots[3].points]
        np.testing.assert_allclose(ys, expected, rtol=0, atol=0)

    def test_script_results_cached_across_runs(self, fixture_dir):
        script = fixture_dir / "scripts" / "sine.py"
        traj = static_trajectory(np.zeros((2, 3)), n_frames=2)
        eng = Engine(traj)
        doc = self.sine_doc(script)
        eng.run(graph_from_json(doc))
        misses_before = eng.cache.misses
        eng.run(graph_from_json(doc))
        assert eng.cache.misses == misses_before  # all served from cache

    def test_script_error_isolates_frame(self, fixture_dir, tmp_path):
        boom = tmp_path / "boom.py"
        boom.write_text(
            "# @av in x : f64 [1]\n"
            "x = None\n"
            "# @av out y : f64 [1]\n"
            "y = None\n"
            "raise ValueError('deliberate')\n")
        cmd = [sys.executable,
               str(fixture_dir / "scripts" / "py_exec_host.py"),
               "{path}"]
        doc = {
            "nodes": [
                {"id": 1, "kind": "const", "params": {"value": [1.0]}},
                {"id": 2, "kind": {"script": {"language": "python",
                                              "path": str(boom),
                                              "command": cmd}}},
            ],
            "connections": [{"from": "1.out", "to": "2.x"}],
        }
        traj = static_trajectory(np.zeros((2, 3)), n_frames=2)
        res = Engine(traj).run(graph_from_json(doc),
                               ExecutionSettings(continue_on_error=True))
        assert not res.ok
        assert all(not r.ok for r in res.reports)
        assert "deliberate" in res.reports[0].error["message"]


class TestRunCacheObject:
    def test_get_put_and_counters(self):
        cache = RunCache()
        assert cache.get(1, 0, "fp") is None
        cache.put(1, 0, "fp", {"x": Tensor(np.zeros(2))}, ())
        assert cache.get(1, 0, "fp") is not None
        assert cache.hits == 1 and cache.misses == 1
        assert len(cache) == 1
        cache.clear()
        assert len(cache) == 0
