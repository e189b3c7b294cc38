"""Per-frame graph execution: topological scheduling, attribute recurrence,
scene-delta buffering, result caching, and error isolation.

Commit granularity differs by substrate and is load-bearing:
  - attribute writes apply as each node completes, so a same-frame reader
    wired after the writer sees the new value and a reader wired before it
    sees the previous frame's value (that is the recurrence);
  - scene deltas and plot points buffer per frame and commit only if every
    node of the frame succeeded, so a failed frame leaves no partial scene.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import (BadGraph, EngineError, IndexOutOfRange,
                      InconsistentAtomCount, LengthMismatch)
from ..model.attributes import AttributeStore
from ..model.tensor import Tensor
from ..scene import SceneDelta, SceneState
from .fingerprint import fingerprint_inputs, trajectory_identity
from .model import Graph

PLOT_MODES = ("lines_accumulate", "lines")


@dataclass
class PlotSeries:
    node_id: int
    label: str
    mode: str = "lines_accumulate"
    points: list = field(default_factory=list)  # (x, y) floats

    def to_json(self) -> dict:
        return {"node": self.node_id, "label": self.label, "mode": self.mode,
                "points": [[float(x), float(y)] for x, y in self.points]}


@dataclass
class FrameReport:
    frame: int
    ok: bool
    duration: float = 0.0
    executed: int = 0
    cached: int = 0
    node_timings: dict = field(default_factory=dict)  # node id -> seconds
    error: dict | None = None  # {node, code, message}

    def to_json(self) -> dict:
        doc = {"frame": self.frame, "ok": self.ok,
               "executed": self.executed, "cached": self.cached}
        if self.error is not None:
            doc["error"] = dict(self.error)
        return doc


@dataclass
class RunResult:
    frames: list[int]
    reports: list[FrameReport]
    plots: dict[int, PlotSeries]
    store: AttributeStore
    scene: SceneState
    stopped: bool = False

    @property
    def ok(self) -> bool:
        return not self.stopped and all(r.ok for r in self.reports)

    @property
    def errors(self) -> list[dict]:
        return [dict(r.error, frame=r.frame)
                for r in self.reports if r.error is not None]


class RunCache:
    """(node id, frame, fingerprint) -> (outputs, effects). In-memory."""

    def __init__(self):
        self._entries: dict[tuple, tuple] = {}
        self.hits = 0
        self.misses = 0

    def get(self, node_id: int, frame: int, fp: str):
        entry = self._entries.get((node_id, frame, fp))
        if entry is None:
            self.misses += 1
        else:
            self.hits += 1
        return entry

    def put(self, node_id: int, frame: int, fp: str,
            outputs: dict, effects: tuple) -> None:
        self._entries[(node_id, frame, fp)] = (outputs, effects)

    def clear(self) -> None:
        self._entries.clear()
        self.hits = self.misses = 0

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class ExecutionSettings:
    """Per-run knobs beyond what the graph document carries."""

    use_cache: bool = True
    continue_on_error: bool = False
    on_frame: object = None      # callable(frame_index, FrameReport, scalars)
    should_stop: object = None   # callable() -> bool, checked between frames


class Engine:
    """Executes graphs over one trajectory; owns store, scene, and cache."""

    def __init__(self, trajectory, cache: RunCache | None = None):
        self.trajectory = trajectory
        self.cache = cache if cache is not None else RunCache()
        self.store = AttributeStore(trajectory.atom_count)
        self.scene = SceneState()
        self._traj_identity = trajectory_identity(trajectory)

    # -- plumbing -------------------------------------------------------

    def frame_list(self, graph: Graph) -> list[int]:
        """Frame visit order the graph's run options resolve to."""
        count = self.trajectory.frame_count
        frames = graph.run_options.frames
        if frames is None:
            a, b = 0, count
        else:
            a, b = frames
            b = count if b is None else b
        if not (0 <= a <= b <= count):
            raise IndexOutOfRange(
                f"frame range [{a}, {b}) outside trajectory of {count} frames")
        order = list(range(a, b))
        if graph.run_options.direction == "backward":
            order.reverse()
        return order

    def _seed_cursor(self, init_attributes: dict) -> dict[str, np.ndarray]:
        cursor: dict[str, np.ndarray] = {}
        n = self.store.n_atoms
        for name, value in (init_attributes or {}).items():
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                arr = np.full(n, float(value))
            else:
                arr = np.asarray(value, dtype=np.float64)
                if arr.shape != (n,):
                    raise LengthMismatch(
                        f"init attribute {name!r}: expected {n} values, got {arr.shape}")
            arr.flags.writeable = False
            cursor[name] = arr
        return cursor

    def _apply_effects(self, effects, frame_index: int, delta: SceneDelta,
                       cursor: dict, plot_buffer: list, node_id: int) -> None:
        for effect in effects:
            tag = effect[0]
            if tag == "attr":
                _, name, values = effect
                self.store.write(name, frame_index, values)
                cursor[name] = self.store.read(name, frame_index)[0]
            elif tag == "color":
                _, indices, rgba = effect
                for atom, row in zip(indices, rgba):
                    delta.set_color(atom, row)
            elif tag == "visible":
                _, indices, flags = effect
                for atom, flag in zip(indices, flags):
                    delta.set_visible(atom, flag)
            elif tag == "radius":
                _, indices, scales = effect
                for atom, scale in zip(indices, scales):
                    delta.set_radius(atom, scale)
            elif tag == "bonds":
                _, pairs = effect
                for i, j in pairs:
                    delta.add_bond(i, j)
            elif tag == "camera":
                delta.set_camera(effect[1])
            elif tag == "plot":
                plot_buffer.append((node_id, effect[1]))

    def _commit_plots(self, graph: Graph, plots: dict, plot_buffer: list) -> dict:
        """Apply one successful frame's buffered plot effects; returns the
        scalar appends for progress reporting."""
        scalars = {}
        for node_id, payload in plot_buffer:
            series = plots.get(node_id)
            if series is None:
                params = graph.nodes[node_id].params
                label = params.get("label") or str(node_id)
                mode = params.get("mode", "lines_accumulate")
                series = plots[node_id] = PlotSeries(node_id, label, mode)
            if payload[0] == "append":
                _, x, y = payload
                series.points.append((float(x), float(y)))
                scalars[series.label] = float(y)
            else:
                series.points = [(float(x), float(y)) for x, y in payload[1]]
        return scalars

    # -- execution --------------------------------------------------------

    def run(self, graph: Graph, settings: ExecutionSettings | None = None) -> RunResult:
        settings = settings or ExecutionSettings()
        problems = graph.validate()
        if problems:
            raise BadGraph("; ".join(p["message"] for p in problems))
        order = graph.topo_order()
        frames = self.frame_list(graph)
        incoming = {node_id: graph.incoming(node_id) for node_id in graph.nodes}

        # a re-run must not read its predecessor's slots as frame data
        write_set = sorted({name for node in graph.nodes.values()
                            for name in node.kind.attr_writes(node.params)})
        for name in write_set:
            self.store.clear_range(name, frames)

        cursor = self._seed_cursor(graph.run_options.init_attributes or {})
        plots: dict[int, PlotSeries] = {}
        reports: list[FrameReport] = []
        hosts: dict[int, object] = {}
        stopped = False
        try:
            for k in frames:
                if settings.should_stop is not None and settings.should_stop():
                    stopped = True
                    break
                report = self._run_frame(graph, order, incoming, k, cursor,
                                         plots, hosts, settings)
                reports.append(report)
                if report.error is not None and not settings.continue_on_error:
                    break
        finally:
            for host in hosts.values():
                host.close()
        return RunResult(frames=[r.frame for r in reports], reports=reports,
                         plots=plots, store=self.store, scene=self.scene,
                         stopped=stopped)

    def _host_for(self, node, hosts: dict):
        host = hosts.get(node.id)
        if host is None:
            from ..scripting.host import NodeHandle
            host = NodeHandle(node.kind.manifest, node.kind.command)
            hosts[node.id] = host
        return host

    def _run_frame(self, graph: Graph, order: list[int], incoming: dict,
                   k: int, cursor: dict, plots: dict, hosts: dict,
                   settings: ExecutionSettings) -> FrameReport:
        from ..nodes.base import NodeContext

        t0 = time.perf_counter()
        frame = self.trajectory.load_frame(k)
        if frame.n_atoms != self.store.n_atoms:
            raise InconsistentAtomCount(
                f"frame {k} has {frame.n_atoms} atoms, expected {self.store.n_atoms}")
        for name, values in frame.attributes.items():
            if not self.store.read(name, k)[1]:
                self.store.write(name, k, values)

        delta = SceneDelta(k)
        plot_buffer: list = []
        outputs_by_port: dict[tuple[int, str], Tensor] = {}
        report = FrameReport(frame=k, ok=True)

        for node_id in order:
            node = graph.nodes[node_id]
            ctx = NodeContext(frame, k, self.store,
                              pending_visibility=delta.visible, cursor=cursor)
            try:
                if node.kind.name == "script":
                    ctx.script_host = self._host_for(node, hosts)
                inputs = {}
                for port_name in node.inputs:
                    conn = incoming[node_id].get(port_name)
                    if conn is not None:
                        inputs[port_name] = outputs_by_port[(conn.src, conn.src_port)]
                n0 = time.perf_counter()
                cache_entry = None
                fp = None
                if settings.use_cache and node.kind.cacheable:
                    env = node.kind.env_reads(ctx, node.params)
                    fp = fingerprint_inputs(node.kind.identity(), node.params,
                                            inputs, env, self._traj_identity)
                    cache_entry = self.cache.get(node_id, k, fp)
                if cache_entry is not None:
                    outputs, effects = cache_entry
                    report.cached += 1
                else:
                    outputs = node.kind.run(ctx, inputs, node.params)
                    effects = tuple(ctx.effects)
                    if fp is not None:
                        self.cache.put(node_id, k, fp, outputs, effects)
                self._apply_effects(effects, k, delta, cursor, plot_buffer,
                                    node_id)
                report.node_timings[node_id] = (
                    report.node_timings.get(node_id, 0.0)
                    + time.perf_counter() - n0)
                report.executed += 1
                for name, tensor in outputs.items():
                    outputs_by_port[(node_id, name)] = tensor
            except EngineError as exc:
                message = str(exc)
                report.ok = False
                report.error = {"node": node_id, "code": type(exc).__name__,
                                "message": message}
                break

        if report.ok:
            self.scene.commit(delta)
            scalars = self._commit_plots(graph, plots, plot_buffer)
        else:
            scalars = {}
        report.duration = time.perf_counter() - t0
        if settings.on_frame is not None:
            settings.on_frame(k, report, scalars)
        return report
