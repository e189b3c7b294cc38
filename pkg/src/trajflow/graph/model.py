"""Graph structure: nodes with typed ports, connections, validation, and the
JSON interchange format shared by CLI, service, and UI.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass

from ..errors import (BadGraph, BadParam, CycleDetected, EngineError,
                      PortOccupied, RankMismatch, TypeMismatch, UnknownKind,
                      UnknownNode, UnknownPort)
from ..nodes import NodeKind, PortSpec, ScriptKind, resolve_kind
from ..nodes.base import ports_compatible

DIRECTIONS = ("forward", "backward")


@dataclass(frozen=True)
class Connection:
    src: int
    src_port: str
    dst: int
    dst_port: str

    def to_json(self) -> dict:
        return {"from": f"{self.src}.{self.src_port}",
                "to": f"{self.dst}.{self.dst_port}"}


class Node:
    """One placed node: id, kind (resolved), params, and its port signature."""

    def __init__(self, node_id: int, kind: NodeKind, params: dict,
                 kind_spec=None):
        self.id = int(node_id)
        self.kind = kind
        self.params = dict(params)
        # the JSON form of the kind: builtin name or {"script": {...}}
        self.kind_spec = kind_spec if kind_spec is not None else kind.name
        inputs, outputs = kind.ports(self.params)
        self.inputs: dict[str, PortSpec] = {p.name: p for p in inputs}
        self.outputs: dict[str, PortSpec] = {p.name: p for p in outputs}

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind_spec, "params": dict(self.params)}


@dataclass
class RunOptions:
    """Execution options carried in the graph document's `run` section."""

    frames: tuple[int, int | None] | None = None  # half-open [a, b); None = all
    direction: str = "forward"
    init_attributes: dict | None = None

    def to_json(self) -> dict:
        doc: dict = {"direction": self.direction}
        if self.frames is not None:
            a, b = self.frames
            doc["frames"] = f"{a}:{'' if b is None else b}"
        if self.init_attributes:
            doc["init_attributes"] = dict(self.init_attributes)
        return doc


def parse_frames(text: str) -> tuple[int, int | None]:
    """'a:b' -> half-open [a, b); either side may be empty (0 / trajectory end)."""
    parts = text.split(":")
    if len(parts) != 2:
        raise BadParam(f"frame range must be 'a:b', got {text!r}")
    try:
        a = int(parts[0]) if parts[0] else 0
        b = int(parts[1]) if parts[1] else None
    except ValueError:
        raise BadParam(f"frame range must be 'a:b', got {text!r}") from None
    return a, b


class Graph:
    """Mutable node graph; every mutation leaves it acyclic."""

    def __init__(self):
        self.nodes: dict[int, Node] = {}
        self.connections: list[Connection] = []
        self.run_options = RunOptions()
        self._next_id = 1

    # -- construction --------------------------------------------------

    def add_node(self, kind: str | NodeKind, params: dict | None = None,
                 node_id: int | None = None, kind_spec=None) -> Node:
        if node_id is None:
            node_id = self._next_id
        node_id = int(node_id)
        if node_id in self.nodes:
            raise BadGraph(f"duplicate node id {node_id}")
        resolved = resolve_kind(kind) if isinstance(kind, str) else kind
        node = Node(node_id, resolved, params or {}, kind_spec=kind_spec)
        self.nodes[node_id] = node
        self._next_id = max(self._next_id, node_id + 1)
        return node

    def node(self, node_id: int) -> Node:
        try:
            return self.nodes[int(node_id)]
        except KeyError:
            raise UnknownNode(f"no node with id {node_id}") from None

    def _resolve(self, endpoint, port: str | None, direction: str):
        """Accept ('3.port') strings or (node_id, 'port') argument pairs."""
        if port is None:
            text = str(endpoint)
            node_text, _, port = text.partition(".")
            if not port:
                raise UnknownPort(f"endpoint {text!r} must be 'node.port'")
            try:
                node_id = int(node_text)
            except ValueError:
                raise UnknownNode(f"bad node id in endpoint {text!r}") from None
        else:
            node_id = int(endpoint)
        node = self.node(node_id)
        table = node.outputs if direction == "out" else node.inputs
        if port not in table:
            raise UnknownPort(
                f"node {node_id} ({node.kind.name}) has no "
                f"{'output' if direction == 'out' else 'input'} port {port!r}")
        return node, port, table[port]

    def connect(self, src, dst, src_port: str | None = None,
                dst_port: str | None = None) -> Connection:
        """Add one edge out-port -> in-port; rejects incompatible types,
        occupied inputs, and anything that would close a cycle."""
        src_node, src_port, out_spec = self._resolve(src, src_port, "out")
        dst_node, dst_port, in_spec = self._resolve(dst, dst_port, "in")
        for conn in self.connections:
            if conn.dst == dst_node.id and conn.dst_port == dst_port:
                raise PortOccupied(
                    f"input {dst_node.id}.{dst_port} already connected")
        dtype_ok, shape_ok = ports_compatible(out_spec, in_spec)
        if not dtype_ok:
            raise TypeMismatch(
                f"{src_node.id}.{src_port} is {out_spec.describe()}, "
                f"{dst_node.id}.{dst_port} wants {in_spec.describe()}")
        if not shape_ok:
            raise RankMismatch(
                f"{src_node.id}.{src_port} is {out_spec.describe()}, "
                f"{dst_node.id}.{dst_port} wants {in_spec.describe()}")
        conn = Connection(src_node.id, src_port, dst_node.id, dst_port)
        self.connections.append(conn)
        try:
            self.topo_order()
        except CycleDetected:
            self.connections.pop()
            raise
        return conn

    def disconnect(self, dst, dst_port: str | None = None) -> None:
        dst_node, dst_port, _ = self._resolve(dst, dst_port, "in")
        for i, conn in enumerate(self.connections):
            if conn.dst == dst_node.id and conn.dst_port == dst_port:
                del self.connections[i]
                return
        raise UnknownPort(f"input {dst_node.id}.{dst_port} is not connected")

    # -- queries ---------------------------------------------------------

    def incoming(self, node_id: int) -> dict[str, Connection]:
        return {c.dst_port: c for c in self.connections if c.dst == node_id}

    def topo_order(self) -> list[int]:
        """Kahn's algorithm; ready set drained in ascending node id."""
        indegree = {node_id: 0 for node_id in self.nodes}
        succ: dict[int, list[int]] = {node_id: [] for node_id in self.nodes}
        for conn in self.connections:
            indegree[conn.dst] += 1
            succ[conn.src].append(conn.dst)
        ready = [node_id for node_id, deg in indegree.items() if deg == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            node_id = heapq.heappop(ready)
            order.append(node_id)
            for nxt in succ[node_id]:
                indegree[nxt] -= 1
                if indegree[nxt] == 0:
                    heapq.heappush(ready, nxt)
        if len(order) != len(self.nodes):
            cyclic = sorted(n for n, d in indegree.items() if d > 0)
            raise CycleDetected(f"cycle through nodes {cyclic}")
        return order

    def validate(self) -> list[dict]:
        """Structural diagnostics: unconnected required inputs. Connection
        type errors cannot exist here (connect() rejects them)."""
        diagnostics = []
        for node_id, node in sorted(self.nodes.items()):
            wired = self.incoming(node_id)
            for name, spec in node.inputs.items():
                if name not in wired and not spec.optional:
                    diagnostics.append({
                        "node": node_id,
                        "code": "UnconnectedInput",
                        "message": f"input {node_id}.{name} is not connected",
                    })
        return diagnostics

    # -- interchange -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "nodes": [node.to_json() for _, node in sorted(self.nodes.items())],
            "connections": [c.to_json() for c in self.connections],
            "run": self.run_options.to_json(),
        }


def _resolve_kind_spec(spec, base_dir: str | None):
    if isinstance(spec, str):
        return resolve_kind(spec), spec
    if isinstance(spec, dict) and set(spec) == {"script"}:
        body = spec["script"]
        if not isinstance(body, dict):
            raise BadParam("script kind must be an object")
        language = body.get("language")
        path = body.get("path")
        if not isinstance(language, str) or not isinstance(path, str):
            raise BadParam("script kind needs string 'language' and 'path'")
        command = body.get("command")
        kind = ScriptKind(language, path, command, base_dir=base_dir)
        return kind, {"script": dict(body)}
    raise UnknownKind(f"unrecognized node kind {spec!r}")


def graph_from_json(doc: dict, base_dir: str | None = None) -> Graph:
    """Build a graph from its document form. Unknown top-level keys (e.g.
    editor-only 'ui' data) are ignored."""
    if not isinstance(doc, dict):
        raise BadGraph("graph document must be a JSON object")
    graph = Graph()
    nodes = doc.get("nodes", [])
    if not isinstance(nodes, list):
        raise BadGraph("'nodes' must be a list")
    for entry in nodes:
        if not isinstance(entry, dict) or "id" not in entry or "kind" not in entry:
            raise BadGraph(f"node entries need 'id' and 'kind': {entry!r}")
        params = entry.get("params", {})
        if not isinstance(params, dict):
            raise BadGraph(f"node {entry['id']}: params must be an object")
        kind, kind_spec = _resolve_kind_spec(entry["kind"], base_dir)
        graph.add_node(kind, params, node_id=entry["id"], kind_spec=kind_spec)
    connections = doc.get("connections", [])
    if not isinstance(connections, list):
        raise BadGraph("'connections' must be a list")
    for entry in connections:
        if not isinstance(entry, dict) or "from" not in entry or "to" not in entry:
            raise BadGraph(f"connections need 'from' and 'to': {entry!r}")
        graph.connect(entry["from"], entry["to"])
    run = doc.get("run", {})
    if run is not None and not isinstance(run, dict):
        raise BadGraph("'run' must be an object")
    if run:
        direction = run.get("direction", "forward")
        if direction not in DIRECTIONS:
            raise BadParam(f"direction must be forward|backward, got {direction!r}")
        frames = run.get("frames")
        frame_range = parse_frames(frames) if isinstance(frames, str) else None
        init = run.get("init_attributes") or {}
        if not isinstance(init, dict):
            raise BadParam("init_attributes must be an object")
        graph.run_options = RunOptions(frames=frame_range, direction=direction,
                                       init_attributes=dict(init))
    return graph


def graph_from_text(text: str, base_dir: str | None = None) -> Graph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadGraph(f"graph is not valid JSON: {exc}") from exc
    return graph_from_json(doc, base_dir=base_dir)


def collect_diagnostics(doc: dict, base_dir: str | None = None) -> list[dict]:
    """All problems graph_from_json would raise, as a list instead of an
    exception, plus structural validation of the built graph."""
    try:
        graph = graph_from_json(doc, base_dir=base_dir)
    except EngineError as exc:
        return [{"node": None, "code": type(exc).__name__, "message": str(exc)}]
    return graph.validate()
