"""In-memory sessions: each holds one trajectory, one engine (whose cache
and scene persist across runs, making scrubbing and re-runs cheap), and the
current graph document. Runs execute on a worker thread; every state
transition happens under the session lock, and events are fanned out to
websocket subscriber queues via their owning event loops.
"""

from __future__ import annotations

import asyncio
import itertools
import threading

from .. import runner
from ..errors import EngineError
from ..graph.engine import Engine, RunResult
from ..graph.model import Graph, graph_from_json
from ..io import open_trajectory


class Subscriber:
    """One websocket's event queue, bound to the loop that drains it."""

    def __init__(self, loop: asyncio.AbstractEventLoop):
        self.queue: asyncio.Queue = asyncio.Queue()
        self.loop = loop


class GraphInvalid(Exception):
    """A run was requested while the stored graph has diagnostics."""

    def __init__(self, diagnostics: list[dict]):
        super().__init__("graph has diagnostics")
        self.diagnostics = diagnostics


class Busy(Exception):
    """The session is running; the operation needs an idle session."""


class Session:
    def __init__(self, session_id: str, trajectory_path: str):
        self.id = session_id
        self.trajectory_path = trajectory_path
        self.trajectory = open_trajectory(trajectory_path)
        self.engine = Engine(self.trajectory)
        self.graph_doc: dict = {"nodes": [], "connections": []}
        self.lock = threading.RLock()
        self.state = "idle"  # idle | running | error
        self.run_id: str | None = None
        self.frames_done = 0
        self.frames_total = 0
        self.last_error: dict | None = None
        self.result: RunResult | None = None
        self.plots: dict = {}
        self.stop_event = threading.Event()
        self.worker: threading.Thread | None = None
        self._run_counter = itertools.count(1)
        self._subscribers: list[Subscriber] = []

    # -- events ----------------------------------------------------------

    def subscribe(self, loop: asyncio.AbstractEventLoop) -> Subscriber:
        sub = Subscriber(loop)
        with self.lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        with self.lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def publish(self, event: dict) -> None:
        with self.lock:
            subs = list(self._subscribers)
        for sub in subs:
            sub.loop.call_soon_threadsafe(sub.queue.put_nowait, event)

    # -- state -----------------------------------------------------------

    @property
    def running(self) -> bool:
        with self.lock:
            return self.state == "running"

    def status(self) -> dict:
        with self.lock:
            return {"state": self.state, "run": self.run_id,
                    "frame": self.frames_done if self.state == "running" else None,
                    "total": self.frames_total if self.state == "running" else None,
                    "error": self.last_error}

    def put_graph(self, doc: dict) -> list[dict]:
        """Store a graph document; structural problems raise EngineError,
        per-port diagnostics (unconnected inputs) are returned."""
        with self.lock:
            if self.state == "running":
                raise Busy("graph edits are rejected while running")
            graph = graph_from_json(doc)
            diagnostics = graph.validate()
            self.graph_doc = doc
            return diagnostics

    # -- runs --------------------------------------------------------------

    def start_run(self, frames: str | None, direction: str | None,
                  use_cache: bool, continue_on_error: bool,
                  out_dir: str | None) -> tuple[str, int]:
        with self.lock:
            if self.state == "running":
                raise Busy("a run is already in progress")
            graph = graph_from_json(self.graph_doc)
            runner.apply_overrides(graph, frames=frames, direction=direction)
            problems = graph.validate()
            if problems:
                raise GraphInvalid(problems)
            visit = self.engine.frame_list(graph)
            run_id = f"r{next(self._run_counter)}"
            self.state = "running"
            self.run_id = run_id
            self.frames_done = 0
            self.frames_total = len(visit)
            self.last_error = None
            self.stop_event.clear()
            self.worker = threading.Thread(
                target=self._run_worker, name=f"run-{self.id}-{run_id}",
                args=(graph, run_id, use_cache, continue_on_error, out_dir),
                daemon=True)
            self.worker.start()
            return run_id, len(visit)

    def _run_worker(self, graph: Graph, run_id: str, use_cache: bool,
                    continue_on_error: bool, out_dir: str | None) -> None:
        self.publish({"type": "run_started", "run": run_id,
                      "frames": self.frames_total,
                      "direction": graph.run_options.direction})

        def on_frame(k, report, scalars):
            with self.lock:
                self.frames_done += 1
            if report.ok:
                self.publish({"type": "frame_done", "frame": k,
                              "scalars": scalars})
            else:
                err = report.error
                self.publish({"type": "node_error", "frame": k,
                              "node": err["node"], "code": err["code"],
                              "message": err["message"]})

        try:
            result = runner.run_graph(
                self.engine, graph, use_cache=use_cache,
                continue_on_error=continue_on_error, out_dir=out_dir,
                on_frame=on_frame, should_stop=self.stop_event.is_set)
            summary = {"ok": result.ok, "stopped": result.stopped,
                       "frames": len(result.frames),
                       "errors": result.errors,
                       "cache": {"hits": self.engine.cache.hits,
                                 "misses": self.engine.cache.misses}}
            with self.lock:
                self.result = result
                self.plots = result.plots
                self.last_error = result.errors[0] if result.errors else None
                self.state = "error" if result.errors else "idle"
        except EngineError as exc:
            error = {"code": type(exc).__name__, "message": str(exc)}
            summary = {"ok": False, "stopped": False,
                       "frames": self.frames_done, "errors": [error]}
            with self.lock:
                self.last_error = error
                self.state = "error"
        self.publish({"type": "run_finished", "run": run_id,
                      "summary": summary})

    def request_stop(self) -> bool:
        with self.lock:
            if self.state != "running":
                return False
            self.stop_event.set()
            return True

    def shutdown(self, timeout: float = 5.0) -> None:
        self.stop_event.set()
        worker = self.worker
        if worker is not None and worker.is_alive():
            worker.join(timeout)


class SessionManager:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._counter = itertools.count(1)
        self._lock = threading.Lock()

    def create(self, trajectory_path: str) -> Session:
        session = Session(f"s{next(self._counter)}", trajectory_path)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            return self._sessions.get(session_id)

    def shutdown(self) -> None:
        with self._lock:
            sessions = list(self._sessions.values())
        for session in sessions:
            session.shutdown()
