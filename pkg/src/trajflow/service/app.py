"""HTTP + websocket transport over the engine.

The API adds no semantics: every endpoint is a thin call into the library
(sessions, runner, scene, store), and error bodies carry the library's
error class names. Event delivery per session is totally ordered because
the run worker publishes sequentially; only the sender task writes to a
websocket, so scrub replies cannot interleave with run events.
"""

from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response

from .. import __version__
from ..errors import EngineError, SourceReadError, UnknownFormat
from ..nodes import KINDS
from ..runner import plot_csv_text
from ..scene import snapshot_document
from .schemas import (AttrValues, GraphPutResult, RunRequest, RunStarted,
                      SessionCreate, SessionInfo, SessionStatus, StopResult)
from .sessions import Busy, GraphInvalid, Session, SessionManager


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, **extra):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.extra = {k: v for k, v in extra.items() if v is not None}


def _engine_error_status(exc: EngineError) -> int:
    # 400 for unreadable inputs; 422 for everything the engine rejects.
    # Missing URL resources (session, frame, plot) get explicit 404s.
    if isinstance(exc, (UnknownFormat, SourceReadError)):
        return 400
    return 422


def create_app(ui_dir: str | None = None) -> FastAPI:
    manager = SessionManager()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.shutdown()

    app = FastAPI(title="trajflow", version=__version__, lifespan=lifespan)
    app.state.sessions = manager

    @app.exception_handler(ApiError)
    async def _api_error(request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message, **exc.extra}
        return JSONResponse(status_code=exc.status, content=body)

    @app.exception_handler(EngineError)
    async def _engine_error(request, exc: EngineError):
        body = {"code": type(exc).__name__, "message": str(exc)}
        return JSONResponse(status_code=_engine_error_status(exc), content=body)

    @app.exception_handler(Busy)
    async def _busy(request, exc: Busy):
        return JSONResponse(status_code=409,
                            content={"code": "Busy", "message": str(exc)})

    @app.exception_handler(GraphInvalid)
    async def _graph_invalid(request, exc: GraphInvalid):
        return JSONResponse(
            status_code=422,
            content={"code": "BadGraph", "message": "graph has diagnostics",
                     "diagnostics": exc.diagnostics})

    def _session(session_id: str) -> Session:
        session = manager.get(session_id)
        if session is None:
            raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
        return session

    def _check_frame(session: Session, k: int) -> None:
        if not 0 <= k < session.trajectory.frame_count:
            raise ApiError(
                404, "IndexOutOfRange",
                f"frame {k} outside trajectory of "
                f"{session.trajectory.frame_count} frames", frame=k)

    # -- sessions ---------------------------------------------------------

    @app.post("/api/session", response_model=SessionInfo)
    def create_session(body: SessionCreate):
        session = manager.create(body.trajectory)
        return SessionInfo(session=session.id, trajectory=body.trajectory,
                           frame_count=session.trajectory.frame_count,
                           atom_count=session.trajectory.atom_count)

    @app.get("/api/session/{session_id}", response_model=SessionStatus)
    def session_status(session_id: str):
        return SessionStatus(**_session(session_id).status())

    # -- graph -------------------------------------------------------------

    @app.get("/api/session/{session_id}/graph")
    def get_graph(session_id: str):
        return _session(session_id).graph_doc

    @app.put("/api/session/{session_id}/graph", response_model=GraphPutResult)
    def put_graph(session_id: str, doc: dict):
        diagnostics = _session(session_id).put_graph(doc)
        return GraphPutResult(ok=not diagnostics, diagnostics=diagnostics)

    # -- runs ---------------------------------------------------------------

    @app.post("/api/session/{session_id}/run", response_model=RunStarted)
    def start_run(session_id: str, body: RunRequest):
        run_id, total = _session(session_id).start_run(
            frames=body.frames, direction=body.direction,
            use_cache=body.use_cache,
            continue_on_error=body.continue_on_error, out_dir=body.out_dir)
        return RunStarted(run=run_id, frames=total)

    @app.post("/api/session/{session_id}/stop", response_model=StopResult)
    def stop_run(session_id: str):
        return StopResult(stopping=_session(session_id).request_stop())

    # -- results ------------------------------------------------------------

    @app.get("/api/session/{session_id}/frame/{k}/scene")
    def get_scene(session_id: str, k: int):
        session = _session(session_id)
        _check_frame(session, k)
        snap = session.engine.scene.resolve(session.trajectory, k)
        return snapshot_document(snap)

    @app.get("/api/session/{session_id}/attr/{name}/{k}",
             response_model=AttrValues)
    def get_attr(session_id: str, name: str, k: int):
        session = _session(session_id)
        _check_frame(session, k)
        values, defined = session.engine.store.read(name, k)
        return AttrValues(name=name, frame=k, defined=defined,
                          values=[float(v) for v in values])

    @app.get("/api/session/{session_id}/plot/{node}")
    def get_plot(session_id: str, node: str, format: str = "json"):
        session = _session(session_id)
        with session.lock:
            plots = dict(session.plots)
        series = None
        if node.lstrip("-").isdigit():
            series = plots.get(int(node))
        else:
            for node_id in sorted(plots):
                if plots[node_id].label == node:
                    series = plots[node_id]
                    break
        if series is None:
            raise ApiError(404, "NoPlot", f"no plot series for {node!r}")
        if format == "csv":
            return Response(content=plot_csv_text(series), media_type="text/csv")
        return series.to_json()

    # -- catalog -------------------------------------------------------------

    @app.get("/api/catalog")
    def catalog():
        kinds = []
        for name in sorted(KINDS):
            doc = (KINDS[name].__doc__ or "").strip()
            kinds.append({"name": name,
                          "summary": doc.splitlines()[0] if doc else ""})
        return {"kinds": kinds}

    # -- events ----------------------------------------------------------------

    @app.websocket("/api/session/{session_id}/events")
    async def events(ws: WebSocket, session_id: str):
        session = manager.get(session_id)
        if session is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        sub = session.subscribe(asyncio.get_running_loop())

        async def sender():
            while True:
                await ws.send_json(await sub.queue.get())

        async def receiver():
            # scrub replies go through the queue: one writer per socket
            while True:
                try:
                    msg = await ws.receive_json()
                except WebSocketDisconnect:
                    return
                if not isinstance(msg, dict) or msg.get("type") != "scrub":
                    continue
                try:
                    k = int(msg.get("frame"))
                    snap = session.engine.scene.resolve(session.trajectory, k)
                except (TypeError, ValueError, EngineError, IndexError) as exc:
                    sub.queue.put_nowait(
                        {"type": "error", "code": type(exc).__name__,
                         "message": str(exc)})
                    continue
                sub.queue.put_nowait({"type": "scene_ready", "frame": k,
                                      "has_delta": snap.has_delta})

        send_task = asyncio.create_task(sender())
        recv_task = asyncio.create_task(receiver())
        try:
            done, pending = await asyncio.wait(
                {send_task, recv_task}, return_when=asyncio.FIRST_COMPLETED)
            for task in pending:
                task.cancel()
            for task in done:
                task.exception()
        finally:
            session.unsubscribe(sub)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/")
        def root():
            return {"service": "trajflow", "version": __version__}

    return app
