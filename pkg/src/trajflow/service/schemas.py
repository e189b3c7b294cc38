"""Request/response bodies for the HTTP API.

Error responses share one flat shape: {code, message, node?, frame?},
optionally extended with a diagnostics list for graph validation failures.
"""

from __future__ import annotations

from pydantic import BaseModel


class SessionCreate(BaseModel):
    trajectory: str


class SessionInfo(BaseModel):
    session: str
    trajectory: str
    frame_count: int
    atom_count: int


class SessionStatus(BaseModel):
    state: str  # idle | running | error
    run: str | None = None
    frame: int | None = None  # frames finished so far
    total: int | None = None
    error: dict | None = None


class Diagnostic(BaseModel):
    node: int | None = None
    code: str
    message: str


class GraphPutResult(BaseModel):
    ok: bool
    diagnostics: list[Diagnostic]


class RunRequest(BaseModel):
    frames: str | None = None  # "a:b", overriding the graph's run section
    direction: str | None = None
    use_cache: bool = True
    continue_on_error: bool = False
    out_dir: str | None = None  # write the artifact directory, as `cli run --out`


class RunStarted(BaseModel):
    run: str
    frames: int


class StopResult(BaseModel):
    stopping: bool


class AttrValues(BaseModel):
    name: str
    frame: int
    defined: bool
    values: list[float]


class ErrorBody(BaseModel):
    code: str
    message: str
    node: int | None = None
    frame: int | None = None
