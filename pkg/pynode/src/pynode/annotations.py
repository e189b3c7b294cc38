"""Port annotations: the comment lines that declare a script's interface.

One annotation per comment line::

    <leader> @av (in|out|param) <name> : (i64|f64) [rank]
    <leader> @av stateful

``<leader>`` is ``#`` for python, ``//`` for cpp, ``!`` for fortran; the
bracketed rank may be omitted (scalar). Every port annotation must be
followed by at least one non-blank line — the declaration it describes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

LEADERS = {"python": "#", "cpp": "//", "fortran": "!"}

_DECL = re.compile(
    r"^(in|out|param)\s+([A-Za-z_]\w*)\s*:\s*(i64|f64)\s*(\[\s*\d+\s*\])?$"
)


class AnnotationError(Exception):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Port:
    direction: str
    name: str
    dtype: str
    rank: int

    def to_dict(self) -> dict:
        return {"direction": self.direction, "name": self.name,
                "dtype": self.dtype, "rank": self.rank}


@dataclass(frozen=True)
class Manifest:
    name: str
    language: str
    ports: tuple[Port, ...]
    stateful: bool

    def select(self, direction: str) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.direction == direction)

    @property
    def inputs(self) -> tuple[Port, ...]:
        return self.select("in")

    @property
    def outputs(self) -> tuple[Port, ...]:
        return self.select("out")

    @property
    def params(self) -> tuple[Port, ...]:
        return self.select("param")

    def to_dict(self) -> dict:
        return {"name": self.name, "language": self.language,
                "ports": [p.to_dict() for p in self.ports],
                "stateful": self.stateful}


def _annotation_bodies(source: str, language: str):
    """(line number, body text) for every annotation marker line."""
    leader = LEADERS[language]
    marker = re.compile(rf"^\s*{re.escape(leader)}\s*@av\b\s*(.*)$")
    for lineno, text in enumerate(source.splitlines(), start=1):
        hit = marker.match(text)
        if hit is not None:
            yield lineno, hit.group(1).strip()


def parse_annotations(source: str, language: str = "python",
                      name: str = "") -> Manifest:
    if language not in LEADERS:
        raise AnnotationError(f"unknown language {language!r}")
    lines = source.splitlines()
    ports: list[Port] = []
    taken: set[str] = set()
    stateful = False
    for lineno, body in _annotation_bodies(source, language):
        if body == "stateful":
            stateful = True
            continue
        decl = _DECL.match(body)
        if decl is None:
            raise AnnotationError(f"cannot parse annotation {body!r}", lineno)
        direction, port, dtype, rank = decl.groups()
        if port in taken:
            raise AnnotationError(f"port {port!r} declared twice", lineno)
        taken.add(port)
        if not any(rest.strip() for rest in lines[lineno:]):
            raise AnnotationError(
                f"annotation for {port!r} is not followed by a declaration",
                lineno)
        ports.append(Port(direction, port, dtype,
                          int(rank.strip("[] \t")) if rank else 0))
    manifest = Manifest(name=name, language=language, ports=tuple(ports),
                        stateful=stateful)
    if not manifest.outputs:
        raise AnnotationError(
            f"script {name or '<source>'} declares no out ports")
    return manifest


def binding_lines(source: str, language: str = "python") -> dict[str, int]:
    """1-based line number of the declaration under each port annotation.

    The host overwrites exactly these lines when it injects input and param
    values, so tracebacks keep the script's original line numbers.
    """
    lines = source.splitlines()
    found: dict[str, int] = {}
    for lineno, body in _annotation_bodies(source, language):
        decl = _DECL.match(body)
        if decl is None:
            continue
        for offset, rest in enumerate(lines[lineno:], start=lineno + 1):
            if rest.strip():
                found[decl.group(2)] = offset
                break
    return found
