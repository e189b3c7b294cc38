"""Comment-annotation parsing: ports are declared next to the variables.

Grammar, one annotation per comment line::

    <leader> @av (in|out|param) <name> : (i64|f64) [rank]
    <leader> @av stateful

where <leader> is ``#`` for python, ``//`` for cpp, ``!`` for fortran.
``[rank]`` may be omitted (rank 0). The annotated declaration is the next
non-blank line; an annotation with nothing after it is malformed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import BadAnnotation, DuplicatePort, NoOutputs

LEADERS = {"python": "#", "cpp": "//", "fortran": "!"}

_BODY = re.compile(
    r"(in|out|param)\s+([A-Za-z_]\w*)\s*:\s*(i64|f64)\s*(?:\[\s*(\d+)\s*\])?\s*"
)


@dataclass(frozen=True)
class PortDecl:
    direction: str  # in | out | param
    name: str
    dtype: str  # i64 | f64
    rank: int

    def to_dict(self) -> dict:
        return {"direction": self.direction, "name": self.name,
                "dtype": self.dtype, "rank": self.rank}

    @classmethod
    def from_dict(cls, d: dict) -> "PortDecl":
        return cls(str(d["direction"]), str(d["name"]),
                   str(d["dtype"]), int(d["rank"]))


@dataclass(frozen=True)
class PortManifest:
    name: str
    language: str
    ports: tuple[PortDecl, ...] = ()
    stateful: bool = False

    def by_direction(self, direction: str) -> tuple[PortDecl, ...]:
        return tuple(p for p in self.ports if p.direction == direction)

    @property
    def inputs(self) -> tuple[PortDecl, ...]:
        return self.by_direction("in")

    @property
    def outputs(self) -> tuple[PortDecl, ...]:
        return self.by_direction("out")

    @property
    def params(self) -> tuple[PortDecl, ...]:
        return self.by_direction("param")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "language": self.language,
            "ports": [p.to_dict() for p in self.ports],
            "stateful": self.stateful,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PortManifest":
        return cls(
            name=str(d.get("name", "")),
            language=str(d.get("language", "")),
            ports=tuple(PortDecl.from_dict(p) for p in d.get("ports", [])),
            stateful=bool(d.get("stateful", False)),
        )

    def compatible_with(self, other: "PortManifest") -> bool:
        """Port sequence and statefulness must agree; names are informative."""
        return self.ports == other.ports and self.stateful == other.stateful


def parse_annotations(source: str, language: str, name: str = "") -> PortManifest:
    if language not in LEADERS:
        raise BadAnnotation(f"unknown language {language!r}")
    leader = LEADERS[language]
    marker = re.compile(rf"^\s*{re.escape(leader)}\s*@av\b\s*(.*)$")
    lines = source.splitlines()
    ports: list[PortDecl] = []
    seen: set[str] = set()
    stateful = False
    for lineno, raw in enumerate(lines, start=1):
        m = marker.match(raw)
        if m is None:
            continue
        body = m.group(1).strip()
        if body == "stateful":
            stateful = True
            continue
        decl = _BODY.fullmatch(body)
        if decl is None:
            raise BadAnnotation(f"cannot parse annotation {body!r}", line=lineno)
        direction, port_name, dtype, rank = decl.groups()
        if port_name in seen:
            raise DuplicatePort(f"port {port_name!r} declared twice", line=lineno)
        seen.add(port_name)
        if not _has_following_declaration(lines, lineno):
            raise BadAnnotation(
                f"annotation for {port_name!r} is not followed by a declaration",
                line=lineno,
            )
        ports.append(PortDecl(direction, port_name, dtype,
                              int(rank) if rank is not None else 0))
    manifest = PortManifest(name=name, language=language,
                            ports=tuple(ports), stateful=stateful)
    if not manifest.outputs:
        raise NoOutputs(f"script {name or '<source>'} declares no out ports")
    return manifest


def _has_following_declaration(lines: list[str], lineno: int) -> bool:
    for nxt in lines[lineno:]:
        if nxt.strip():
            return True
    return False


def declaration_lines(source: str, language: str) -> dict[str, int]:
    """1-based line number of each annotated port's declaration line.

    Hosts that bind values into the script replace exactly these lines, so
    error tracebacks keep the original line numbers.
    """
    leader = LEADERS[language]
    marker = re.compile(rf"^\s*{re.escape(leader)}\s*@av\b\s*(.*)$")
    lines = source.splitlines()
    out: dict[str, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        m = marker.match(raw)
        if m is None:
            continue
        decl = _BODY.fullmatch(m.group(1).strip())
        if decl is None:
            continue
        name = decl.group(2)
        for ahead, nxt in enumerate(lines[lineno:], start=lineno + 1):
            if nxt.strip():
                out[name] = ahead
                break
    return out
