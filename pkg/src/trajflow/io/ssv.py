"""The generic space-separated-values trajectory format.

Canonical layout::

    el x y z rotx roty rotz pot
    frame <natoms> <Lx> <Ly> <Lz>
    O 1.0 2.0 3.0 0.1 0.2 0.3 -5.0
    ...

The first line names each column; ``el x y z`` are recognized, every other
token declares a per-atom attribute imported at every frame. Frame blocks
start with a ``frame`` line carrying the atom count and the orthorhombic box
edges in Angstrom. Floats are written as shortest round-trip decimals.
"""

from __future__ import annotations

import logging

import numpy as np

from ..errors import BadHeader, InconsistentAtomCount, RowArity
from ..model.frame import Box, Frame
from ..model.trajectory import ByteSource, Trajectory

log = logging.getLogger(__name__)

RESERVED = ("el", "x", "y", "z")


class ColumnSpec:
    """Ordered column tokens; x/y/z mandatory, el optional, rest attributes."""

    def __init__(self, tokens):
        tokens = list(tokens)
        for coord in ("x", "y", "z"):
            if tokens.count(coord) != 1:
                raise BadHeader(f"column {coord!r} must appear exactly once")
        if tokens.count("el") > 1:
            raise BadHeader("column 'el' may appear at most once")
        attrs = [t for t in tokens if t not in RESERVED]
        if len(set(attrs)) != len(attrs):
            raise BadHeader("duplicate attribute column")
        self.tokens = tokens
        self.attributes = tuple(attrs)
        self.index = {tok: i for i, tok in enumerate(tokens)}
        self.has_el = "el" in tokens

    def __len__(self):
        return len(self.tokens)


def _fmt(value: float) -> str:
    return repr(float(value))


class _SsvSource:
    def __init__(self, path: str, spec: ColumnSpec, spans: list[tuple[int, int]]):
        self._bytes = ByteSource(path)
        self.spec = spec
        self.spans = spans

    def parse_frame(self, k: int) -> Frame:
        offset, size = self.spans[k]
        text = self._bytes.read_at(offset, size).decode("utf-8")
        lines = text.splitlines()
        head = lines[0].split()
        natoms = int(head[1])
        edges = [float(v) for v in head[2:5]]
        spec = self.spec
        positions = np.empty((natoms, 3), dtype=np.float64)
        atom_type = []
        attrs = {name: np.empty(natoms, dtype=np.float64) for name in spec.attributes}
        for i in range(natoms):
            row = lines[1 + i].split()
            positions[i, 0] = float(row[spec.index["x"]])
            positions[i, 1] = float(row[spec.index["y"]])
            positions[i, 2] = float(row[spec.index["z"]])
            atom_type.append(row[spec.index["el"]] if spec.has_el else "X")
            for name in spec.attributes:
                attrs[name][i] = float(row[spec.index[name]])
        return Frame(
            positions=positions,
            atom_type=atom_type,
            box=Box.orthorhombic(edges),
            attributes=attrs,
        )


def parse_ssv(path: str, cache_bytes: int | None = None) -> Trajectory:
    """Index an SSV file; frames are parsed lazily on load."""
    spans: list[tuple[int, int]] = []
    spec = None
    atom_count = None
    with open(path, "rb") as fh:
        header = fh.readline()
        if not header.strip():
            raise BadHeader("empty file")
        spec = ColumnSpec(header.decode("utf-8").split())
        ncols = len(spec)
        pending_start = None
        pending_rows = 0
        pending_natoms = -1
        offset = fh.tell()
        for raw in fh:
            line = raw.decode("utf-8").strip()
            if line:
                fields = line.split()
                if fields[0] == "frame":
                    if pending_start is not None:
                        raise InconsistentAtomCount(
                            f"frame block ended after {pending_rows} of {pending_natoms} rows"
                        )
                    if len(fields) != 5:
                        raise RowArity(f"frame line needs 4 values, got {len(fields) - 1}")
                    pending_natoms = int(fields[1])
                    if atom_count is None:
                        atom_count = pending_natoms
                    elif pending_natoms != atom_count:
                        raise InconsistentAtomCount(
                            f"frame {len(spans)} has {pending_natoms} atoms, expected {atom_count}"
                        )
                    pending_start = offset
                    pending_rows = 0
                    if pending_natoms == 0:
                        spans.append((pending_start, fh.tell() - pending_start))
                        pending_start = None
                else:
                    if pending_start is None:
                        raise RowArity("atom row outside a frame block")
                    if len(fields) != ncols:
                        raise RowArity(f"expected {ncols} columns, got {len(fields)}")
                    pending_rows += 1
                    if pending_rows == pending_natoms:
                        spans.append((pending_start, fh.tell() - pending_start))
                        pending_start = None
            offset = fh.tell()
        if pending_start is not None:
            log.warning("%s: dropping trailing partial frame (%d/%d rows)",
                        path, pending_rows, pending_natoms)
    if atom_count is None:
        atom_count = 0
    source = _SsvSource(path, spec, spans)
    kwargs = {} if cache_bytes is None else {"cache_bytes": cache_bytes}
    return Trajectory(
        source=source,
        frame_count=len(spans),
        atom_count=atom_count,
        attribute_names=spec.attributes,
        path=path,
        **kwargs,
    )


def write_ssv(traj: Trajectory, path: str, attrs: list[str] | None = None,
              include_el: bool | None = None) -> None:
    """Re-emit a trajectory in canonical SSV form.

    ``attrs`` selects which imported attributes to carry over (default: all,
    in the source order). ``include_el`` defaults to auto: the el column is
    written unless every atom type is the "X" placeholder.
    """
    if attrs is None:
        attrs = list(traj.attribute_names)
    if include_el is None:
        include_el = traj.frame_count > 0 and any(
            t != "X" for t in traj.load_frame(0).atom_type
        )
    tokens = (["el"] if include_el else []) + ["x", "y", "z"] + list(attrs)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(" ".join(tokens) + "\n")
        for k in range(traj.frame_count):
            frame = traj.load_frame(k)
            edges = frame.box.lengths
            fh.write(
                f"frame {frame.n_atoms} {_fmt(edges[0])} {_fmt(edges[1])} {_fmt(edges[2])}\n"
            )
            for i in range(frame.n_atoms):
                parts = [frame.atom_type[i]] if include_el else []
                parts += [_fmt(v) for v in frame.positions[i]]
                parts += [_fmt(frame.attributes[a][i]) for a in attrs]
                fh.write(" ".join(parts) + "\n")


def probe_ssv(head: bytes) -> bool:
    try:
        text = head.decode("utf-8", errors="strict")
    except UnicodeDecodeError:
        return False
    lines = text.splitlines()
    if not lines:
        return False
    tokens = lines[0].split()
    return all(c in tokens for c in ("x", "y", "z")) and len(lines) > 1 and \
        lines[1].split()[:1] == ["frame"]
