"""LAMMPS text dump reader.

Each frame is an ``ITEM: TIMESTEP / NUMBER OF ATOMS / BOX BOUNDS / ATOMS``
block. Rows are re-sorted by the mandatory ``id`` column so the atom index is
``id - 1``. Coordinates come from ``x y z`` or from scaled ``xs ys zs``
(unscaled as ``x = xlo + xs * (xhi - xlo)``). Any column other than the ids,
types and coordinates is imported as a per-atom attribute.
"""

from __future__ import annotations

import logging

import numpy as np

from ..errors import BadItemHeader, BadRecord, MissingColumn
from ..model.frame import Box, Frame
from ..model.trajectory import ByteSource, Trajectory

log = logging.getLogger(__name__)

NON_ATTRIBUTE_COLUMNS = frozenset(
    {"id", "type", "element", "x", "y", "z", "xs", "ys", "zs"}
)


def _parse_bounds(lines, start, lineno0):
    """BOX BOUNDS: 3 lines of `lo hi [tilt]`; boundary flags end the header."""
    header = lines[start].split()
    flags = header[-3:]
    periodic = tuple(f.startswith("p") for f in flags)
    lo = np.zeros(3)
    hi = np.zeros(3)
    tilt = np.zeros(3)  # xy xz yz when present
    for axis in range(3):
        fields = lines[start + 1 + axis].split()
        if len(fields) not in (2, 3):
            raise BadRecord("box bounds line needs 2 or 3 values",
                            lineno0 + start + 1 + axis)
        lo[axis] = float(fields[0])
        hi[axis] = float(fields[1])
        if len(fields) == 3:
            tilt[axis] = float(fields[2])
    matrix = np.diag(hi - lo)
    matrix[1, 0] = tilt[0]  # xy
    matrix[2, 0] = tilt[1]  # xz
    matrix[2, 1] = tilt[2]  # yz
    return Box(matrix=matrix, periodic=periodic), lo, hi


class _LammpsSource:
    def __init__(self, path, spans, columns):
        self._bytes = ByteSource(path)
        self.spans = spans
        self.columns = columns

    def parse_frame(self, k: int) -> Frame:
        offset, size, lineno0 = self.spans[k]
        lines = self._bytes.read_at(offset, size).decode("utf-8").splitlines()
        i = 0
        natoms = None
        box = None
        lo = hi = None
        while i < len(lines):
            line = lines[i]
            if line.startswith("ITEM: NUMBER OF ATOMS"):
                natoms = int(lines[i + 1])
                i += 2
            elif line.startswith("ITEM: BOX BOUNDS"):
                box, lo, hi = _parse_bounds(lines, i, lineno0)
                i += 4
            elif line.startswith("ITEM: ATOMS"):
                break
            else:
                i += 1
        columns = lines[i].split()[2:]
        if columns != list(self.columns):
            raise BadItemHeader(
                f"ATOMS columns changed: {columns} != {list(self.columns)}"
            )
        col = {name: j for j, name in enumerate(columns)}
        scaled = "xs" in col
        names = ("xs", "ys", "zs") if scaled else ("x", "y", "z")
        rows = lines[i + 1 : i + 1 + natoms]
        if len(rows) != natoms:
            raise BadRecord("truncated ATOMS section", lineno0 + i + 1 + len(rows))
        table = [r.split() for r in rows]
        for j, fields in enumerate(table):
            if len(fields) != len(columns):
                raise BadRecord(
                    f"expected {len(columns)} fields, got {len(fields)}",
                    lineno0 + i + 1 + j,
                )
        ids = np.array([int(f[col["id"]]) for f in table], dtype=np.int64)
        order = np.argsort(ids, kind="stable")
        if not np.array_equal(ids[order], np.arange(1, natoms + 1)):
            raise BadRecord("atom ids are not a permutation of 1..N", lineno0 + i + 1)
        positions = np.empty((natoms, 3), dtype=np.float64)
        for axis, name in enumerate(names):
            values = np.array([float(f[col[name]]) for f in table])
            if scaled:
                values = lo[axis] + values * (hi[axis] - lo[axis])
            positions[:, axis] = values
        positions = positions[order]
        if "element" in col:
            atom_type = [table[j][col["element"]] for j in order]
        elif "type" in col:
            atom_type = [table[j][col["type"]] for j in order]
        else:
            atom_type = ["X"] * natoms
        attrs = {}
        for name in columns:
            if name in NON_ATTRIBUTE_COLUMNS:
                continue
            values = np.array([float(f[col[name]]) for f in table])
            attrs[name] = values[order]
        return Frame(positions=positions, atom_type=atom_type, box=box,
                     attributes=attrs)


def parse_lammps_dump(path: str, cache_bytes: int | None = None) -> Trajectory:
    """Index a LAMMPS dump; one span per TIMESTEP block."""
    spans: list[tuple[int, int, int]] = []
    atom_count = None
    columns = None
    with open(path, "rb") as fh:
        offset = 0
        lineno = 0
        block_start = None
        block_startline = 0
        expect = None  # remaining data lines whose content we must not scan
        pending_natoms = None
        saw_atoms_section = False

        def close_block(end):
            nonlocal block_start, saw_atoms_section
            if block_start is None:
                return
            if not saw_atoms_section or (expect is not None and expect > 0):
                if spans:
                    log.warning("%s: dropping trailing partial frame", path)
                    block_start = None
                    return
                raise BadItemHeader("truncated dump block")
            spans.append((block_start, end - block_start, block_startline))
            block_start = None
            saw_atoms_section = False

        for raw in fh:
            lineno += 1
            line = raw.decode("utf-8", errors="replace").rstrip("\n")
            if expect is not None and expect > 0:
                expect -= 1
                offset += len(raw)
                continue
            if line.startswith("ITEM: TIMESTEP"):
                close_block(offset)
                block_start = offset
                block_startline = lineno
                expect = 1
            elif line.startswith("ITEM: NUMBER OF ATOMS"):
                if block_start is None:
                    raise BadItemHeader(f"line {lineno}: NUMBER OF ATOMS outside block")
                pending_natoms = -1  # next data line carries the count
                expect = None
            elif line.startswith("ITEM: BOX BOUNDS"):
                expect = 3
            elif line.startswith("ITEM: ATOMS"):
                cols = line.split()[2:]
                if "id" not in cols:
                    raise MissingColumn("id")
                if not ({"x", "y", "z"} <= set(cols) or {"xs", "ys", "zs"} <= set(cols)):
                    raise MissingColumn("x y z (or xs ys zs)")
                if columns is None:
                    columns = cols
                elif cols != columns:
                    raise BadItemHeader(f"line {lineno}: ATOMS columns changed")
                if pending_natoms is None:
                    raise BadItemHeader(f"line {lineno}: ATOMS before NUMBER OF ATOMS")
                expect = pending_natoms
                saw_atoms_section = True
            elif line.startswith("ITEM:"):
                expect = None  # unknown section: data lines skipped lazily below
            elif pending_natoms == -1:
                try:
                    pending_natoms = int(line)
                except ValueError:
                    raise BadRecord("unparseable atom count", lineno)
                if atom_count is None:
                    atom_count = pending_natoms
                elif pending_natoms != atom_count:
                    raise BadItemHeader(
                        f"line {lineno}: atom count changed from {atom_count}"
                        f" to {pending_natoms}"
                    )
            offset += len(raw)
        close_block(offset)

    if not spans or atom_count is None or columns is None:
        raise BadItemHeader("no complete dump blocks found")
    attribute_names = tuple(c for c in columns if c not in NON_ATTRIBUTE_COLUMNS)
    source = _LammpsSource(path, spans, tuple(columns))
    source.parse_frame(0)
    kwargs = {} if cache_bytes is None else {"cache_bytes": cache_bytes}
    return Trajectory(
        source=source,
        frame_count=len(spans),
        atom_count=atom_count,
        attribute_names=attribute_names,
        path=path,
        **kwargs,
    )


def probe_lammps(head: bytes) -> bool:
    try:
        text = head.decode("utf-8", errors="strict")
    except UnicodeDecodeError:
        return False
    return text.lstrip().startswith("ITEM: TIMESTEP")
