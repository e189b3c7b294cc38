"""GRO (GROMACS) reader.

Fixed-column records; one block per frame (title, atom count, atom lines,
box line). Lengths are nm in the file and converted to Angstrom (x10) on
import. Velocity columns, when present, are ignored.
"""

from __future__ import annotations

import logging

import numpy as np

from ..errors import BadRecord
from ..model.frame import Box, Frame
from ..model.trajectory import ByteSource, Trajectory

log = logging.getLogger(__name__)

NM_TO_ANGSTROM = 10.0


def _box_from_gro_line(line: str, lineno: int) -> Box:
    try:
        values = [float(tok) * NM_TO_ANGSTROM for tok in line.split()]
    except ValueError:
        raise BadRecord("unparseable box line", lineno)
    if len(values) == 3:
        matrix = np.diag(values)
    elif len(values) == 9:
        # v1(x) v2(y) v3(z) v1(y) v1(z) v2(x) v2(z) v3(x) v3(y)
        matrix = np.array([
            [values[0], values[3], values[4]],
            [values[5], values[1], values[6]],
            [values[7], values[8], values[2]],
        ])
    else:
        raise BadRecord(f"box line needs 3 or 9 values, got {len(values)}", lineno)
    periodic = tuple(matrix[i, i] > 0 for i in range(3))
    return Box(matrix=matrix, periodic=periodic)


class _GroSource:
    def __init__(self, path: str, spans: list[tuple[int, int, int]]):
        self._bytes = ByteSource(path)
        self.spans = spans

    def parse_frame(self, k: int) -> Frame:
        offset, size, lineno0 = self.spans[k]
        lines = self._bytes.read_at(offset, size).decode("utf-8").splitlines()
        natoms = int(lines[1])
        positions = np.empty((natoms, 3), dtype=np.float64)
        atom_type = []
        residue_id = np.empty(natoms, dtype=np.int64)
        for i in range(natoms):
            line = lines[2 + i]
            lineno = lineno0 + 2 + i
            try:
                residue_id[i] = int(line[0:5])
                atom_type.append(line[10:15].strip())
                positions[i, 0] = float(line[20:28]) * NM_TO_ANGSTROM
                positions[i, 1] = float(line[28:36]) * NM_TO_ANGSTROM
                positions[i, 2] = float(line[36:44]) * NM_TO_ANGSTROM
            except (ValueError, IndexError):
                raise BadRecord("unparseable atom record", lineno)
        box = _box_from_gro_line(lines[2 + natoms], lineno0 + 2 + natoms)
        return Frame(positions=positions, atom_type=atom_type, box=box,
                     residue_id=residue_id)


def parse_gro(path: str, cache_bytes: int | None = None) -> Trajectory:
    """Index a (possibly multi-frame) GRO file for lazy loading."""
    spans: list[tuple[int, int, int]] = []
    atom_count = None
    with open(path, "rb") as fh:
        lineno = 0
        while True:
            start = fh.tell()
            start_line = lineno + 1  # 1-based line number of the title line
            title = fh.readline()
            lineno += 1
            if not title:
                break
            if not title.strip() and not fh.peek(4096).strip():
                break  # blank padding at end of file
            count_line = fh.readline()
            lineno += 1
            if not count_line:
                if spans:
                    log.warning("%s: dropping trailing partial frame", path)
                    break
                raise BadRecord("missing atom count line", lineno)
            try:
                natoms = int(count_line)
            except ValueError:
                raise BadRecord("unparseable atom count", lineno)
            block_ok = True
            for _ in range(natoms + 1):  # atom rows + box line
                if not fh.readline():
                    block_ok = False
                    break
                lineno += 1
            if not block_ok:
                if spans:
                    log.warning("%s: dropping trailing partial frame", path)
                    break
                raise BadRecord("truncated frame block", lineno + 1)
            if atom_count is None:
                atom_count = natoms
            elif natoms != atom_count:
                raise BadRecord(
                    f"atom count changed from {atom_count} to {natoms}",
                    start_line + 1,
                )
            spans.append((start, fh.tell() - start, start_line))
    if atom_count is None:
        raise BadRecord("empty file", 1)
    source = _GroSource(path, spans)
    # Validate the first frame eagerly so structural errors surface at open.
    if spans:
        source.parse_frame(0)
    kwargs = {} if cache_bytes is None else {"cache_bytes": cache_bytes}
    return Trajectory(
        source=source,
        frame_count=len(spans),
        atom_count=atom_count,
        attribute_names=(),
        path=path,
        **kwargs,
    )


def probe_gro(head: bytes) -> bool:
    try:
        lines = head.decode("utf-8", errors="strict").splitlines()
    except UnicodeDecodeError:
        return False
    if len(lines) < 3:
        return False
    try:
        natoms = int(lines[1])
    except ValueError:
        return False
    if natoms <= 0:
        return False
    line = lines[2]
    try:
        float(line[20:28])
        float(line[28:36])
        return True
    except (ValueError, IndexError):
        return False
