"""PDB reader.

ATOM/HETATM fixed columns carry positions (already Angstrom); MODEL/ENDMDL
blocks delimit frames (a file without MODEL records is a single frame);
CONECT records populate bonds (1-based serials); CRYST1 populates the box.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import BadRecord
from ..model.frame import Box, Frame
from ..model.trajectory import ByteSource, Trajectory


def _box_from_cryst1(line: str, lineno: int) -> Box:
    try:
        a = float(line[6:15])
        b = float(line[15:24])
        c = float(line[24:33])
        alpha = math.radians(float(line[33:40]))
        beta = math.radians(float(line[40:47]))
        gamma = math.radians(float(line[47:54]))
    except (ValueError, IndexError):
        raise BadRecord("unparseable CRYST1 record", lineno)
    v2x = b * math.cos(gamma)
    v2y = b * math.sin(gamma)
    v3x = c * math.cos(beta)
    v3y = c * (math.cos(alpha) - math.cos(beta) * math.cos(gamma)) / math.sin(gamma)
    v3z = math.sqrt(max(c * c - v3x * v3x - v3y * v3y, 0.0))
    matrix = np.array([
        [a, 0.0, 0.0],
        [v2x, v2y, 0.0],
        [v3x, v3y, v3z],
    ])
    matrix[np.abs(matrix) < 1e-9] = 0.0
    return Box(matrix=matrix, periodic=(True, True, True))


class _PdbSource:
    def __init__(self, path, spans, box, bonds, serial_order):
        self._bytes = ByteSource(path)
        self.spans = spans
        self.box = box
        self.bonds = bonds
        self.serial_order = serial_order

    def parse_frame(self, k: int) -> Frame:
        offset, size, lineno0 = self.spans[k]
        lines = self._bytes.read_at(offset, size).decode("utf-8").splitlines()
        positions = []
        atom_type = []
        residue_id = []
        for j, line in enumerate(lines):
            if not line.startswith(("ATOM", "HETATM")):
                continue
            lineno = lineno0 + j
            try:
                positions.append((float(line[30:38]), float(line[38:46]),
                                  float(line[46:54])))
                element = line[76:78].strip() if len(line) > 76 else ""
                atom_type.append(element or line[12:16].strip())
                res = line[22:26].strip()
                residue_id.append(int(res) if res else 0)
            except (ValueError, IndexError):
                raise BadRecord("unparseable ATOM record", lineno)
        return Frame(
            positions=np.array(positions, dtype=np.float64).reshape(len(positions), 3),
            atom_type=atom_type,
            box=self.box,
            residue_id=np.array(residue_id, dtype=np.int64),
            bonds=self.bonds,
        )


def parse_pdb(path: str, cache_bytes: int | None = None) -> Trajectory:
    """Index a PDB file; CONECT/CRYST1 are collected in the same pass."""
    spans: list[tuple[int, int, int]] = []
    counts: list[int] = []
    box = Box.nonperiodic()
    conect_rows: list[tuple[list[int], int]] = []
    serial_to_index: dict[int, int] = {}
    in_first_frame = True

    with open(path, "rb") as fh:
        offset = 0
        lineno = 0
        frame_start = None
        frame_startline = 0
        frame_atoms = 0
        saw_model = False

        def close_frame(end_offset):
            nonlocal frame_start, frame_atoms, in_first_frame
            if frame_start is not None:
                spans.append((frame_start, end_offset - frame_start, frame_startline))
                counts.append(frame_atoms)
                frame_start = None
                frame_atoms = 0
                in_first_frame = False

        for raw in fh:
            lineno += 1
            line = raw.decode("utf-8", errors="replace").rstrip("\n")
            if line.startswith("MODEL"):
                close_frame(offset)
                saw_model = True
                frame_start = offset
                frame_startline = lineno
            elif line.startswith("ENDMDL"):
                close_frame(fh.tell())
            elif line.startswith(("ATOM", "HETATM")):
                if frame_start is None:
                    if saw_model:
                        raise BadRecord("ATOM record outside MODEL block", lineno)
                    frame_start = offset
                    frame_startline = lineno
                if in_first_frame:
                    try:
                        serial = int(line[6:11])
                    except (ValueError, IndexError):
                        raise BadRecord("unparseable atom serial", lineno)
                    serial_to_index.setdefault(serial, frame_atoms)
                frame_atoms += 1
            elif line.startswith("CRYST1"):
                box = _box_from_cryst1(line, lineno)
            elif line.startswith("CONECT"):
                fields = line[6:].split()
                try:
                    serials = [int(f) for f in fields]
                except ValueError:
                    raise BadRecord("unparseable CONECT record", lineno)
                conect_rows.append((serials, lineno))
            offset = fh.tell()
        close_frame(offset)

    if not spans:
        raise BadRecord("no ATOM records found", 1)
    atom_count = counts[0]
    for k, n in enumerate(counts):
        if n != atom_count:
            raise BadRecord(f"frame {k} has {n} atoms, expected {atom_count}",
                            spans[k][2])

    bonds = []
    for serials, row_line in conect_rows:
        if not serials:
            continue
        base = serials[0]
        for other in serials[1:]:
            try:
                bonds.append((serial_to_index[base], serial_to_index[other]))
            except KeyError:
                raise BadRecord("CONECT references unknown serial", row_line)

    source = _PdbSource(path, spans, box, tuple(bonds), serial_to_index)
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


def probe_pdb(head: bytes) -> bool:
    try:
        lines = head.decode("utf-8", errors="strict").splitlines()
    except UnicodeDecodeError:
        return False
    starts = ("ATOM", "HETATM", "MODEL", "CRYST1", "HEADER", "TITLE", "REMARK")
    return any(line.startswith(starts) for line in lines[:20])
