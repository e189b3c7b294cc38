"""Frame and periodic box types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import IndexOutOfRange, LengthMismatch, SelfBond


@dataclass(frozen=True)
class Box:
    """3x3 cell matrix in Angstrom (rows are box vectors) plus periodic flags.

    Orthorhombic cells have a diagonal matrix; that is the only case the
    cutoff-based nodes accept.
    """

    matrix: np.ndarray
    periodic: tuple[bool, bool, bool] = (True, True, True)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64).reshape(3, 3)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))

    @classmethod
    def cubic(cls, edge: float, periodic: bool = True) -> "Box":
        return cls(np.diag([edge, edge, edge]), (periodic,) * 3)

    @classmethod
    def orthorhombic(cls, lengths, periodic=(True, True, True)) -> "Box":
        return cls(np.diag(np.asarray(lengths, dtype=np.float64)), periodic)

    @classmethod
    def nonperiodic(cls) -> "Box":
        return cls(np.zeros((3, 3)), (False, False, False))

    @property
    def lengths(self) -> np.ndarray:
        return np.diagonal(self.matrix)

    @property
    def is_orthorhombic(self) -> bool:
        off = self.matrix - np.diag(np.diagonal(self.matrix))
        return not np.any(off)

    def validate(self) -> None:
        for axis in range(3):
            if self.periodic[axis] and self.matrix[axis, axis] <= 0:
                raise ValueError(f"periodic axis {axis} has non-positive edge")


@dataclass(frozen=True)
class Frame:
    """One snapshot: positions (Angstrom), species, residues, box, bonds.

    ``attributes`` holds per-atom columns imported alongside coordinates
    (SSV / LAMMPS extra columns); the engine copies them into the attribute
    store when the frame is first visited.
    """

    positions: np.ndarray                  # N x 3 f64
    atom_type: tuple[str, ...]             # N species symbols
    box: Box
    residue_id: np.ndarray | None = None   # N i64, zeros when absent
    bonds: tuple[tuple[int, int], ...] = ()
    attributes: dict = field(default_factory=dict)  # name -> N f64 array

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise LengthMismatch(f"positions must be Nx3, got {pos.shape}")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        n = pos.shape[0]
        if len(self.atom_type) != n:
            raise LengthMismatch("atom_type length does not match positions")
        object.__setattr__(self, "atom_type", tuple(self.atom_type))
        rid = self.residue_id
        rid = np.zeros(n, dtype=np.int64) if rid is None else np.asarray(rid, dtype=np.int64)
        if rid.shape != (n,):
            raise LengthMismatch("residue_id length does not match positions")
        rid = np.ascontiguousarray(rid)
        rid.flags.writeable = False
        object.__setattr__(self, "residue_id", rid)
        self.box.validate()
        # bonds are stored canonically: unordered pairs, deduplicated, sorted
        seen = set()
        for i, j in self.bonds:
            i, j = int(i), int(j)
            if i == j:
                raise SelfBond(f"self bond ({i},{i})")
            if not (0 <= i < n and 0 <= j < n):
                raise IndexOutOfRange(f"bond index out of range: ({i},{j})")
            seen.add((min(i, j), max(i, j)))
        object.__setattr__(self, "bonds", tuple(sorted(seen)))
        frozen = {}
        for name, values in self.attributes.items():
            arr = np.ascontiguousarray(values, dtype=np.float64)
            if arr.shape != (n,):
                raise LengthMismatch(f"attribute {name!r} length does not match positions")
            arr.flags.writeable = False
            frozen[name] = arr
        object.__setattr__(self, "attributes", frozen)

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    def nbytes(self) -> int:
        n = self.positions.nbytes + self.residue_id.nbytes
        n += sum(a.nbytes for a in self.attributes.values())
        n += 64 * len(self.atom_type) // 8 + 16 * len(self.bonds)
        return n
