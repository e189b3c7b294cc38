"""Per-atom, per-frame named scalar arrays.

Attributes are the recurrence and debugging substrate: masks, labels and
order parameters all live here as f64 arrays. Reads never fail; an unknown
name auto-registers and reads back as zeros with defined=False.
"""

from __future__ import annotations

import threading

import numpy as np

from ..errors import LengthMismatch


class AttributeStore:
    """Map attribute name -> {frame index -> N f64 values}."""

    def __init__(self, n_atoms: int):
        self.n_atoms = int(n_atoms)
        self._frames: dict[str, dict[int, np.ndarray]] = {}
        self._lock = threading.Lock()

    def names(self) -> list[str]:
        return sorted(self._frames)

    def read(self, name: str, frame: int) -> tuple[np.ndarray, bool]:
        """Values at ``frame`` plus the defined flag; zeros when unwritten."""
        with self._lock:
            per_frame = self._frames.setdefault(name, {})
            values = per_frame.get(int(frame))
        if values is None:
            return np.zeros(self.n_atoms, dtype=np.float64), False
        return values, True

    def write(self, name: str, frame: int, values) -> None:
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.shape != (self.n_atoms,):
            raise LengthMismatch(
                f"attribute {name!r}: expected {self.n_atoms} values, got {arr.shape}"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        with self._lock:
            self._frames.setdefault(name, {})[int(frame)] = arr

    def defined_frames(self, name: str) -> list[int]:
        with self._lock:
            return sorted(self._frames.get(name, {}))

    def clear_range(self, name: str, frames) -> None:
        """Drop stored values of ``name`` for the given frame indices."""
        with self._lock:
            per_frame = self._frames.get(name)
            if not per_frame:
                return
            for k in frames:
                per_frame.pop(int(k), None)


def attr_read(store: AttributeStore, name: str, frame: int, n_atoms: int) -> np.ndarray:
    if n_atoms != store.n_atoms:
        raise LengthMismatch(f"store holds {store.n_atoms} atoms, caller expects {n_atoms}")
    values, _ = store.read(name, frame)
    return values


def attr_write(store: AttributeStore, name: str, frame: int, values) -> None:
    store.write(name, frame, values)
