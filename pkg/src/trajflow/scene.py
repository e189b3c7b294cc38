"""Per-frame visualization state: deltas, resolution, canonical snapshots.

Nodes emit scene effects while a frame executes; the engine buffers them in a
SceneDelta and commits it only if the frame finishes without error. Resolving
a frame overlays the committed delta (if any) on element-keyed defaults.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import NonPositiveScale

SCHEMA_VERSION = 1
DEFAULT_RADIUS = 1.0


def _load_color_table() -> dict[str, tuple[float, float, float, float]]:
    text = resources.files("trajflow.data").joinpath("element_colors.json").read_text()
    raw = json.loads(text)
    return {name: tuple(float(c) for c in rgba) for name, rgba in raw.items()}


_COLORS = _load_color_table()


def element_color(atom_type: str) -> tuple[float, float, float, float]:
    """Default color for a species label.

    Exact match first, then the label with trailing digits stripped, then its
    leading character, then the table default. Handles force-field names like
    ``OW1`` without a curated alias list.
    """
    for key in (atom_type, atom_type.rstrip("0123456789"), atom_type[:1]):
        if key in _COLORS:
            return _COLORS[key]
        title = key.title()
        if title in _COLORS:
            return _COLORS[title]
    return _COLORS["default"]


class SceneDelta:
    """Accumulated per-frame overrides; composition rules are documented on
    each setter. Idempotent by construction (re-applying a setter with the
    same arguments leaves the state unchanged)."""

    def __init__(self, frame: int):
        self.frame = int(frame)
        self.colors: dict[int, tuple[float, float, float, float]] = {}
        self.radii: dict[int, float] = {}
        self.visible: dict[int, bool] = {}
        self.extra_bonds: set[tuple[int, int]] = set()
        self.camera: tuple[float, float, float] | None = None

    def set_color(self, atom: int, rgba) -> None:
        """Last write wins per atom."""
        self.colors[int(atom)] = tuple(float(c) for c in rgba)

    def set_radius(self, atom: int, scale: float) -> None:
        """Last write wins per atom; scales must be positive."""
        scale = float(scale)
        if not scale > 0:
            raise NonPositiveScale(f"radius scale {scale} must be > 0")
        self.radii[int(atom)] = scale

    def set_visible(self, atom: int, visible: bool) -> None:
        """AND-composed: once hidden within a frame, an atom stays hidden."""
        atom = int(atom)
        self.visible[atom] = self.visible.get(atom, True) and bool(visible)

    def add_bond(self, i: int, j: int) -> None:
        """Unordered, deduplicated."""
        i, j = int(i), int(j)
        self.extra_bonds.add((min(i, j), max(i, j)))

    def set_camera(self, center) -> None:
        """Last write wins."""
        self.camera = tuple(float(c) for c in center)

    def is_empty(self) -> bool:
        return not (self.colors or self.radii or self.visible
                    or self.extra_bonds or self.camera is not None)


@dataclass(frozen=True)
class SceneSnapshot:
    frame: int
    has_delta: bool
    positions: np.ndarray
    atom_type: tuple[str, ...]
    colors: np.ndarray        # N x 4
    radii: np.ndarray         # N
    visible: np.ndarray       # N bool
    bonds: tuple[tuple[int, int], ...]
    camera: tuple[float, float, float] | None
    box_matrix: np.ndarray
    box_periodic: tuple[bool, bool, bool]


def resolve_scene(frame, delta: SceneDelta | None, frame_index: int) -> SceneSnapshot:
    """Overlay a committed delta on defaults (element colors, radius 1,
    visible). A missing delta resolves to pure defaults with has_delta=False.
    """
    n = frame.n_atoms
    colors = np.array([element_color(t) for t in frame.atom_type],
                      dtype=np.float64).reshape(n, 4)
    radii = np.full(n, DEFAULT_RADIUS)
    visible = np.ones(n, dtype=bool)
    bonds = set(frame.bonds)
    camera = None
    if delta is not None:
        for atom, rgba in delta.colors.items():
            colors[atom] = rgba
        for atom, scale in delta.radii.items():
            radii[atom] = scale
        for atom, vis in delta.visible.items():
            visible[atom] = vis
        bonds |= delta.extra_bonds
        camera = delta.camera
    return SceneSnapshot(
        frame=int(frame_index),
        has_delta=delta is not None,
        positions=frame.positions,
        atom_type=frame.atom_type,
        colors=colors,
        radii=radii,
        visible=visible,
        bonds=tuple(sorted(bonds)),
        camera=camera,
        box_matrix=frame.box.matrix,
        box_periodic=frame.box.periodic,
    )


class SceneState:
    """Committed deltas per frame; the scrubbable animation substrate."""

    def __init__(self):
        self._deltas: dict[int, SceneDelta] = {}
        self._lock = threading.Lock()

    def commit(self, delta: SceneDelta) -> None:
        with self._lock:
            self._deltas[delta.frame] = delta

    def delta_for(self, k: int) -> SceneDelta | None:
        with self._lock:
            return self._deltas.get(int(k))

    def has_delta(self, k: int) -> bool:
        with self._lock:
            return int(k) in self._deltas

    def clear(self) -> None:
        with self._lock:
            self._deltas.clear()

    def resolve(self, trajectory, k: int) -> SceneSnapshot:
        frame = trajectory.load_frame(k)
        return resolve_scene(frame, self.delta_for(k), k)


def snapshot_document(snap: SceneSnapshot) -> dict:
    """Plain-JSON form of a snapshot (python scalars only, stable layout)."""
    return {
        "version": SCHEMA_VERSION,
        "frame": int(snap.frame),
        "has_delta": bool(snap.has_delta),
        "box": {
            "matrix": [[float(v) for v in row] for row in snap.box_matrix],
            "periodic": list(snap.box_periodic),
        },
        "camera": None if snap.camera is None else [float(c) for c in snap.camera],
        "atoms": [
            {
                "type": snap.atom_type[i],
                "position": [float(v) for v in snap.positions[i]],
                "color": [float(c) for c in snap.colors[i]],
                "radius": float(snap.radii[i]),
                "visible": bool(snap.visible[i]),
            }
            for i in range(len(snap.atom_type))
        ],
        "bonds": [[int(i), int(j)] for i, j in snap.bonds],
    }


def dumps_canonical(doc) -> str:
    """Canonical JSON: sorted keys, no spaces, shortest-round-trip floats."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      allow_nan=False) + "\n"


def export_snapshot(snap: SceneSnapshot, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(snapshot_document(snap)))
