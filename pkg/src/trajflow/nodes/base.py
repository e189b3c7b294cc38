"""Node-kind interface, execution context, and the kind registry.

A NodeKind is stateless: ports() derives the port signature from params,
run() maps input tensors to output tensors, and anything beyond pure
dataflow (attribute writes, scene changes, plot points) is recorded on the
context as an effect. The engine applies a node's effects only after the
node finishes, and fingerprints env_reads() so cached results replay with
identical side effects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import BadParam, UnknownKind
from ..model.attributes import AttributeStore
from ..model.frame import Frame
from ..model.tensor import Tensor


@dataclass(frozen=True)
class PortSpec:
    """Connection type of one port: dtype, rank, optional fixed extents.

    ``dims`` entries of None are wildcards; a fixed extent only conflicts
    with a differing fixed extent on the other side.
    """

    name: str
    dtype: str  # i64 | f64
    rank: int
    dims: tuple | None = None
    optional: bool = False  # inputs only: may stay unconnected

    def describe(self) -> str:
        text = f"{self.dtype} rank {self.rank}"
        if self.dims is not None:
            text += f" dims {list(self.dims)}"
        return text


def ports_compatible(out: PortSpec, into: PortSpec) -> tuple[bool, bool]:
    """(dtype_ok, rank_and_dims_ok) between an out port and an in port."""
    dtype_ok = out.dtype == into.dtype
    if out.rank != into.rank:
        return dtype_ok, False
    if out.dims is not None and into.dims is not None:
        for a, b in zip(out.dims, into.dims):
            if a is not None and b is not None and a != b:
                return dtype_ok, False
    return dtype_ok, True


# Effects are plain tuples so cached results can replay them verbatim:
#   ("attr", name, values)            per-atom f64 written at node completion
#   ("color", indices, rgba)          scene RGBA rows
#   ("visible", indices, flags)       AND-composed visibility
#   ("radius", indices, scales)       radius multipliers
#   ("bonds", pairs)                  extra display bonds
#   ("camera", center)                camera center, last one wins
#   ("plot", value)                   one accumulate point / series replace
Effect = tuple


class NodeContext:
    """What one node sees while running at one frame."""

    def __init__(self, frame: Frame, frame_index: int, store: AttributeStore,
                 pending_visibility: dict[int, bool] | None = None,
                 cursor: dict[str, np.ndarray] | None = None):
        self.frame = frame
        self.frame_index = int(frame_index)
        self.store = store
        self.n_atoms = frame.n_atoms
        self._cursor = cursor if cursor is not None else {}
        self._pending_visibility = (pending_visibility
                                    if pending_visibility is not None else {})
        self.effects: list[Effect] = []

    # -- reads -------------------------------------------------------

    def read_attribute(self, name: str) -> np.ndarray:
        """Store slot for this frame if defined, else the run cursor, else zeros.

        The cursor holds the most recent write in visit order, which is what
        makes an attribute wired as both input and output a recurrence.
        """
        values, defined = self.store.read(name, self.frame_index)
        if defined:
            return values
        if name in self._cursor:
            values = self._cursor[name]
            if len(values) == self.n_atoms:
                return values
        return np.zeros(self.n_atoms, dtype=np.float64)

    def visibility(self) -> np.ndarray:
        """Effective visibility right now: default all-visible plus this
        frame's already-applied scene effects."""
        vis = np.ones(self.n_atoms, dtype=bool)
        for atom, flag in self._pending_visibility.items():
            if 0 <= atom < self.n_atoms:
                vis[atom] = flag
        return vis

    # -- recorded effects ---------------------------------------------

    def write_attribute(self, name: str, values: np.ndarray) -> None:
        self.effects.append(
            ("attr", name, np.asarray(values, dtype=np.float64)))

    def set_colors(self, indices, rgba) -> None:
        self.effects.append(("color", np.asarray(indices, dtype=np.int64),
                             np.asarray(rgba, dtype=np.float64)))

    def set_visible(self, indices, flags) -> None:
        self.effects.append(("visible", np.asarray(indices, dtype=np.int64),
                             np.asarray(flags, dtype=bool)))

    def set_radius(self, indices, scales) -> None:
        self.effects.append(("radius", np.asarray(indices, dtype=np.int64),
                             np.asarray(scales, dtype=np.float64)))

    def add_bonds(self, pairs) -> None:
        self.effects.append(("bonds", np.asarray(pairs, dtype=np.int64)))

    def set_camera(self, center) -> None:
        self.effects.append(("camera", np.asarray(center, dtype=np.float64)))

    def plot(self, value) -> None:
        self.effects.append(("plot", value))


class NodeKind:
    """Stateless behavior of one node type."""

    name: str = ""
    cacheable: bool = True

    def ports(self, params: dict) -> tuple[tuple[PortSpec, ...],
                                           tuple[PortSpec, ...]]:
        """(input ports, output ports) for the given params; raises BadParam."""
        raise NotImplementedError

    def env_reads(self, ctx: NodeContext, params: dict) -> list[tuple[str, bytes]]:
        """Labeled bytes of everything run() consumes besides port inputs."""
        return []

    def attr_writes(self, params: dict) -> list[str]:
        """Attribute names this node may write (for run-start clearing)."""
        return []

    def run(self, ctx: NodeContext, inputs: dict[str, Tensor],
            params: dict) -> dict[str, Tensor]:
        raise NotImplementedError

    def identity(self) -> str:
        """Stable string for fingerprints."""
        return f"builtin:{self.name}"


KINDS: dict[str, NodeKind] = {}


def register(kind_cls):
    """Class decorator: instantiate and index by kind name."""
    kind = kind_cls()
    if not kind.name:
        raise ValueError(f"{kind_cls.__name__} lacks a name")
    KINDS[kind.name] = kind
    return kind_cls


def resolve_kind(name: str) -> NodeKind:
    try:
        return KINDS[name]
    except KeyError:
        raise UnknownKind(f"no node kind named {name!r}") from None


# -- param helpers ----------------------------------------------------

def require_param(params: dict, key: str, expect: type | tuple,
                  kind_name: str):
    if key not in params:
        raise BadParam(f"{kind_name}: missing required param {key!r}")
    value = params[key]
    if expect is float and isinstance(value, (int, float)) \
            and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, expect) or isinstance(value, bool):
        raise BadParam(
            f"{kind_name}: param {key!r} must be {expect}, got {type(value).__name__}")
    return value


def optional_param(params: dict, key: str, default, expect: type | tuple,
                   kind_name: str):
    if key not in params or params[key] is None:
        return default
    return require_param(params, key, expect, kind_name)


def param_f64(params: dict, key: str, default: float | None,
              kind_name: str) -> float:
    if default is None:
        return float(require_param(params, key, float, kind_name))
    value = optional_param(params, key, default, float, kind_name)
    return float(value)


def param_str_list(params: dict, key: str, kind_name: str,
                   default: Sequence[str] | None = None) -> tuple[str, ...]:
    if key not in params or params[key] is None:
        if default is not None:
            return tuple(default)
        raise BadParam(f"{kind_name}: missing required param {key!r}")
    value = params[key]
    if (not isinstance(value, (list, tuple)) or
            not all(isinstance(v, str) for v in value) or not value):
        raise BadParam(f"{kind_name}: param {key!r} must be a list of strings")
    return tuple(value)
