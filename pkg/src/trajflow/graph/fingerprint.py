"""Collision-resistant digests over everything a node execution consumes.

The cache key is (node id, frame index, fingerprint); the fingerprint itself
covers the engine version, the node's kind identity, its params, every input
tensor in wire encoding, every declared environment read (attribute values,
visibility, script source, ...), and the trajectory identity. Every field is
length-prefixed so adjacent fields can never alias.
"""

from __future__ import annotations

import hashlib
import json
import struct

from ..model.tensor import Tensor
from ..scripting import wire

ENGINE_VERSION = "trajflow-engine/1"

_LEN = struct.Struct("<Q")


def _feed(h, label: str, payload: bytes) -> None:
    tag = label.encode("utf-8")
    h.update(_LEN.pack(len(tag)))
    h.update(tag)
    h.update(_LEN.pack(len(payload)))
    h.update(payload)


def fingerprint_inputs(kind_identity: str, params: dict,
                       inputs: dict[str, Tensor],
                       env_reads: list[tuple[str, bytes]],
                       trajectory_identity: str) -> str:
    h = hashlib.sha256()
    _feed(h, "engine", ENGINE_VERSION.encode("utf-8"))
    _feed(h, "kind", kind_identity.encode("utf-8"))
    payload = json.dumps(params, sort_keys=True, separators=(",", ":"))
    _feed(h, "params", payload.encode("utf-8"))
    for name in sorted(inputs):
        _feed(h, "input:" + name, wire.encode_tensor(inputs[name]))
    for label, data in env_reads:
        _feed(h, "env:" + label, data)
    _feed(h, "trajectory", trajectory_identity.encode("utf-8"))
    return h.hexdigest()


def trajectory_identity(trajectory) -> str:
    path = getattr(trajectory, "path", None)
    if path:
        return f"file:{path}:{trajectory.frame_count}:{trajectory.atom_count}"
    return (f"memory:{id(trajectory)}:{trajectory.frame_count}:"
            f"{trajectory.atom_count}")
