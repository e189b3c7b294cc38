"""Annotation parsing and the external-node wire protocol."""

from .annotations import LEADERS, PortDecl, PortManifest, parse_annotations
from .host import (
    CALL_TIMEOUT,
    HANDSHAKE_TIMEOUT,
    SHUTDOWN_GRACE,
    LoopbackHost,
    NodeHandle,
)
from .wire import (
    MAGIC,
    PROTOCOL_VERSION,
    decode_control,
    decode_tensor,
    encode_control,
    encode_tensor,
    read_tensor,
    write_tensor,
)

__all__ = [
    "CALL_TIMEOUT",
    "HANDSHAKE_TIMEOUT",
    "LEADERS",
    "LoopbackHost",
    "MAGIC",
    "NodeHandle",
    "PortDecl",
    "PortManifest",
    "PROTOCOL_VERSION",
    "SHUTDOWN_GRACE",
    "decode_control",
    "decode_tensor",
    "encode_control",
    "encode_tensor",
    "parse_annotations",
    "read_tensor",
    "write_tensor",
]
