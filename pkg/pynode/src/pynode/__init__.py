"""Reference stdio host for annotated Python analysis scripts.

``python -m pynode script.py`` (or the ``pynode`` console script) reads the
port annotations in the script, answers the HELLO/DESCRIBE handshake on
stdout, and then executes the script once per EXEC request, exchanging
tensors in the binary wire format. It is a standalone implementation of the
published grammar and protocol — it shares no code with any engine.
"""

from .annotations import (
    AnnotationError,
    Manifest,
    Port,
    parse_annotations,
)
from .wire import decode_tensor, encode_tensor, read_control, write_control

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "Manifest",
    "Port",
    "parse_annotations",
    "encode_tensor",
    "decode_tensor",
    "read_control",
    "write_control",
]
