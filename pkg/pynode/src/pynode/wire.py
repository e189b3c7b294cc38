"""Binary tensor payloads and newline-JSON control frames.

Payload layout (little-endian throughout)::

    "AVTN" | dtype u8 (0=i64, 1=f64) | rank u8 | reserved u16 = 0
    | extents u64 x rank | array data, row-major

Control frames are single-line UTF-8 JSON objects carrying a "type" field;
the tensor payloads of an EXEC or OUT follow its control line immediately,
one per port in manifest order.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"AVTN"
PROTOCOL_VERSION = 1
HEADER = struct.Struct("<4sBBH")
EXTENT = struct.Struct("<Q")

CODE_OF = {"i64": 0, "f64": 1}
DTYPE_OF = {0: "i64", 1: "f64"}
NP_OF = {"i64": np.dtype("<i8"), "f64": np.dtype("<f8")}


class WireError(Exception):
    """Malformed payload or control frame."""


def encode_tensor(dtype: str, value) -> bytes:
    if dtype not in CODE_OF:
        raise WireError(f"unknown dtype {dtype!r}")
    arr = np.asarray(value, dtype=NP_OF[dtype])
    dims = np.asarray(arr.shape, dtype="<u8").tobytes()
    return (HEADER.pack(MAGIC, CODE_OF[dtype], arr.ndim, 0)
            + dims + arr.tobytes(order="C"))


def decode_tensor(buf: bytes) -> tuple[str, np.ndarray]:
    """Full-buffer decode; rejects trailing bytes."""
    if len(buf) < HEADER.size:
        raise WireError("short payload header")
    magic, code, rank, reserved = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise WireError(f"bad magic {magic!r}")
    if code not in DTYPE_OF:
        raise WireError(f"unknown dtype code {code}")
    if reserved:
        raise WireError(f"reserved field must be 0, got {reserved}")
    body = HEADER.size
    if len(buf) < body + rank * EXTENT.size:
        raise WireError("short extents block")
    shape = tuple(
        int(x) for x in np.frombuffer(buf, "<u8", count=rank, offset=body)
    )
    body += rank * EXTENT.size
    dtype = DTYPE_OF[code]
    count = 1
    for extent in shape:
        count *= extent
    if len(buf) != body + count * 8:
        raise WireError(
            f"payload is {len(buf)} bytes, expected {body + count * 8}")
    arr = np.frombuffer(buf, NP_OF[dtype], count=count, offset=body)
    return dtype, arr.reshape(shape).copy()


def write_payload(stream, dtype: str, value) -> None:
    stream.write(encode_tensor(dtype, value))


def read_payload(stream) -> tuple[str, np.ndarray]:
    """Blocking read of exactly one payload from a binary stream."""
    head = _exactly(stream, HEADER.size)
    rank = head[5]
    dims = _exactly(stream, rank * EXTENT.size)
    count = 1
    for i in range(rank):
        count *= EXTENT.unpack_from(dims, i * EXTENT.size)[0]
    data = _exactly(stream, count * 8)
    return decode_tensor(head + dims + data)


def _exactly(stream, n: int) -> bytes:
    parts = []
    missing = n
    while missing:
        chunk = stream.read(missing)
        if not chunk:
            raise WireError(f"stream closed {missing} bytes early")
        parts.append(chunk)
        missing -= len(chunk)
    return b"".join(parts)


def write_control(stream, message: dict) -> None:
    line = json.dumps(message, sort_keys=True, separators=(",", ":"))
    stream.write(line.encode("utf-8") + b"\n")


def read_control(stream) -> dict | None:
    """One JSON control frame, or None at end of stream."""
    line = stream.readline()
    if not line:
        return None
    try:
        message = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WireError(f"bad control line: {exc}") from exc
    if not isinstance(message, dict) or "type" not in message:
        raise WireError("control frame is not an object with a type")
    return message
