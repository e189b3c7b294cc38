"""Bit-exact tensor wire encoding and the newline-JSON control framing.

Payload layout: magic "AVTN", dtype code u8 (0=i64, 1=f64), rank u8,
reserved u16 = 0, then rank extents as u64 little-endian, then the array
data little-endian row-major. Control frames are single-line UTF-8 JSON
objects with a "type" field (HELLO, DESCRIBE, EXEC, OUT, ERROR, BYE);
tensor payloads immediately follow EXEC/OUT lines, one per in/out port in
manifest order.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import ProtocolViolation
from ..model.tensor import DTYPES, Tensor

MAGIC = b"AVTN"
PROTOCOL_VERSION = 1
_HEADER = struct.Struct("<4sBBH")
_DIM = struct.Struct("<Q")

DTYPE_CODES = {"i64": 0, "f64": 1}
CODE_DTYPES = {code: name for name, code in DTYPE_CODES.items()}
_WIRE_NP = {"i64": np.dtype("<i8"), "f64": np.dtype("<f8")}


def encode_tensor(tensor: Tensor) -> bytes:
    # asarray, not ascontiguousarray: the latter would promote rank 0 to 1
    arr = np.asarray(tensor.array, dtype=_WIRE_NP[tensor.dtype])
    parts = [_HEADER.pack(MAGIC, DTYPE_CODES[tensor.dtype], arr.ndim, 0)]
    for extent in arr.shape:
        parts.append(_DIM.pack(extent))
    parts.append(arr.tobytes(order="C"))
    return b"".join(parts)


def decode_tensor(buf: bytes) -> Tensor:
    tensor, consumed = decode_tensor_at(buf, 0)
    if consumed != len(buf):
        raise ProtocolViolation(
            f"{len(buf) - consumed} trailing bytes after tensor payload"
        )
    return tensor


def decode_tensor_at(buf: bytes, offset: int) -> tuple[Tensor, int]:
    """Decode one payload starting at ``offset``; returns (tensor, end)."""
    if len(buf) - offset < _HEADER.size:
        raise ProtocolViolation("short tensor header")
    magic, code, rank, reserved = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise ProtocolViolation(f"bad magic {magic!r}")
    if code not in CODE_DTYPES:
        raise ProtocolViolation(f"unknown dtype code {code}")
    if reserved != 0:
        raise ProtocolViolation(f"reserved field is {reserved}, want 0")
    offset += _HEADER.size
    dims = []
    for _ in range(rank):
        if len(buf) - offset < _DIM.size:
            raise ProtocolViolation("short dims block")
        dims.append(_DIM.unpack_from(buf, offset)[0])
        offset += _DIM.size
    dtype = CODE_DTYPES[code]
    count = 1
    for d in dims:
        count *= d
    nbytes = count * 8
    if len(buf) - offset < nbytes:
        raise ProtocolViolation(
            f"short data block: want {nbytes} bytes, have {len(buf) - offset}"
        )
    flat = np.frombuffer(buf, dtype=_WIRE_NP[dtype], count=count, offset=offset)
    arr = flat.reshape(dims).astype(DTYPES[dtype])
    return Tensor(arr), offset + nbytes


def payload_size(header: bytes) -> tuple[int, int]:
    """(rank, dims byte count) from a fixed header, for incremental reads."""
    magic, code, rank, reserved = _HEADER.unpack_from(header, 0)
    if magic != MAGIC:
        raise ProtocolViolation(f"bad magic {magic!r}")
    if code not in CODE_DTYPES:
        raise ProtocolViolation(f"unknown dtype code {code}")
    if reserved != 0:
        raise ProtocolViolation(f"reserved field is {reserved}, want 0")
    return rank, rank * _DIM.size


HEADER_SIZE = _HEADER.size


def data_size(header: bytes, dims_block: bytes) -> int:
    rank = header[5]
    count = 1
    for i in range(rank):
        count *= _DIM.unpack_from(dims_block, i * _DIM.size)[0]
    return count * 8


def encode_control(message: dict) -> bytes:
    if "type" not in message:
        raise ProtocolViolation("control frame lacks a type")
    return (json.dumps(message, sort_keys=True, separators=(",", ":"))
            + "\n").encode("utf-8")


def decode_control(line: bytes) -> dict:
    try:
        message = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolViolation(f"bad control line: {exc}") from exc
    if not isinstance(message, dict) or "type" not in message:
        raise ProtocolViolation("control frame is not an object with a type")
    return message


def write_tensor(stream, tensor: Tensor) -> None:
    stream.write(encode_tensor(tensor))


def read_tensor(stream) -> Tensor:
    """Blocking read of exactly one payload from a binary stream."""
    header = _read_exact(stream, HEADER_SIZE)
    rank, dims_bytes = payload_size(header)
    dims_block = _read_exact(stream, dims_bytes)
    data = _read_exact(stream, data_size(header, dims_block))
    tensor, _ = decode_tensor_at(header + dims_block + data, 0)
    return tensor


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = stream.read(n - got)
        if not chunk:
            raise ProtocolViolation(f"stream closed after {got}/{n} bytes")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)
