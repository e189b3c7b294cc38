"""Subprocess node hosts: spawn, handshake, synchronous calls, shutdown.

The host process owns stdout for protocol traffic (its stderr passes
through for diagnostics). On startup it must send HELLO then DESCRIBE;
afterwards it answers each EXEC with OUT or ERROR. The engine side here
enforces deadlines with select(), so a wedged host surfaces as
HandshakeTimeout/CallTimeout instead of a hang.
"""

from __future__ import annotations

import select
import subprocess
import time

from ..errors import (
    CallTimeout,
    HandshakeTimeout,
    ManifestMismatch,
    NodeError,
    ProtocolViolation,
    SpawnFailed,
)
from ..model.tensor import Tensor
from . import wire
from .annotations import PortManifest

HANDSHAKE_TIMEOUT = 10.0
CALL_TIMEOUT = 300.0
SHUTDOWN_GRACE = 2.0


class _DeadlineReader:
    """Exact-byte and line reads from a pipe fd under a deadline."""

    def __init__(self, stream):
        self._stream = stream
        self._fd = stream.fileno()
        self._buf = b""

    def _fill(self, deadline: float, timeout_error) -> None:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise timeout_error
        ready, _, _ = select.select([self._fd], [], [], remaining)
        if not ready:
            raise timeout_error
        chunk = self._stream.read1(65536)
        if not chunk:
            raise ProtocolViolation("host closed its output stream")
        self._buf += chunk

    def read_line(self, deadline: float, timeout_error) -> bytes:
        while b"\n" not in self._buf:
            self._fill(deadline, timeout_error)
        line, self._buf = self._buf.split(b"\n", 1)
        return line

    def read_exact(self, n: int, deadline: float, timeout_error) -> bytes:
        while len(self._buf) < n:
            self._fill(deadline, timeout_error)
        out, self._buf = self._buf[:n], self._buf[n:]
        return out


class NodeHandle:
    """One live host subprocess; single-caller, synchronous per call."""

    def __init__(self, manifest: PortManifest, command: list[str],
                 handshake_timeout: float = HANDSHAKE_TIMEOUT,
                 call_timeout: float = CALL_TIMEOUT):
        self.manifest = manifest
        self.command = list(command)
        self.call_timeout = call_timeout
        self._call_id = 0
        self._closed = False
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise SpawnFailed(f"cannot start {self.command[0]!r}: {exc}") from exc
        self._reader = _DeadlineReader(self._proc.stdout)
        try:
            self._handshake(handshake_timeout)
        except Exception:
            self._kill()
            raise

    def _handshake(self, timeout: float) -> None:
        deadline = time.monotonic() + timeout
        err = HandshakeTimeout(
            f"no HELLO/DESCRIBE within {timeout}s from {self.command[0]!r}"
        )
        hello = wire.decode_control(self._reader.read_line(deadline, err))
        if hello.get("type") != "HELLO":
            raise ProtocolViolation(f"expected HELLO, got {hello.get('type')!r}")
        if hello.get("protocol") != wire.PROTOCOL_VERSION:
            raise ProtocolViolation(
                f"protocol {hello.get('protocol')!r}, want {wire.PROTOCOL_VERSION}"
            )
        describe = wire.decode_control(self._reader.read_line(deadline, err))
        if describe.get("type") != "DESCRIBE":
            raise ProtocolViolation(
                f"expected DESCRIBE, got {describe.get('type')!r}"
            )
        declared = PortManifest.from_dict(describe.get("manifest", {}))
        if not declared.compatible_with(self.manifest):
            raise ManifestMismatch(
                f"host ports {[p.to_dict() for p in declared.ports]} != "
                f"annotated ports {[p.to_dict() for p in self.manifest.ports]}"
            )

    def call(self, inputs: dict[str, Tensor], frame: int,
             params: dict | None = None) -> dict[str, Tensor]:
        if self._closed:
            raise ProtocolViolation("handle is closed")
        self._call_id += 1
        call_id = self._call_id
        stdin = self._proc.stdin
        stdin.write(wire.encode_control({
            "type": "EXEC", "call_id": call_id, "frame": int(frame),
            "params": params or {},
        }))
        for port in self.manifest.inputs:
            wire.write_tensor(stdin, inputs[port.name])
        stdin.flush()

        deadline = time.monotonic() + self.call_timeout
        err = CallTimeout(f"no reply within {self.call_timeout}s")
        reply = wire.decode_control(self._reader.read_line(deadline, err))
        kind = reply.get("type")
        if kind == "ERROR":
            raise NodeError(str(reply.get("message", "script error")))
        if kind != "OUT":
            raise ProtocolViolation(f"expected OUT/ERROR, got {kind!r}")
        if reply.get("call_id") != call_id:
            raise ProtocolViolation(
                f"reply call_id {reply.get('call_id')} != {call_id}"
            )
        outputs = {}
        for port in self.manifest.outputs:
            header = self._reader.read_exact(wire.HEADER_SIZE, deadline, err)
            rank, dims_bytes = wire.payload_size(header)
            dims = self._reader.read_exact(dims_bytes, deadline, err)
            data = self._reader.read_exact(
                wire.data_size(header, dims), deadline, err)
            tensor, _ = wire.decode_tensor_at(header + dims + data, 0)
            if tensor.dtype != port.dtype or tensor.rank != port.rank:
                raise ProtocolViolation(
                    f"port {port.name!r}: got {tensor.dtype} rank {tensor.rank}, "
                    f"manifest says {port.dtype} rank {port.rank}"
                )
            outputs[port.name] = tensor
        return outputs

    def close(self) -> None:
        """BYE, then reap; force kill after the grace period. Idempotent."""
        if self._closed:
            return
        self._closed = True
        try:
            self._proc.stdin.write(wire.encode_control({"type": "BYE"}))
            self._proc.stdin.flush()
            self._proc.stdin.close()
        except (BrokenPipeError, OSError, ValueError):
            pass
        try:
            self._proc.wait(timeout=SHUTDOWN_GRACE)
        except subprocess.TimeoutExpired:
            self._kill()
        self._reap_pipes()

    def _kill(self) -> None:
        self._proc.kill()
        try:
            self._proc.wait(timeout=SHUTDOWN_GRACE)
        except subprocess.TimeoutExpired:
            pass
        self._reap_pipes()

    @property
    def returncode(self):
        return self._proc.returncode

    def _reap_pipes(self) -> None:
        for stream in (self._proc.stdin, self._proc.stdout):
            try:
                if stream is not None:
                    stream.close()
            except OSError:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class LoopbackHost:
    """In-process stand-in that still round-trips every tensor on the wire.

    Useful for conformance tests and for running annotated python logic
    without a subprocess: semantics must match a real host exactly because
    all values pass through encode/decode.
    """

    def __init__(self, manifest: PortManifest, fn):
        self.manifest = manifest
        self._fn = fn
        self._closed = False

    def call(self, inputs: dict[str, Tensor], frame: int,
             params: dict | None = None) -> dict[str, Tensor]:
        if self._closed:
            raise ProtocolViolation("handle is closed")
        decoded = {
            port.name: wire.decode_tensor(wire.encode_tensor(inputs[port.name]))
            for port in self.manifest.inputs
        }
        raw = self._fn(decoded, int(frame), dict(params or {}))
        outputs = {}
        for port in self.manifest.outputs:
            if port.name not in raw:
                raise ProtocolViolation(f"loopback produced no {port.name!r}")
            tensor = wire.decode_tensor(wire.encode_tensor(raw[port.name]))
            if tensor.dtype != port.dtype or tensor.rank != port.rank:
                raise ProtocolViolation(
                    f"port {port.name!r}: got {tensor.dtype} rank {tensor.rank}, "
                    f"manifest says {port.dtype} rank {port.rank}"
                )
            outputs[port.name] = tensor
        return outputs

    def close(self) -> None:
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
