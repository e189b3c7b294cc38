"""The request loop: handshake, then one script execution per EXEC frame.

The script is compiled once with its own filename, after the declaration
line under each in/param annotation is replaced by a value binding — the
line count never changes, so tracebacks point at the user's real lines.
Stateless scripts run in a fresh namespace every call; a script annotated
``stateful`` keeps its globals for the life of the host.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
import traceback
from pathlib import Path

import numpy as np

from . import wire
from .annotations import AnnotationError, Manifest, binding_lines, parse_annotations

BIND = "__pynode_bind"


def _compile_script(path: Path, manifest: Manifest, source: str):
    lines = source.splitlines()
    targets = binding_lines(source)
    for port in manifest.inputs + manifest.params:
        lines[targets[port.name] - 1] = f"{port.name} = {BIND}[{port.name!r}]"
    return compile("\n".join(lines), str(path), "exec")


def _as_port_value(port, value):
    arr = np.asarray(value, dtype=wire.NP_OF[port.dtype])
    if port.rank == 0:
        return arr.reshape(())[()]
    return arr


def _script_line(exc: BaseException, path: Path) -> int | None:
    """Line of the deepest traceback frame inside the script itself."""
    line = None
    for entry in traceback.extract_tb(exc.__traceback__):
        if entry.filename == str(path):
            line = entry.lineno
    return line


def _execute(code, manifest: Manifest, scope: dict, path: Path) -> list[bytes]:
    """Run one call; returns encoded out payloads, raises on script errors."""
    # user print() goes to stderr: stdout belongs to the protocol
    with contextlib.redirect_stdout(sys.stderr):
        exec(code, scope)
    payloads = []
    for port in manifest.outputs:
        if port.name not in scope:
            raise NameError(f"script never assigned out port {port.name!r}")
        arr = np.asarray(scope[port.name], dtype=wire.NP_OF[port.dtype])
        if arr.ndim != port.rank:
            raise ValueError(
                f"out port {port.name!r} has rank {arr.ndim}, "
                f"annotated rank {port.rank}")
        payloads.append(wire.encode_tensor(port.dtype, arr))
    return payloads


def serve(path: Path, stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer

    source = path.read_text(encoding="utf-8")
    manifest = parse_annotations(source, "python", name=path.stem)
    code = _compile_script(path, manifest, source)

    wire.write_control(stdout, {"type": "HELLO",
                                "protocol": wire.PROTOCOL_VERSION})
    wire.write_control(stdout, {"type": "DESCRIBE",
                                "manifest": manifest.to_dict()})
    stdout.flush()

    keepalive: dict = {}
    while True:
        message = wire.read_control(stdin)
        if message is None or message["type"] == "BYE":
            return 0
        if message["type"] != "EXEC":
            continue
        # payloads always follow the EXEC line; consume them before anything
        # can fail, or the stream desynchronizes
        received = [wire.read_payload(stdin) for _ in manifest.inputs]
        call_id = message.get("call_id")
        try:
            bind = {port.name: arr
                    for port, (_, arr) in zip(manifest.inputs, received)}
            for port in manifest.params:
                bind[port.name] = _as_port_value(
                    port, message.get("params", {})[port.name])
            scope = keepalive if manifest.stateful else {}
            scope[BIND] = bind
            scope["frame"] = int(message.get("frame", 0))
            payloads = _execute(code, manifest, scope, path)
        except Exception as exc:  # noqa: BLE001 - reported to the engine
            note = f"{type(exc).__name__}: {exc}"
            line = _script_line(exc, path)
            if line is not None:
                note += f" (line {line})"
            wire.write_control(stdout, {"type": "ERROR", "call_id": call_id,
                                        "message": note})
            stdout.flush()
            continue
        wire.write_control(stdout, {"type": "OUT", "call_id": call_id})
        for blob in payloads:
            stdout.write(blob)
        stdout.flush()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pynode",
        description="Serve an annotated Python script over the tensor "
                    "wire protocol on stdin/stdout.")
    parser.add_argument("script", help="path to the annotated script")
    args = parser.parse_args(argv)

    path = Path(args.script)
    try:
        return serve(path)
    except OSError as exc:
        print(f"pynode: cannot read {args.script!r}: {exc}", file=sys.stderr)
        return 2
    except AnnotationError as exc:
        print(f"pynode: {args.script}: {exc}", file=sys.stderr)
        return 2
    except SyntaxError as exc:
        print(f"pynode: {args.script}: {exc}", file=sys.stderr)
        return 2
    except wire.WireError as exc:
        print(f"pynode: protocol failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
