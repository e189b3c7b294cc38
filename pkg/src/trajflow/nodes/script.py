"""User-script node kind: ports come from annotations in the script source,
execution goes through a host subprocess speaking the tensor wire protocol.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from ..errors import BadParam, SourceReadError
from ..model.tensor import Tensor
from ..scripting.annotations import LEADERS, PortManifest, parse_annotations
from .base import NodeKind, PortSpec


def default_command(language: str) -> list[str] | None:
    """Host argv for scripts that do not specify one (script path appended)."""
    if language == "python":
        return [sys.executable, "-m", "pynode"]
    return None


class ScriptKind(NodeKind):
    """One configured script: language + path (+ optional host command).

    Unlike builtin kinds this is instantiated per node, because the port
    signature lives in the script file.
    """

    def __init__(self, language: str, path: str, command: list[str] | None = None,
                 base_dir: str | None = None):
        if language not in LEADERS:
            raise BadParam(f"script: unsupported language {language!r}")
        self.language = language
        self.path = Path(path)
        if base_dir is not None and not self.path.is_absolute():
            self.path = Path(base_dir) / self.path
        try:
            self.source = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise SourceReadError(f"cannot read script {str(self.path)!r}: {exc}") from exc
        self.manifest: PortManifest = parse_annotations(
            self.source, language, name=self.path.stem)
        self.name = "script"
        self.cacheable = not self.manifest.stateful

        if command is not None:
            if (not isinstance(command, list) or not command or
                    not all(isinstance(c, str) for c in command)):
                raise BadParam("script: command must be a non-empty list of strings")
            argv = [c.replace("{path}", str(self.path)) for c in command]
            if argv == command:  # no placeholder used anywhere
                argv.append(str(self.path))
            self.command = argv
        else:
            argv = default_command(language)
            if argv is None:
                raise BadParam(
                    f"script: language {language!r} requires an explicit command")
            self.command = argv + [str(self.path)]

    # -- NodeKind interface -------------------------------------------

    def identity(self) -> str:
        return f"script:{self.language}:{self.path}"

    def script_params(self, params: dict) -> dict:
        """Validate and extract the values for annotated param ports."""
        out = {}
        for port in self.manifest.params:
            if port.name not in params:
                raise BadParam(f"script: missing param {port.name!r}")
            value = params[port.name]
            raw = np.asarray(value)
            if raw.ndim != port.rank:
                raise BadParam(
                    f"script: param {port.name!r} must have rank {port.rank}")
            if raw.dtype.kind not in ("i", "u", "f") or \
                    (port.dtype == "i64" and raw.dtype.kind == "f"):
                raise BadParam(
                    f"script: param {port.name!r} must be {port.dtype} numbers")
            out[port.name] = value
        return out

    def ports(self, params):
        self.script_params(params)
        inputs = tuple(PortSpec(p.name, p.dtype, p.rank)
                       for p in self.manifest.inputs)
        outputs = tuple(PortSpec(p.name, p.dtype, p.rank)
                        for p in self.manifest.outputs)
        return inputs, outputs

    def env_reads(self, ctx, params):
        return [("script_source", self.source.encode("utf-8")),
                ("script_command", json.dumps(self.command).encode("utf-8"))]

    def run(self, ctx, inputs, params):
        host = getattr(ctx, "script_host", None)
        if host is None:
            raise BadParam("script node executed without a host handle")
        outputs = host.call(inputs, ctx.frame_index, self.script_params(params))
        return {name: Tensor(t.array) for name, t in outputs.items()}
