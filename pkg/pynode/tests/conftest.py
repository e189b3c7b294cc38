import subprocess
import sys
from pathlib import Path

import pytest

from pynode import wire

REPO = Path(__file__).resolve().parents[2]
SCRIPTS = REPO / "tests" / "fixtures" / "scripts"
PROTOCOL_FIXTURES = REPO / "fixtures" / "protocol"


class HostClient:
    """Minimal protocol client: spawn, handshake, call, shut down."""

    def __init__(self, script: Path):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "pynode", str(script)],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        self.hello = wire.read_control(self.proc.stdout)
        self.describe = wire.read_control(self.proc.stdout)
        self.manifest = self.describe["manifest"]
        self._calls = 0

    def call(self, inputs=(), frame=0, params=None):
        """inputs: (dtype, value) per in port, manifest order.

        Returns {"out": [(dtype, array), ...]} or {"error": message}.
        """
        self._calls += 1
        wire.write_control(self.proc.stdin, {
            "type": "EXEC", "call_id": self._calls, "frame": frame,
            "params": params or {}})
        for dtype, value in inputs:
            wire.write_payload(self.proc.stdin, dtype, value)
        self.proc.stdin.flush()
        reply = wire.read_control(self.proc.stdout)
        assert reply["call_id"] == self._calls
        if reply["type"] == "ERROR":
            return {"error": reply["message"]}
        assert reply["type"] == "OUT"
        n_out = sum(1 for p in self.manifest["ports"]
                    if p["direction"] == "out")
        return {"out": [wire.read_payload(self.proc.stdout)
                        for _ in range(n_out)]}

    def bye(self) -> int:
        wire.write_control(self.proc.stdin, {"type": "BYE"})
        self.proc.stdin.flush()
        return self.proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if self.proc.poll() is None:
            self.proc.kill()
            self.proc.wait(timeout=10)
        self.proc.stdin.close()
        self.proc.stdout.close()


@pytest.fixture
def spawn():
    def factory(script: Path) -> HostClient:
        return HostClient(script)
    return factory
