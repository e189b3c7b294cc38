"""Node catalog: builtin kinds self-register on import."""

from . import builtin, cluster, hydrate  # noqa: F401  (registration side effect)
from .base import KINDS, NodeContext, NodeKind, PortSpec, ports_compatible, resolve_kind
from .script import ScriptKind, default_command

__all__ = [
    "KINDS",
    "NodeContext",
    "NodeKind",
    "PortSpec",
    "ScriptKind",
    "default_command",
    "ports_compatible",
    "resolve_kind",
]
