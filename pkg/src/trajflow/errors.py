"""Exception hierarchy shared across the engine.

Every error carries a stable ``code`` string so the CLI and service can map
failures to exit codes / HTTP statuses without string matching.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class; ``code`` identifies the failure kind."""

    code = "engine_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


# -- tensors / arrays ------------------------------------------------------

class ShapeMismatch(EngineError):
    code = "shape_mismatch"


class LengthMismatch(EngineError):
    code = "length_mismatch"


class TypeMismatch(EngineError):
    code = "type_mismatch"


class RankMismatch(TypeMismatch):
    # a rank difference is one kind of port type incompatibility
    code = "rank_mismatch"


# -- trajectory / io -------------------------------------------------------

class IndexOutOfRange(EngineError):
    code = "index_out_of_range"


class SourceReadError(EngineError):
    code = "source_read"


class BadHeader(EngineError):
    code = "bad_header"


class RowArity(EngineError):
    code = "row_arity"


class InconsistentAtomCount(EngineError):
    code = "inconsistent_atom_count"


class BadRecord(EngineError):
    code = "bad_record"

    def __init__(self, message: str = "", line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingColumn(EngineError):
    code = "missing_column"


class BadItemHeader(EngineError):
    code = "bad_item_header"


class UnknownFormat(EngineError):
    code = "unknown_format"


# -- graph ----------------------------------------------------------------

class PortOccupied(EngineError):
    code = "port_occupied"


class CycleDetected(EngineError):
    code = "cycle_detected"


class UnknownNode(EngineError):
    code = "unknown_node"


class UnknownPort(EngineError):
    code = "unknown_port"


class UnknownKind(EngineError):
    code = "unknown_kind"


class BadParam(EngineError):
    code = "bad_param"


class BadGraph(EngineError):
    code = "bad_graph"


class NodeError(EngineError):
    """A node failed during execution; node/frame context added by the engine."""

    code = "node_error"

    def __init__(self, message: str, node_id: str | None = None,
                 frame: int | None = None):
        self.node_id = node_id
        self.frame = frame
        self.message = message
        prefix = f"node {node_id} at frame {frame}: " if node_id is not None else ""
        super().__init__(prefix + message)


# -- builtin node contracts -------------------------------------------------

class ComponentOutOfRange(EngineError):
    code = "component_out_of_range"


class BadRange(EngineError):
    code = "bad_range"


class NonPositiveScale(EngineError):
    code = "non_positive_scale"


class SelfBond(EngineError):
    code = "self_bond"


class NonFinite(EngineError):
    code = "non_finite"


class BadStep(EngineError):
    code = "bad_step"


# -- geometry -----------------------------------------------------------

class BoxTooSmall(EngineError):
    code = "box_too_small"


class TriclinicUnsupported(EngineError):
    code = "triclinic_unsupported"


class OrphanHydrogen(EngineError):
    code = "orphan_hydrogen"


# -- scripting ---------------------------------------------------------

class BadAnnotation(EngineError):
    code = "bad_annotation"

    def __init__(self, message: str = "", line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicatePort(EngineError):
    code = "duplicate_port"

    def __init__(self, message: str = "", line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoOutputs(EngineError):
    code = "no_outputs"


class SpawnFailed(EngineError):
    code = "spawn_failed"


class HandshakeTimeout(EngineError):
    code = "handshake_timeout"


class ManifestMismatch(EngineError):
    code = "manifest_mismatch"


class ProtocolViolation(EngineError):
    code = "protocol_violation"


class CallTimeout(EngineError):
    code = "call_timeout"
